"""File formats for recordings, annotations and derived artifacts.

Recordings persist either as ".mlm" binary (magic "MLM1", four
little-endian u32 header fields: sensor count, sample count, sample rate
in Hz, flags with bit 0 = preprocessed, then sample-major frames of
float32 little-endian sensor values) or as CSV with the fixed header
"index,s01,...,s36". Neither carries a patient id; readers derive it
from the file stem.

Detections, classifier models, PCA models, clustering results and
metrics reports each have a schema with an explicit schema_version;
version mismatches and malformed payloads raise FormatError naming the
offending byte offset, line or JSON path. All writers are deterministic
(sorted keys, no timestamps) so identical inputs give identical bytes.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from .cluster import ClusteringResult
from .cnn import PARAM_ORDER, ClassifierModel
from .detect import DetectedEvent, DetectionResult
from .errors import FormatError, InvalidParameterError
from .evaluate import Metrics, MetricsReport
from .pca import PcaModel
from .recording import AnnotationSet, ManometryRecording

SCHEMA_VERSION = 1
RECORDING_MAGIC = b"MLM1"
MODEL_MAGIC = b"MLW1"
FLAG_PREPROCESSED = 1
CSV_SENSORS = 36


def _check_schema_version(obj: dict, path: Path) -> None:
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(
            f"{path}: $.schema_version is {version!r}, this build reads version {SCHEMA_VERSION}"
        )


def _require(obj: Any, key: str, kind: type, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"{where}.{key} is missing")
    value = obj[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise FormatError(f"{where}.{key} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _dump_json(obj: dict, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load_json(path: Path) -> dict:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: top-level JSON value must be an object")
    return obj


# -- recordings ---------------------------------------------------------


def write_recording(r: ManometryRecording, path: str | Path) -> None:
    """Write a recording; the format follows the file extension."""
    path = Path(path)
    if path.suffix == ".mlm":
        _write_recording_binary(r, path)
    elif path.suffix == ".csv":
        _write_recording_csv(r, path)
    else:
        raise InvalidParameterError(f"unsupported recording extension {path.suffix!r}")


def read_recording(path: str | Path, preprocessed: bool | None = None) -> ManometryRecording:
    """Read a recording written by :func:`write_recording`.

    The binary format carries a preprocessed flag; CSV does not, so CSV
    input is treated as raw unless ``preprocessed=True`` is passed
    (passing it for .mlm overrides the header flag).
    """
    path = Path(path)
    if path.suffix == ".mlm":
        rec = _read_recording_binary(path)
    elif path.suffix == ".csv":
        rec = _read_recording_csv(path)
    else:
        raise InvalidParameterError(f"unsupported recording extension {path.suffix!r}")
    if preprocessed is not None and preprocessed != rec.preprocessed:
        rec = ManometryRecording(
            values=rec.values,
            sample_rate=rec.sample_rate,
            preprocessed=preprocessed,
            patient_id=rec.patient_id,
            meta=rec.meta,
        )
    return rec


def _write_recording_binary(r: ManometryRecording, path: Path) -> None:
    rate = round(r.sample_rate)
    if abs(r.sample_rate - rate) > 1e-9:
        raise FormatError(
            f"binary format stores the sample rate as an integer, got {r.sample_rate}"
        )
    flags = FLAG_PREPROCESSED if r.preprocessed else 0
    header = RECORDING_MAGIC + struct.pack("<4I", r.sensors, r.samples, int(rate), flags)
    frames = np.ascontiguousarray(r.values.T, dtype="<f4")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frames.tobytes())


def _read_recording_binary(path: Path) -> ManometryRecording:
    data = Path(path).read_bytes()
    if len(data) < 20:
        raise FormatError(f"{path}: truncated header, {len(data)} bytes < 20")
    if data[:4] != RECORDING_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r} at byte offset 0")
    sensors, samples, rate, flags = struct.unpack("<4I", data[4:20])
    if sensors < 1 or samples < 1:
        raise FormatError(f"{path}: inconsistent header, {sensors} sensors x {samples} samples")
    expected = 20 + 4 * sensors * samples
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload ends at byte {len(data)}, header implies {expected}"
        )
    frames = np.frombuffer(data, dtype="<f4", offset=20).reshape(samples, sensors)
    return ManometryRecording(
        values=frames.T,
        sample_rate=float(rate),
        preprocessed=bool(flags & FLAG_PREPROCESSED),
        patient_id=path.stem,
    )


def _write_recording_csv(r: ManometryRecording, path: Path) -> None:
    if r.sensors != CSV_SENSORS:
        raise FormatError(f"CSV format is fixed to {CSV_SENSORS} sensors, got {r.sensors}")
    header = "index," + ",".join(f"s{i:02d}" for i in range(1, CSV_SENSORS + 1))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for j in range(r.samples):
            row = ",".join(f"{v:.9g}" for v in r.values[:, j])
            fh.write(f"{j},{row}\n")


def _read_recording_csv(path: Path) -> ManometryRecording:
    expected_header = "index," + ",".join(f"s{i:02d}" for i in range(1, CSV_SENSORS + 1))
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != expected_header:
            raise FormatError(
                f"{path}: line 1 header mismatch, expected {CSV_SENSORS} sensor columns "
                f"'index,s01,...,s{CSV_SENSORS}'"
            )
        columns: list[np.ndarray] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != CSV_SENSORS + 1:
                raise FormatError(
                    f"{path}: line {lineno} has {len(parts)} fields, expected {CSV_SENSORS + 1}"
                )
            try:
                if int(parts[0]) != lineno - 2:
                    raise ValueError
                columns.append(np.array(parts[1:], dtype=np.float32))
            except ValueError:
                raise FormatError(f"{path}: line {lineno} is not a valid sample row") from None
    if not columns:
        raise FormatError(f"{path}: no sample rows")
    values = np.stack(columns, axis=1)
    return ManometryRecording(values=values, preprocessed=False, patient_id=path.stem)


# -- annotations --------------------------------------------------------


def write_annotations(ann: AnnotationSet, path: str | Path) -> None:
    _dump_json({"recording_id": ann.recording_id, "starts": [int(s) for s in ann.starts]}, Path(path))


def read_annotations(path: str | Path) -> AnnotationSet:
    path = Path(path)
    obj = _load_json(path)
    recording_id = _require(obj, "recording_id", str, "$")
    starts = _require(obj, "starts", list, "$")
    for i, s in enumerate(starts):
        if not isinstance(s, int) or isinstance(s, bool):
            raise FormatError(f"{path}: $.starts[{i}] must be an integer")
    try:
        return AnnotationSet(recording_id=recording_id, starts=np.array(starts, dtype=np.int64))
    except Exception as exc:
        raise FormatError(f"{path}: $.starts invalid: {exc}") from exc


# -- detections ---------------------------------------------------------


def write_detections(result: DetectionResult, path: str | Path) -> None:
    obj = {
        "schema_version": SCHEMA_VERSION,
        "recording_id": result.recording_id,
        "method": result.method,
        "params_digest": result.params_digest,
        "events": [
            {
                "start": int(e.start),
                "span": [int(e.span[0]), int(e.span[1])],
                "confidence": float(e.confidence),
            }
            for e in result.events
        ],
    }
    _dump_json(obj, Path(path))


def read_detections(path: str | Path) -> DetectionResult:
    path = Path(path)
    obj = _load_json(path)
    _check_schema_version(obj, path)
    events = []
    for i, entry in enumerate(_require(obj, "events", list, "$")):
        where = f"$.events[{i}]"
        start = _require(entry, "start", int, where)
        span = _require(entry, "span", list, where)
        if len(span) != 2 or not all(isinstance(v, int) for v in span):
            raise FormatError(f"{path}: {where}.span must be [first, last]")
        if span[0] > span[1]:
            raise FormatError(f"{path}: {where}.span is degenerate ({span[0]} > {span[1]})")
        confidence = _require(entry, "confidence", float, where)
        if not 0.0 <= confidence <= 1.0:
            raise FormatError(f"{path}: {where}.confidence outside [0, 1]")
        events.append(DetectedEvent(start=start, span=(span[0], span[1]), confidence=confidence))
    return DetectionResult(
        recording_id=_require(obj, "recording_id", str, "$"),
        method=_require(obj, "method", str, "$"),
        params_digest=_require(obj, "params_digest", str, "$"),
        events=events,
    )


# -- classifier models --------------------------------------------------


def write_model(model: ClassifierModel, path: str | Path) -> None:
    """Binary weight file: magic, u32 header length, JSON header, float64 blobs."""
    header = {
        "schema_version": model.schema_version,
        "input_side": model.input_side,
        "raw_window_shape": list(model.raw_window_shape),
        "training_meta": model.training_meta,
        "epoch_losses": model.epoch_losses,
        "params": [
            {"name": name, "shape": list(model.params[name].shape)} for name in PARAM_ORDER
        ],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in PARAM_ORDER:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def read_model(path: str | Path) -> ClassifierModel:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 8:
        raise FormatError(f"{path}: truncated header, {len(data)} bytes < 8")
    if data[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r} at byte offset 0")
    (header_len,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + header_len:
        raise FormatError(f"{path}: header declared {header_len} bytes, payload ends early")
    try:
        header = json.loads(data[8 : 8 + header_len])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid header JSON: {exc.msg}") from exc
    if header.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(
            f"{path}: $.schema_version is {header.get('schema_version')!r}, "
            f"this build reads version {SCHEMA_VERSION}"
        )
    entries = _require(header, "params", list, "$")
    declared = [entry["name"] for entry in entries]
    if declared != list(PARAM_ORDER):
        raise FormatError(f"{path}: $.params order {declared} != {list(PARAM_ORDER)}")
    params: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for entry in entries:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(data):
            raise FormatError(f"{path}: weights truncated at byte offset {len(data)}, need {end}")
        params[entry["name"]] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset = end
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after weights")
    raw_shape = _require(header, "raw_window_shape", list, "$")
    return ClassifierModel(
        params=params,
        input_side=_require(header, "input_side", int, "$"),
        raw_window_shape=(int(raw_shape[0]), int(raw_shape[1])),
        training_meta=_require(header, "training_meta", dict, "$"),
        epoch_losses=[float(x) for x in header.get("epoch_losses", [])],
        schema_version=SCHEMA_VERSION,
    )


# -- PCA models ---------------------------------------------------------


def pca_to_dict(model: PcaModel) -> dict:
    return {
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "explained_variance": model.explained_variance.tolist(),
    }


def pca_from_dict(obj: dict, where: str) -> PcaModel:
    try:
        return PcaModel(
            mean=np.array(obj["mean"], dtype=np.float64),
            components=np.array(obj["components"], dtype=np.float64),
            explained_variance=np.array(obj["explained_variance"], dtype=np.float64),
        )
    except KeyError as exc:
        raise FormatError(f"{where}.{exc.args[0]} is missing") from exc


def write_pca(model: PcaModel, path: str | Path) -> None:
    obj = {"schema_version": SCHEMA_VERSION}
    obj.update(pca_to_dict(model))
    _dump_json(obj, Path(path))


def read_pca(path: str | Path) -> PcaModel:
    path = Path(path)
    obj = _load_json(path)
    _check_schema_version(obj, path)
    return pca_from_dict(obj, "$")


# -- clustering results -------------------------------------------------


def write_clustering(result: ClusteringResult, path: str | Path) -> None:
    swallows = []
    for i, (sid, assignment) in enumerate(zip(result.swallow_ids, result.assignments)):
        swallows.append(
            {
                "recording_id": sid[0],
                "start": int(sid[1]),
                "stage": assignment[0],
                "cluster": int(assignment[1]),
                "distance": float(result.distances[i]),
                "reduced": result.reduced[i].tolist(),
            }
        )
    clusters = []
    for key in sorted(result.centroids):
        closest, farthest = result.representatives[key]
        clusters.append(
            {
                "stage": key[0],
                "cluster": int(key[1]),
                "size": len(result.members(key)),
                "centroid": result.centroids[key].tolist(),
                "closest": {"recording_id": closest[0], "start": int(closest[1])},
                "most_distant": {"recording_id": farthest[0], "start": int(farthest[1])},
            }
        )
    obj = {
        "schema_version": SCHEMA_VERSION,
        "method": result.method,
        "chosen_k": result.chosen_k,
        "k_scores": {str(k): float(v) for k, v in result.k_scores.items()},
        "main_cluster_ids": result.main_cluster_ids,
        "stage2_k": result.stage2_k,
        "swallows": swallows,
        "clusters": clusters,
        "pca": pca_to_dict(result.pca),
    }
    _dump_json(obj, Path(path))


def read_clustering(path: str | Path) -> ClusteringResult:
    path = Path(path)
    obj = _load_json(path)
    _check_schema_version(obj, path)
    swallows = _require(obj, "swallows", list, "$")
    swallow_ids = []
    assignments = []
    distances = []
    reduced = []
    for i, s in enumerate(swallows):
        where = f"$.swallows[{i}]"
        swallow_ids.append((_require(s, "recording_id", str, where), _require(s, "start", int, where)))
        stage = _require(s, "stage", str, where)
        if stage not in ("main", "special"):
            raise FormatError(f"{path}: {where}.stage must be 'main' or 'special'")
        assignments.append((stage, _require(s, "cluster", int, where)))
        distances.append(_require(s, "distance", float, where))
        reduced.append(np.array(_require(s, "reduced", list, where), dtype=np.float64))
    result = ClusteringResult(
        method=_require(obj, "method", str, "$"),
        swallow_ids=swallow_ids,
        assignments=assignments,
        reduced=np.stack(reduced) if reduced else np.zeros((0, 0)),
        pca=pca_from_dict(_require(obj, "pca", dict, "$"), "$.pca"),
        chosen_k=_require(obj, "chosen_k", int, "$"),
        k_scores={int(k): float(v) for k, v in _require(obj, "k_scores", dict, "$").items()},
        main_cluster_ids=[int(c) for c in _require(obj, "main_cluster_ids", list, "$")],
        stage2_k=_require(obj, "stage2_k", int, "$"),
        distances=np.array(distances, dtype=np.float64),
    )
    for i, c in enumerate(_require(obj, "clusters", list, "$")):
        where = f"$.clusters[{i}]"
        key = (_require(c, "stage", str, where), _require(c, "cluster", int, where))
        result.centroids[key] = np.array(_require(c, "centroid", list, where), dtype=np.float64)
        closest = _require(c, "closest", dict, where)
        farthest = _require(c, "most_distant", dict, where)
        result.representatives[key] = (
            (closest["recording_id"], int(closest["start"])),
            (farthest["recording_id"], int(farthest["start"])),
        )
    return result


# -- metrics reports ----------------------------------------------------


def _metrics_to_dict(m: Metrics) -> dict:
    return {
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "undefined": list(m.undefined),
    }


def write_metrics(report: MetricsReport, path: str | Path) -> None:
    obj = {
        "schema_version": SCHEMA_VERSION,
        "d": report.d,
        "mode": report.mode,
        "tp": report.tp,
        "fp": report.fp,
        "fn": report.fn,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "per_fold": [_metrics_to_dict(m) for m in report.per_fold],
        "mean_std": {k: [v[0], v[1]] for k, v in report.mean_std.items()},
        "distances": [int(d) for d in report.distances],
        "undefined": list(report.undefined),
    }
    _dump_json(obj, Path(path))


def read_metrics(path: str | Path) -> MetricsReport:
    path = Path(path)
    obj = _load_json(path)
    _check_schema_version(obj, path)
    per_fold = [
        Metrics(
            tp=_require(m, "tp", int, f"$.per_fold[{i}]"),
            fp=_require(m, "fp", int, f"$.per_fold[{i}]"),
            fn=_require(m, "fn", int, f"$.per_fold[{i}]"),
            precision=_require(m, "precision", float, f"$.per_fold[{i}]"),
            recall=_require(m, "recall", float, f"$.per_fold[{i}]"),
            f1=_require(m, "f1", float, f"$.per_fold[{i}]"),
            undefined=tuple(m.get("undefined", [])),
        )
        for i, m in enumerate(obj.get("per_fold", []))
    ]
    return MetricsReport(
        tp=_require(obj, "tp", int, "$"),
        fp=_require(obj, "fp", int, "$"),
        fn=_require(obj, "fn", int, "$"),
        precision=_require(obj, "precision", float, "$"),
        recall=_require(obj, "recall", float, "$"),
        f1=_require(obj, "f1", float, "$"),
        per_fold=per_fold,
        mean_std={k: (float(v[0]), float(v[1])) for k, v in obj.get("mean_std", {}).items()},
        distances=[int(d) for d in obj.get("distances", [])],
        undefined=tuple(obj.get("undefined", [])),
        d=_require(obj, "d", int, "$"),
        mode=_require(obj, "mode", str, "$"),
    )
