"""Command line front end for the swallow detection toolkit.

Exit codes: 0 on success, 1 for usage and parameter errors, 2 for
unreadable or inconsistent data. Every subcommand accepts --config (a
JSON file of per-stage defaults) and --seed; explicit flags win over the
config file, which wins over built-in defaults.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .baseline import BaselineParams, detect_baseline
from .cluster import two_stage_clustering
from .cnn import TrainingConfig, train_classifier
from .config import RunConfig, load_config
from .detect import detect_ml
from .errors import FormatError, InvalidDataError, InvalidParameterError, InvalidStateError
from .evaluate import MatchConfig, cross_validate, distance_histogram, match_events, score_detections
from .features import build_features
from .pipeline import (
    collect_training_windows,
    ensure_preprocessed,
    make_baseline_pipeline,
    make_ml_pipeline,
)
from .preprocess import preprocess_recording
from .report import render_metrics_table, write_report
from .synth import SynthConfig, generate_recording
from .windows import WINDOW_LEN


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _pick(flag, default):
    return default if flag is None else flag


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _parse_pairs(items: list[str]) -> list[tuple[str, str]]:
    pairs = []
    for item in items:
        rec_path, sep, ann_path = item.rpartition(":")
        if not sep or not rec_path or not ann_path:
            raise InvalidParameterError(f"--data expects RECORDING:ANNOTATIONS, got {item!r}")
        pairs.append((rec_path, ann_path))
    return pairs


def _read_pairs(items: list[str]):
    pairs = []
    for rec_path, ann_path in _parse_pairs(items):
        rec = io.read_recording(rec_path)
        ann = io.read_annotations(ann_path)
        ann.validate_against(rec)
        pairs.append((rec, ann))
    return pairs


def _cmd_synth(args) -> int:
    cfg = _load(args)
    s = cfg.synth
    scfg = SynthConfig(
        duration_s=_pick(args.duration_s, s.duration_s),
        n_swallows=_pick(args.n_swallows, s.n_swallows),
        sample_rate=_pick(args.sample_rate, s.sample_rate),
        min_gap_s=_pick(args.min_gap_s, s.min_gap_s),
        noise_std=_pick(args.noise_std, s.noise_std),
        rng_seed=cfg.seed,
        patient_id=args.patient_id or Path(args.out).stem,
    )
    rec, ann = generate_recording(scfg)
    io.write_recording(rec, args.out)
    io.write_annotations(ann, args.annotations)
    print(
        f"wrote {args.out} ({rec.sensors} sensors x {rec.samples} samples) "
        f"and {args.annotations} ({len(ann)} swallows)"
    )
    return 0


def _cmd_preprocess(args) -> int:
    cfg = _load(args)
    rec = io.read_recording(args.input)
    out = preprocess_recording(rec, _pick(args.window, cfg.preprocess.w))
    io.write_recording(out, args.out)
    print(f"wrote {args.out} ({out.sensors} sensors x {out.samples} samples, scaled 0-255)")
    return 0


def _cmd_detect_baseline(args) -> int:
    cfg = _load(args)
    b = cfg.baseline
    params = BaselineParams(
        binarize_threshold=_pick(args.threshold, b.binarize_threshold),
        vertical_window=_pick(args.activity_window, b.vertical_window),
        smooth_window=_pick(args.smooth_window, b.smooth_window),
        peak_height=_pick(args.peak_height, b.peak_height),
        peak_distance=_pick(args.peak_distance, b.peak_distance),
    )
    rec = ensure_preprocessed(io.read_recording(args.input), cfg.preprocess.w)
    result = detect_baseline(rec, params)
    io.write_detections(result, args.out)
    print(f"wrote {args.out} ({len(result.events)} events)")
    return 0


def _cmd_train(args) -> int:
    cfg = _load(args)
    m = cfg.ml
    pairs = _read_pairs(args.data)
    data, stats = collect_training_windows(
        pairs,
        neg_per_pos=_pick(args.neg_per_pos, m.neg_per_pos),
        base_seed=cfg.seed,
        preprocess_w=cfg.preprocess.w,
    )
    tcfg = TrainingConfig(
        learning_rate=_pick(args.learning_rate, m.learning_rate),
        batch_size=_pick(args.batch_size, m.batch_size),
        epochs=_pick(args.epochs, m.epochs),
        seed=cfg.seed,
        input_side=_pick(args.input_side, m.input_side),
    )
    pos = sum(s.positives for s in stats)
    neg = sum(s.negatives for s in stats)
    shortfall = sum(s.negative_shortfall for s in stats)
    if shortfall:
        print(f"warning: {shortfall} negative windows could not be sampled", file=sys.stderr)
    model = train_classifier(data, tcfg)
    io.write_model(model, args.out)
    print(
        f"trained on {pos} positive / {neg} negative windows, "
        f"final epoch loss {model.epoch_losses[-1]:.4f}"
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_detect(args) -> int:
    cfg = _load(args)
    m = cfg.ml
    model = io.read_model(args.model)
    rec = ensure_preprocessed(io.read_recording(args.input), cfg.preprocess.w)
    result = detect_ml(
        model,
        rec,
        stride=_pick(args.stride, m.stride),
        smooth_w=_pick(args.smooth_window, m.smooth_w),
        threshold=_pick(args.threshold, m.threshold),
    )
    io.write_detections(result, args.out)
    print(f"wrote {args.out} ({len(result.events)} events)")
    return 0


def _starts_for_clustering(args, rec) -> np.ndarray:
    if args.detections:
        det = io.read_detections(args.detections)
        if det.recording_id != rec.patient_id:
            raise InvalidDataError(
                f"detections are for recording {det.recording_id!r}, input is {rec.patient_id!r}"
            )
        return np.asarray(det.starts, dtype=np.int64)
    ann = io.read_annotations(args.annotations)
    if ann.recording_id != rec.patient_id:
        raise InvalidDataError(
            f"annotations are for recording {ann.recording_id!r}, input is {rec.patient_id!r}"
        )
    ann.validate_against(rec)
    return ann.starts


def _cmd_cluster(args) -> int:
    cfg = _load(args)
    c = cfg.cluster
    rec = ensure_preprocessed(io.read_recording(args.input), cfg.preprocess.w)
    starts = _starts_for_clustering(args, rec)
    values = np.asarray(rec.values, dtype=np.float64)
    windows = []
    skipped = 0
    for y in starts:
        if y + WINDOW_LEN > rec.samples:
            skipped += 1
            continue
        windows.append(((rec.patient_id, int(y)), values[:, y : y + WINDOW_LEN]))
    if skipped:
        print(f"warning: skipped {skipped} starts within {WINDOW_LEN} samples of the end", file=sys.stderr)
    features = build_features(windows, blur_sigma=_pick(args.blur_sigma, c.blur_sigma))
    result = two_stage_clustering(
        features,
        method=_pick(args.method, c.method),
        n_components=_pick(args.components, c.n_components),
        k_min=_pick(args.k_min, c.k_min),
        k_max=_pick(args.k_max, c.k_max),
        stage2_k=_pick(args.stage2_k, c.stage2_k),
    )
    io.write_clustering(result, args.out)
    n_special = len(result.swallow_ids) - sum(
        len(result.members(("main", c))) for c in result.main_cluster_ids
    )
    print(
        f"wrote {args.out}: {len(result.swallow_ids)} swallows, stage-1 k={result.chosen_k}, "
        f"main clusters {result.main_cluster_ids}, {n_special} re-clustered with k={result.stage2_k}"
    )
    return 0


def _match_config(args, cfg: RunConfig) -> MatchConfig:
    return MatchConfig(d=_pick(args.d, cfg.eval.d), mode=_pick(args.mode, cfg.eval.mode))


def _cmd_eval(args) -> int:
    cfg = _load(args)
    mcfg = _match_config(args, cfg)
    if args.data:
        if args.detector is None:
            raise InvalidParameterError("--data needs --detector (ml or baseline)")
        pairs = _read_pairs(args.data)
        if args.detector == "baseline":
            b = cfg.baseline
            pipeline = make_baseline_pipeline(
                BaselineParams(
                    b.binarize_threshold, b.vertical_window, b.smooth_window,
                    b.peak_height, b.peak_distance,
                ),
                preprocess_w=cfg.preprocess.w,
            )
        else:
            m = cfg.ml
            pipeline = make_ml_pipeline(
                TrainingConfig(m.learning_rate, m.batch_size, m.epochs, cfg.seed, m.input_side),
                neg_per_pos=m.neg_per_pos,
                stride=m.stride,
                smooth_w=m.smooth_w,
                threshold=m.threshold,
                window_seed=cfg.seed,
                preprocess_w=cfg.preprocess.w,
            )
        report = cross_validate(
            pairs, pipeline, folds=_pick(args.folds, cfg.eval.folds), cfg=mcfg, rng_seed=cfg.seed
        )
        label = args.detector
    else:
        if not (args.annotations and args.detections):
            raise InvalidParameterError(
                "eval needs either --annotations with --detections, or --data with --detector"
            )
        ann = io.read_annotations(args.annotations)
        det = io.read_detections(args.detections)
        if ann.recording_id != det.recording_id:
            raise InvalidDataError(
                f"annotations are for {ann.recording_id!r}, detections for {det.recording_id!r}"
            )
        report = score_detections(ann.starts, det.starts, mcfg)
        label = det.method
    io.write_metrics(report, args.out)
    print(render_metrics_table({label: report}))
    if report.undefined:
        print(f"note: undefined (zero denominator): {', '.join(report.undefined)}")
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args) -> int:
    cfg = _load(args)
    rec = ensure_preprocessed(io.read_recording(args.input), cfg.preprocess.w)
    clustering = io.read_clustering(args.clustering)
    metrics = {}
    for item in args.metrics or []:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).stem, item
        metrics[name] = io.read_metrics(path)
    hist = None
    if args.annotations and args.detections:
        ann = io.read_annotations(args.annotations)
        det = io.read_detections(args.detections)
        _, _, _, _, dists = match_events(ann.starts, det.starts, _match_config(args, cfg))
        hist = distance_histogram(dists)
    index = write_report(args.out, clustering, rec, metrics=metrics or None, histogram=hist)
    print(f"wrote {index}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lthrm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file with per-stage defaults")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic recording")
    p.add_argument("--out", required=True, help="output recording (.mlm or .csv)")
    p.add_argument("--annotations", required=True, help="output ground-truth JSON")
    p.add_argument("--patient-id", help="recording id (default: output file stem)")
    p.add_argument("--duration-s", type=float)
    p.add_argument("--n-swallows", type=int)
    p.add_argument("--min-gap-s", type=float)
    p.add_argument("--noise-std", type=float)
    p.add_argument("--sample-rate", type=float)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("preprocess", parents=[common], help="smooth, clip and scale a raw recording")
    p.add_argument("--in", dest="input", required=True, help="input recording (.mlm or .csv)")
    p.add_argument("--out", required=True, help="output recording")
    p.add_argument("--window", type=int, help="moving-average width in samples")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("detect-baseline", parents=[common], help="threshold-based swallow detection")
    p.add_argument("--in", dest="input", required=True, help="recording (preprocessed on the fly if raw)")
    p.add_argument("--out", required=True, help="output detections JSON")
    p.add_argument("--threshold", type=float, help="binarization threshold on the 0-255 scale")
    p.add_argument("--activity-window", type=int, help="vertical moving-sum width in sensors")
    p.add_argument("--smooth-window", type=int, help="activity smoothing width in samples")
    p.add_argument("--peak-height", type=float, help="minimum smoothed activity at a peak")
    p.add_argument("--peak-distance", type=int, help="minimum samples between peaks")
    p.set_defaults(func=_cmd_detect_baseline)

    p = sub.add_parser("train", parents=[common], help="train the window classifier")
    p.add_argument(
        "--data", nargs="+", required=True, metavar="REC:ANN",
        help="recording:annotations path pairs",
    )
    p.add_argument("--out", required=True, help="output model (.mlw)")
    p.add_argument("--input-side", type=int, help="square side windows are resized to")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--neg-per-pos", type=float, help="negative windows sampled per positive")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", parents=[common], help="classifier-based swallow detection")
    p.add_argument("--model", required=True, help="trained model (.mlw)")
    p.add_argument("--in", dest="input", required=True, help="recording (preprocessed on the fly if raw)")
    p.add_argument("--out", required=True, help="output detections JSON")
    p.add_argument("--stride", type=int, help="sliding-window step in samples")
    p.add_argument("--smooth-window", type=int, help="score smoothing width in windows")
    p.add_argument("--threshold", type=float, help="smoothed-score threshold in (0, 1)")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("cluster", parents=[common], help="two-stage clustering of swallow windows")
    p.add_argument("--in", dest="input", required=True, help="recording the swallows come from")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--detections", help="detections JSON with start samples")
    src.add_argument("--annotations", help="annotations JSON with start samples")
    p.add_argument("--out", required=True, help="output clustering JSON")
    p.add_argument("--method", choices=["kmeans", "agglomerative"])
    p.add_argument("--components", type=int, help="PCA dimensions")
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--stage2-k", type=int, help="cluster count for the residual stage")
    p.add_argument("--blur-sigma", type=float)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("eval", parents=[common], help="score detections or cross-validate a detector")
    p.add_argument("--annotations", help="ground-truth JSON (single-recording mode)")
    p.add_argument("--detections", help="detections JSON (single-recording mode)")
    p.add_argument(
        "--data", nargs="+", metavar="REC:ANN",
        help="recording:annotations pairs (cross-validation mode)",
    )
    p.add_argument("--detector", choices=["ml", "baseline"], help="detector to cross-validate")
    p.add_argument("--folds", type=int)
    p.add_argument("--d", type=int, help="match tolerance in samples")
    p.add_argument("--mode", choices=["start_centered", "event_forward", "event_asymmetric"])
    p.add_argument("--out", required=True, help="output metrics JSON")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", parents=[common], help="render a static HTML report")
    p.add_argument("--clustering", required=True, help="clustering JSON")
    p.add_argument("--in", dest="input", required=True, help="recording the swallows come from")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--metrics", nargs="+", metavar="NAME=PATH",
        help="metrics JSON files to tabulate (NAME= prefix optional)",
    )
    p.add_argument("--annotations", help="with --detections: render a distance histogram")
    p.add_argument("--detections", help="with --annotations: render a distance histogram")
    p.add_argument("--d", type=int, help="match tolerance for the histogram")
    p.add_argument("--mode", choices=["start_centered", "event_forward", "event_asymmetric"])
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except InvalidParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (InvalidDataError, InvalidStateError, FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
