"""Static reporting: cluster montages, error histograms, metric tables.

Images are grayscale PNGs rendered straight from numpy arrays; the index
is a static HTML page. Nothing here embeds timestamps or environment
details, so rerunning a pipeline reproduces the report byte for byte.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .cluster import ClusteringResult
from .errors import InvalidDataError
from .evaluate import DistanceHistogram, MetricsReport
from .recording import ManometryRecording
from .windows import WINDOW_LEN

# Published inter-rater agreement for manual review of detected swallows,
# conventional full-recording review vs cluster-grouped review.
KAPPA_REFERENCE_CONVENTIONAL = 0.53
KAPPA_REFERENCE_CLUSTERED = 0.73

_ROW_SCALE = 3
_SEPARATOR_PX = 4
_MONTAGE_PANELS = 10  # medoid + 8 nearest + most distant


def save_grayscale_png(img: np.ndarray, path: str | Path) -> None:
    """Write a 2-D uint8 array as a grayscale PNG."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise InvalidDataError("expected a 2-D uint8 image")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def window_panel(window: np.ndarray) -> np.ndarray:
    """Render one preprocessed window as a grayscale panel."""
    w = np.asarray(window, dtype=np.float64)
    panel = np.clip(np.round(w), 0, 255).astype(np.uint8)
    return np.repeat(panel, _ROW_SCALE, axis=0)


def montage(windows: list[np.ndarray]) -> np.ndarray:
    """Stack window panels vertically with white separators."""
    if not windows:
        raise InvalidDataError("montage needs at least one window")
    panels = [window_panel(w) for w in windows]
    width = panels[0].shape[1]
    separator = np.full((_SEPARATOR_PX, width), 255, dtype=np.uint8)
    rows: list[np.ndarray] = []
    for i, panel in enumerate(panels):
        if i:
            rows.append(separator)
        rows.append(panel)
    return np.vstack(rows)


def histogram_image(hist: DistanceHistogram, height: int = 240, bar_px: int = 12) -> np.ndarray:
    """Bar-chart rendering of a distance histogram (black bars on white)."""
    n = int(hist.counts.size)
    width = max(n * bar_px + 2, 32)
    img = np.full((height, width), 255, dtype=np.uint8)
    img[-1, :] = 0  # axis
    if n == 0:
        return img
    top = int(hist.counts.max())
    usable = height - 12
    for b in range(n):
        if hist.counts[b] == 0:
            continue
        h = max(1, int(round(usable * hist.counts[b] / top)))
        x0 = 1 + b * bar_px
        img[height - 1 - h : height - 1, x0 : x0 + bar_px - 1] = 0
    if hist.edges[0] <= 0 <= hist.edges[-1]:
        # gray tick where the signed distance crosses zero
        x = 1 + int(round((0 - hist.edges[0]) / hist.bin_width * bar_px))
        img[:, min(x, width - 1)] = np.minimum(img[:, min(x, width - 1)], 160)
    return img


def _fmt_pct(value: float) -> str:
    return f"{100.0 * value:.2f}"


def render_metrics_table(rows: dict[str, MetricsReport]) -> str:
    """Fixed-width table of precision/recall/F1, mean +- std over folds."""
    header = f"{'Method':<16}{'Precision (%)':<18}{'Recall (%)':<18}{'F1-Score (%)':<18}"
    lines = [header, "-" * len(header)]
    for name, report in rows.items():
        cells = []
        for metric in ("precision", "recall", "f1"):
            if report.mean_std:
                mean, std = report.mean_std[metric]
                cells.append(f"{_fmt_pct(mean)} +- {_fmt_pct(std)}")
            else:
                cells.append(_fmt_pct(getattr(report, metric)))
        lines.append(f"{name:<16}{cells[0]:<18}{cells[1]:<18}{cells[2]:<18}")
    return "\n".join(lines)


def kappa_summary(kappa: float) -> str:
    """One-line agreement summary with the clinical reference anchors."""
    return (
        f"Fleiss' kappa: {kappa:.4f} "
        f"(clinical reference: {KAPPA_REFERENCE_CONVENTIONAL:.2f} conventional review, "
        f"{KAPPA_REFERENCE_CLUSTERED:.2f} cluster-grouped review)"
    )


def _cluster_slug(key: tuple[str, int]) -> str:
    return f"{key[0]}_{key[1]:02d}"


def write_report(
    out_dir: str | Path,
    clustering: ClusteringResult,
    recording: ManometryRecording,
    metrics: dict[str, MetricsReport] | None = None,
    histogram: DistanceHistogram | None = None,
    kappa: float | None = None,
) -> Path:
    """Write montages, tables and the HTML index; returns the index path.

    The recording must be the preprocessed recording the clustered
    swallows came from; windows are re-cut at the stored start samples.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    values = np.asarray(recording.values, dtype=np.float64)

    def cut(swallow_id: tuple[str, int]) -> np.ndarray | None:
        rec_id, start = swallow_id
        if rec_id != recording.patient_id or start + WINDOW_LEN > recording.samples:
            return None
        return values[:, start : start + WINDOW_LEN]

    sections: list[str] = []
    for key in sorted(clustering.centroids):
        idx = clustering.members(key)
        order = sorted(idx, key=lambda i: (clustering.distances[i], i))
        chosen = order[: _MONTAGE_PANELS - 1]
        if order[-1] not in chosen:
            chosen.append(order[-1])
        windows = [w for i in chosen if (w := cut(clustering.swallow_ids[i])) is not None]
        slug = _cluster_slug(key)
        caption = (
            f"{key[0]} cluster {key[1]}: {len(idx)} swallows; "
            f"top panel = medoid, bottom panel = most distant member"
        )
        if windows:
            save_grayscale_png(montage(windows), out / f"cluster_{slug}.png")
            sections.append(
                f"<h2>{caption}</h2>\n<img src='cluster_{slug}.png' alt='cluster {slug}'>"
            )
        else:
            sections.append(f"<h2>{caption}</h2>\n<p>windows unavailable in this recording</p>")

    body: list[str] = [f"<h1>Swallow clustering report: {recording.patient_id}</h1>"]
    body.append(
        f"<p>method: {clustering.method}, stage-1 k = {clustering.chosen_k}, "
        f"main clusters: {clustering.main_cluster_ids}, stage-2 k = {clustering.stage2_k}</p>"
    )
    if metrics:
        table = render_metrics_table(metrics)
        (out / "metrics.txt").write_text(table + "\n", encoding="utf-8")
        body.append(f"<h2>Detection metrics</h2>\n<pre>{table}</pre>")
    if kappa is not None:
        body.append(f"<p>{kappa_summary(kappa)}</p>")
    if histogram is not None:
        save_grayscale_png(histogram_image(histogram), out / "distance_histogram.png")
        center = (
            f"median {histogram.median:g}, mean {histogram.mean:g}"
            if histogram.median is not None
            else "no matched events"
        )
        body.append(
            "<h2>Prediction distance histogram</h2>"
            f"<p>signed distance p - y per matched event ({center})</p>\n"
            "<img src='distance_histogram.png' alt='distance histogram'>"
        )
    body.extend(sections)

    html = (
        "<!DOCTYPE html>\n<html><head><meta charset='utf-8'>"
        "<title>Swallow clustering report</title></head>\n<body>\n"
        + "\n".join(body)
        + "\n</body></html>\n"
    )
    index = out / "index.html"
    index.write_text(html, encoding="utf-8")
    return index
