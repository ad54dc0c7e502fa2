"""Fixed-length training windows and bilinear resizing.

A window is a 36 x 500 slice of a preprocessed recording: 10 s at 50 Hz,
wide enough to hold one complete swallow. Positive windows start exactly
at an annotated swallow start; negative windows are sampled uniformly
from the stretches that do not intersect any positive window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDataError, InvalidParameterError, InvalidStateError
from .recording import AnnotationSet, ManometryRecording

WINDOW_LEN = 500
RESIZE_SIDE_DEFAULT = 224


@dataclass(frozen=True)
class SwallowWindow:
    """One training window with its class label and origin."""

    values: np.ndarray  # (sensors, WINDOW_LEN) float64
    label: int  # 1 = swallow, 0 = background
    origin: tuple[str, int]  # (recording id, start sample)


@dataclass(frozen=True)
class WindowStats:
    """Bookkeeping from window extraction."""

    positives: int
    skipped_positives: int
    negatives: int
    negative_shortfall: int


def extract_training_windows(
    r: ManometryRecording,
    annotations: AnnotationSet,
    neg_per_pos: float = 1.0,
    rng_seed: int = 0,
) -> tuple[list[SwallowWindow], WindowStats]:
    """Cut positive and negative windows out of a preprocessed recording.

    Positive windows span [y, y + 499] for each annotated start y; starts
    whose window would run past the end of the recording are skipped and
    counted. Negatives are drawn without replacement from all start
    positions whose window intersects no positive window; when fewer such
    positions exist than neg_per_pos * positives, the shortfall is
    reported in the stats rather than padded.
    """
    if not r.preprocessed:
        raise InvalidStateError("window extraction requires a preprocessed recording")
    if neg_per_pos < 0:
        raise InvalidParameterError(f"neg_per_pos must be >= 0, got {neg_per_pos}")
    annotations.validate_against(r)
    t = r.samples
    values = np.asarray(r.values, dtype=np.float64)

    windows: list[SwallowWindow] = []
    skipped = 0
    kept_starts = []
    for y in annotations.starts:
        y = int(y)
        if y + WINDOW_LEN > t:
            skipped += 1
            continue
        kept_starts.append(y)
        windows.append(
            SwallowWindow(values=values[:, y : y + WINDOW_LEN].copy(), label=1, origin=(r.patient_id, y))
        )
    n_pos = len(kept_starts)

    wanted = int(round(neg_per_pos * n_pos))
    allowed = np.ones(max(t - WINDOW_LEN + 1, 0), dtype=bool)
    for y in annotations.starts:
        lo = max(int(y) - (WINDOW_LEN - 1), 0)
        hi = min(int(y) + WINDOW_LEN, allowed.size)
        allowed[lo:hi] = False
    candidates = np.flatnonzero(allowed)
    take = min(wanted, candidates.size)
    rng = np.random.default_rng(rng_seed)
    chosen = np.sort(rng.choice(candidates, size=take, replace=False)) if take else np.zeros(0, int)
    for n in chosen:
        n = int(n)
        windows.append(
            SwallowWindow(values=values[:, n : n + WINDOW_LEN].copy(), label=0, origin=(r.patient_id, n))
        )
    stats = WindowStats(
        positives=n_pos,
        skipped_positives=skipped,
        negatives=int(take),
        negative_shortfall=int(wanted - take),
    )
    return windows, stats


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Corner-aligned 1-D linear interpolation as an (n_out, n_in) matrix."""
    m = np.zeros((n_out, n_in), dtype=np.float64)
    if n_in == 1:
        m[:, 0] = 1.0
        return m
    coords = np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)
    lo = np.floor(coords).astype(np.int64)
    lo = np.minimum(lo, n_in - 2)
    frac = coords - lo
    m[np.arange(n_out), lo] = 1.0 - frac
    m[np.arange(n_out), lo + 1] += frac
    return m


def resize_window(w: np.ndarray, side: int = RESIZE_SIDE_DEFAULT) -> np.ndarray:
    """Bilinear resize to a square side x side matrix, corners aligned.

    Output corners equal input corners exactly; interior values are
    convex combinations of the four surrounding input cells, so the
    output range never exceeds the input range.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise InvalidDataError(f"expected a 2-D matrix, got ndim={w.ndim}")
    side = int(side)
    if side < 2:
        raise InvalidParameterError(f"side must be >= 2, got {side}")
    rows = _interp_matrix(w.shape[0], side)
    cols = _interp_matrix(w.shape[1], side)
    return rows @ w @ cols.T


def resize_batch(wins: np.ndarray, side: int) -> np.ndarray:
    """Resize a (batch, rows, cols) stack with shared interpolation weights."""
    wins = np.asarray(wins, dtype=np.float64)
    rows = _interp_matrix(wins.shape[1], side)
    cols = _interp_matrix(wins.shape[2], side)
    return (rows @ wins) @ cols.T
