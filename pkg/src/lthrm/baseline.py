"""Threshold-based swallow detector.

Operates on a preprocessed recording: binarize the scaled pressure
matrix, sum short vertical sensor windows into a per-sample activity
signal, smooth it and report peaks. A peak marks a point during a
swallow, not its start, so detections from this module are scored in
forward-window matching modes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detect import DetectedEvent, DetectionResult, params_digest
from .errors import InvalidParameterError, InvalidStateError
from .preprocess import moving_average_time
from .recording import ManometryRecording


@dataclass(frozen=True)
class BaselineParams:
    """Tunable constants of the threshold detector.

    binarize_threshold applies to the 0-255 scaled matrix. The default 80
    follows the published formula literally; on data whose resting
    pressure scales above 80 the matrix saturates, so the threshold is a
    parameter (80 mmHg expressed in scaled units is 142.8).
    """

    binarize_threshold: float = 80.0
    vertical_window: int = 20
    smooth_window: int = 100
    peak_height: float = 20.0
    peak_distance: int = 200

    def __post_init__(self) -> None:
        if self.vertical_window < 1:
            raise InvalidParameterError(f"vertical_window must be >= 1, got {self.vertical_window}")
        if self.smooth_window < 1:
            raise InvalidParameterError(f"smooth_window must be >= 1, got {self.smooth_window}")
        if self.peak_distance < 0:
            raise InvalidParameterError(f"peak_distance must be >= 0, got {self.peak_distance}")


def binarize_pressure(m: np.ndarray, threshold: float = 80.0) -> np.ndarray:
    """Binary mask of scaled pressures strictly above threshold.

    m must be a preprocessed matrix (values in [0, 255]); a value equal
    to the threshold maps to 0.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.size and (m.min() < 0.0 or m.max() > 255.0):
        raise InvalidStateError(
            "binarize_pressure expects a preprocessed matrix with values in [0, 255]"
        )
    return (m > threshold).astype(np.int64)


def vertical_activity(mb: np.ndarray, w: int = 20) -> np.ndarray:
    """Column totals of a vertical moving sum over the binary matrix.

    For a matrix of s sensors there are s - w + 1 vertical windows; each
    output sample r[j] sums all of them, so a fully active column scores
    (s - w + 1) * w.

    Returns a vector of length t (the time axis is unchanged).
    """
    mb = np.asarray(mb, dtype=np.float64)
    if mb.ndim != 2:
        raise InvalidParameterError(f"expected a 2-D matrix, got ndim={mb.ndim}")
    w = int(w)
    if w < 1 or w > mb.shape[0]:
        raise InvalidParameterError(
            f"vertical window must be in [1, {mb.shape[0]}], got {w}"
        )
    cs = np.vstack([np.zeros((1, mb.shape[1])), np.cumsum(mb, axis=0)])
    windows = cs[w:] - cs[:-w]  # (s - w + 1, t)
    return windows.sum(axis=0)


def smooth_activity(r: np.ndarray, w: int = 100) -> np.ndarray:
    """Trailing moving average of the activity vector, valid mode."""
    r = np.asarray(r, dtype=np.float64).reshape(1, -1)
    return moving_average_time(r, w)[0]


def find_peaks(x: np.ndarray, height: float, distance: int) -> np.ndarray:
    """Indices of prominent local maxima, sorted ascending.

    A candidate is strictly greater than both neighbors; a plateau counts
    once at its first index (array endpoints cannot be peaks). Candidates
    at or below height are dropped, then the remainder is filtered
    greedily by descending value (ties by ascending index), keeping a
    peak only when strictly more than distance samples from every peak
    kept so far.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = x.size
    candidates = []
    i = 1
    while i < n - 1:
        if x[i] > x[i - 1]:
            j = i
            while j + 1 < n and x[j + 1] == x[i]:
                j += 1
            if j < n - 1 and x[j + 1] < x[i]:
                candidates.append(i)
            i = j + 1
        else:
            i += 1
    candidates = [c for c in candidates if x[c] > height]
    candidates.sort(key=lambda c: (-x[c], c))
    kept: list[int] = []
    for c in candidates:
        if all(abs(c - k) > distance for k in kept):
            kept.append(c)
    return np.array(sorted(kept), dtype=np.int64)


def detect_baseline(r: ManometryRecording, params: BaselineParams | None = None) -> DetectionResult:
    """Run the threshold detector on a preprocessed recording.

    Each surviving peak becomes one event at the peak index, with
    confidence equal to the smoothed activity normalized by its
    theoretical maximum (sensors - w + 1) * w.
    """
    if not r.preprocessed:
        raise InvalidStateError("detect_baseline requires a preprocessed recording")
    p = params or BaselineParams()
    mb = binarize_pressure(r.values, p.binarize_threshold)
    activity = vertical_activity(mb, p.vertical_window)
    smoothed = smooth_activity(activity, p.smooth_window)
    peaks = find_peaks(smoothed, p.peak_height, p.peak_distance)
    top = (r.sensors - p.vertical_window + 1) * p.vertical_window
    events = [
        DetectedEvent(start=int(j), span=(int(j), int(j)), confidence=float(smoothed[j] / top))
        for j in peaks
    ]
    digest = params_digest(
        {
            "method": "baseline",
            "binarize_threshold": p.binarize_threshold,
            "vertical_window": p.vertical_window,
            "smooth_window": p.smooth_window,
            "peak_height": p.peak_height,
            "peak_distance": p.peak_distance,
        }
    )
    return DetectionResult(
        recording_id=r.patient_id, method="baseline", params_digest=digest, events=events
    )
