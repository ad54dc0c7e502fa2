"""Preprocessing of raw manometry pressure matrices.

The pipeline smooths each sensor with a trailing moving average, clips
pressures to a fixed physiological range and rescales them linearly to
[0, 255]. Values stay floating point; no quantization is applied.
Annotation indices are left untouched: smoothing is trailing (output j
averages input samples j .. j+w-1), so a sample index in the smoothed
matrix still points at the onset of the same pressure activity.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidDataError, InvalidParameterError, InvalidStateError
from .recording import ManometryRecording

SMOOTH_WINDOW = 30
CLIP_MIN_MMHG = -200.0
CLIP_MAX_MMHG = 300.0
SCALE_MAX = 255.0


def moving_average_time(m: np.ndarray, w: int) -> np.ndarray:
    """Trailing moving average along the time axis, valid mode.

    Parameters
    ----------
    m : ndarray, shape (sensors, t)
        Input matrix; rows are sensors, columns are samples.
    w : int
        Window width in samples, 1 <= w <= t.

    Returns
    -------
    ndarray, shape (sensors, t - w + 1)
        out[i, j] = mean(m[i, j : j + w]). Width 1 inputs with w == 1
        pass through unchanged.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidDataError(f"expected a 2-D matrix, got ndim={m.ndim}")
    w = int(w)
    if w < 1:
        raise InvalidParameterError(f"window must be >= 1, got {w}")
    if w > m.shape[1]:
        raise InvalidParameterError(
            f"window {w} exceeds signal length {m.shape[1]}"
        )
    return sliding_window_view(m, w, axis=1).mean(axis=2)


def clip_and_scale(m: np.ndarray) -> np.ndarray:
    """Clip to [-200, 300] mmHg and map linearly onto [0, 255].

    v' = (clamp(v, -200, 300) + 200) * 255 / 500. Output is float;
    scaled values are not rounded to integers.
    """
    m = np.asarray(m, dtype=np.float64)
    if not np.isfinite(m).all():
        bad = np.argwhere(~np.isfinite(m))[0]
        raise InvalidDataError(
            f"non-finite pressure value at cell ({int(bad[0])}, {int(bad[1])})"
        )
    clipped = np.clip(m, CLIP_MIN_MMHG, CLIP_MAX_MMHG)
    return (clipped - CLIP_MIN_MMHG) * (SCALE_MAX / (CLIP_MAX_MMHG - CLIP_MIN_MMHG))


def preprocess_recording(r: ManometryRecording, w: int = SMOOTH_WINDOW) -> ManometryRecording:
    """Smooth, clip and scale a raw recording.

    Returns a new recording of width samples - w + 1 with ``preprocessed``
    set. Annotation indices are not shifted; the trailing alignment choice
    is recorded in the output metadata.
    """
    if r.preprocessed:
        raise InvalidStateError("recording is already preprocessed")
    scaled = clip_and_scale(moving_average_time(r.values, w))
    meta = dict(r.meta)
    meta.update({"smoothing_window": int(w), "smoothing_alignment": "trailing"})
    return ManometryRecording(
        values=scaled,
        sample_rate=r.sample_rate,
        preprocessed=True,
        patient_id=r.patient_id,
        meta=meta,
    )
