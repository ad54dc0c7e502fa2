"""Detection result types and the classifier-based sliding-window detector.

The classifier is slid over the preprocessed recording; per window it
yields a predicted class o and a confidence c. The product s = o * c is
smoothed with a trailing moving average, thresholded, and each maximal
run of above-threshold samples becomes one event whose start is the run's
smoothed-score maximum.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDataError, InvalidParameterError, InvalidStateError
from .preprocess import moving_average_time
from .recording import ManometryRecording
from .windows import WINDOW_LEN, resize_batch

SMOOTH_WINDOW_DEFAULT = 20
THRESHOLD_DEFAULT = 0.2


def params_digest(params: dict) -> str:
    """Short stable digest of a parameter mapping."""
    canon = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DetectedEvent:
    """One detected swallow: start sample, covered span, confidence."""

    start: int
    span: tuple[int, int]
    confidence: float


@dataclass(frozen=True)
class DetectionResult:
    """All events detected on one recording, plus provenance."""

    recording_id: str
    method: str
    params_digest: str
    events: list[DetectedEvent] = field(default_factory=list)

    @property
    def starts(self) -> np.ndarray:
        return np.array([e.start for e in self.events], dtype=np.int64)


def sliding_window_inference(
    model,
    r: ManometryRecording,
    stride: int = 1,
    batch_size: int = 256,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classify every window position of a preprocessed recording.

    Returns (o, c, starts): predicted class, confidence and the window
    start sample of each position. With stride 1 there are
    samples - 500 + 1 positions.
    """
    if not r.preprocessed:
        raise InvalidStateError("sliding-window inference requires a preprocessed recording")
    stride = int(stride)
    if stride < 1:
        raise InvalidParameterError(f"stride must be >= 1, got {stride}")
    t = r.samples
    if t < WINDOW_LEN:
        raise InvalidDataError(
            f"recording of {t} samples is shorter than one window ({WINDOW_LEN})"
        )
    if (r.sensors, WINDOW_LEN) != tuple(model.raw_window_shape):
        raise InvalidDataError(
            f"recording windows {(r.sensors, WINDOW_LEN)} do not match model "
            f"input {tuple(model.raw_window_shape)}"
        )
    from .cnn import classify_batch

    values = np.asarray(r.values, dtype=np.float64)
    starts = np.arange(0, t - WINDOW_LEN + 1, stride, dtype=np.int64)
    o = np.zeros(starts.size, dtype=np.int64)
    c = np.zeros(starts.size, dtype=np.float64)
    offsets = np.arange(WINDOW_LEN, dtype=np.int64)
    for lo in range(0, starts.size, batch_size):
        chunk = starts[lo : lo + batch_size]
        wins = values[:, chunk[:, None] + offsets[None, :]].transpose(1, 0, 2)
        resized = resize_batch(wins, model.input_side)
        o[lo : lo + chunk.size], c[lo : lo + chunk.size] = classify_batch(model, resized)
    return o, c, starts


def extract_events(
    o: np.ndarray,
    c: np.ndarray,
    smooth_w: int = SMOOTH_WINDOW_DEFAULT,
    threshold: float = THRESHOLD_DEFAULT,
    stride: int = 1,
) -> list[DetectedEvent]:
    """Turn per-window classifier outputs into detected events.

    s = o * c elementwise; s_hat is its trailing moving average (valid
    mode, window smooth_w); positions with s_hat strictly above threshold
    form runs, each run is one event. The event start is the run's s_hat
    maximum (earliest index on ties), spans and starts are mapped to
    sample indices by multiplying with stride, and confidence is the
    run's maximum s_hat clipped to [0, 1].
    """
    o = np.asarray(o)
    c = np.asarray(c, dtype=np.float64)
    if o.shape != c.shape or o.ndim != 1:
        raise InvalidDataError(f"o and c must be 1-D and equal length, got {o.shape} vs {c.shape}")
    if not np.isin(o, (0, 1)).all():
        raise InvalidDataError("o must be binary")
    stride = int(stride)
    if stride < 1:
        raise InvalidParameterError(f"stride must be >= 1, got {stride}")
    s = o.astype(np.float64) * c
    s_hat = moving_average_time(s.reshape(1, -1), smooth_w)[0]
    above = s_hat > threshold
    events: list[DetectedEvent] = []
    i = 0
    n = above.size
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        run = s_hat[i : j + 1]
        rel = int(np.argmax(run))
        events.append(
            DetectedEvent(
                start=int((i + rel) * stride),
                span=(int(i * stride), int(j * stride)),
                confidence=float(min(run[rel], 1.0)),
            )
        )
        i = j + 1
    return events


def detect_ml(
    model,
    r: ManometryRecording,
    stride: int = 1,
    smooth_w: int = SMOOTH_WINDOW_DEFAULT,
    threshold: float = THRESHOLD_DEFAULT,
) -> DetectionResult:
    """Classifier-based detection on one preprocessed recording."""
    o, c, _ = sliding_window_inference(model, r, stride=stride)
    events = extract_events(o, c, smooth_w=smooth_w, threshold=threshold, stride=stride)
    digest = params_digest(
        {
            "method": "ml",
            "model": model.digest(),
            "stride": stride,
            "smooth_w": smooth_w,
            "threshold": threshold,
        }
    )
    return DetectionResult(recording_id=r.patient_id, method="ml", params_digest=digest, events=events)
