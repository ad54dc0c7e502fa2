"""Containers for long-term high-resolution manometry recordings and annotations.

A recording is a sensor-by-sample pressure matrix sampled at a fixed rate.
Raw recordings hold pressure in mmHg; preprocessed recordings hold values
scaled to [0, 255] (see :mod:`lthrm.preprocess`). Recordings are treated as
immutable after construction: operations return new instances.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidDataError

SENSOR_COUNT = 36
DEFAULT_SAMPLE_RATE_HZ = 50.0


@dataclass(frozen=True)
class ManometryRecording:
    """Pressure matrix with acquisition metadata.

    Parameters
    ----------
    values : ndarray, shape (sensors, samples)
        Pressure matrix, one row per sensor, one column per sample.
        Stored as float32 (the on-disk sample type), C-contiguous.
    sample_rate : float
        Sampling rate in Hz.
    preprocessed : bool
        True once smoothing and scaling have been applied; preprocessed
        values lie in [0, 255].
    patient_id : str
        Identifier of the recorded patient (doubles as recording id).
    meta : dict
        Free-form provenance (preprocessing window, annotation alignment).
    """

    values: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE_HZ
    preprocessed: bool = False
    patient_id: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise InvalidDataError(
                f"recording values must be 2-D (sensors, samples), got ndim={values.ndim}"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidDataError(f"recording values must be non-empty, got shape {values.shape}")
        if not self.sample_rate > 0:
            raise InvalidDataError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.preprocessed:
            lo, hi = float(values.min()), float(values.max())
            if lo < 0.0 or hi > 255.0:
                raise InvalidDataError(
                    f"preprocessed values must lie in [0, 255], got range [{lo}, {hi}]"
                )
        object.__setattr__(self, "values", values)

    @property
    def sensors(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> int:
        return self.values.shape[1]

    @property
    def duration_s(self) -> float:
        return self.samples / self.sample_rate


@dataclass(frozen=True)
class AnnotationSet:
    """Ground-truth swallow start indices for one recording.

    Starts are sample indices into the recording the annotations belong to,
    kept sorted and strictly increasing.
    """

    recording_id: str
    starts: np.ndarray

    def __post_init__(self) -> None:
        starts = np.asarray(self.starts, dtype=np.int64).reshape(-1)
        if starts.size and starts.min() < 0:
            raise InvalidDataError("annotation starts must be non-negative")
        if starts.size > 1 and not np.all(np.diff(starts) > 0):
            raise InvalidDataError("annotation starts must be strictly increasing")
        object.__setattr__(self, "starts", starts)

    def __len__(self) -> int:
        return int(self.starts.size)

    def validate_against(self, recording: ManometryRecording) -> None:
        """Raise if any start falls outside the recording's sample range."""
        if len(self) and int(self.starts.max()) >= recording.samples:
            raise InvalidDataError(
                f"annotation start {int(self.starts.max())} outside recording "
                f"of {recording.samples} samples"
            )
