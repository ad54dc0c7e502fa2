"""Synthetic manometry recordings with known swallow annotations.

Each swallow is a pressure wave travelling down the sensor array: per
sensor a Gaussian-in-time bump whose temporal center is delayed linearly
with sensor index. Three wave templates cover a normal peristaltic wave,
a rapid near-simultaneous contraction and a weak wave that dies out over
the distal sensors. Everything is drawn from a single seeded generator,
so a configuration reproduces bit-identical data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .recording import DEFAULT_SAMPLE_RATE_HZ, SENSOR_COUNT, AnnotationSet, ManometryRecording

BASELINE_MMHG = 10.0


@dataclass(frozen=True)
class WaveTemplate:
    """Shape of one swallow morphology.

    amplitudes holds the per-sensor bump height in mmHg; propagation_s is
    the total wave travel time over the sensor array; sigma_s the temporal
    width of each sensor's bump.
    """

    name: str
    propagation_s: float
    sigma_s: float
    amplitudes: np.ndarray


def _peristaltic(n: int) -> np.ndarray:
    i = np.arange(n)
    return 100.0 + 40.0 * np.sin(np.pi * i / (n - 1))


def _flat(n: int) -> np.ndarray:
    return np.full(n, 130.0)


def _decaying(n: int) -> np.ndarray:
    i = np.arange(n)
    return 150.0 - 120.0 * i / (n - 1)


TEMPLATES: dict[str, WaveTemplate] = {
    "normal": WaveTemplate("normal", 4.0, 0.5, _peristaltic(SENSOR_COUNT)),
    "rapid": WaveTemplate("rapid", 2.0, 0.4, _flat(SENSOR_COUNT)),
    "weak": WaveTemplate("weak", 5.5, 0.6, _decaying(SENSOR_COUNT)),
}

_DEFAULT_MIX = (("normal", 1.0), ("rapid", 1.0), ("weak", 1.0))


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of one synthetic recording."""

    duration_s: float
    n_swallows: int
    sample_rate: float = DEFAULT_SAMPLE_RATE_HZ
    min_gap_s: float = 12.0
    noise_std: float = 5.0
    morphology_mix: tuple[tuple[str, float], ...] = _DEFAULT_MIX
    rng_seed: int = 0
    patient_id: str = ""

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise InvalidParameterError(f"duration_s must be positive, got {self.duration_s}")
        if self.sample_rate <= 0:
            raise InvalidParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.n_swallows < 0:
            raise InvalidParameterError(f"n_swallows must be >= 0, got {self.n_swallows}")
        if self.min_gap_s < 0:
            raise InvalidParameterError(f"min_gap_s must be >= 0, got {self.min_gap_s}")
        if self.noise_std < 0:
            raise InvalidParameterError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.n_swallows * self.min_gap_s > self.duration_s:
            raise InvalidParameterError(
                f"{self.n_swallows} swallows with min gap {self.min_gap_s}s do not fit "
                f"into {self.duration_s}s"
            )
        if not self.morphology_mix:
            raise InvalidParameterError("morphology_mix must not be empty")
        for name, weight in self.morphology_mix:
            if name not in TEMPLATES:
                raise InvalidParameterError(
                    f"unknown template {name!r}, choose from {sorted(TEMPLATES)}"
                )
            if weight < 0:
                raise InvalidParameterError(f"template weight must be >= 0, got {weight}")
        if not sum(w for _, w in self.morphology_mix) > 0:
            raise InvalidParameterError("morphology_mix weights must sum to > 0")


def _place_starts(rng: np.random.Generator, n: int, samples: int, gap: int, tail: int) -> np.ndarray:
    """Strictly increasing starts with pairwise gaps >= gap."""
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    gap = max(gap, 1)
    # Reserve room at the end for the slowest wave when the duration allows it.
    hi = samples - tail - (n - 1) * gap
    if hi < 1:
        hi = samples - (n - 1) * gap
    offsets = np.sort(rng.uniform(0.0, hi, size=n))
    starts = np.floor(offsets).astype(np.int64) + np.arange(n, dtype=np.int64) * gap
    if starts[-1] >= samples:
        raise InvalidParameterError(
            f"cannot place {n} swallows with gap {gap} samples inside {samples} samples"
        )
    return starts


def generate_recording(cfg: SynthConfig) -> tuple[ManometryRecording, AnnotationSet]:
    """Generate one synthetic recording plus its ground-truth annotations.

    The recording is raw (mmHg, not preprocessed): a 10 mmHg baseline,
    per-swallow pressure waves and optional Gaussian noise. Annotated
    starts mark wave onsets; with zero noise every wave exceeds 80 mmHg
    on at least 10 sensors inside [start, start + 500].
    """
    rng = np.random.default_rng(cfg.rng_seed)
    rate = cfg.sample_rate
    samples = int(round(cfg.duration_s * rate))
    sensors = SENSOR_COUNT

    names = [name for name, _ in cfg.morphology_mix]
    weights = np.array([w for _, w in cfg.morphology_mix], dtype=np.float64)
    weights = weights / weights.sum()

    starts = _place_starts(rng, cfg.n_swallows, samples, int(round(cfg.min_gap_s * rate)), 560)
    picks = rng.choice(len(names), size=cfg.n_swallows, p=weights)
    amp_jitter = rng.uniform(0.95, 1.05, size=cfg.n_swallows)
    speed_jitter = rng.uniform(0.9, 1.1, size=cfg.n_swallows)

    values = np.full((sensors, samples), BASELINE_MMHG, dtype=np.float64)
    sensor_idx = np.arange(sensors, dtype=np.float64)
    for start, pick, a_jit, s_jit in zip(starts, picks, amp_jitter, speed_jitter):
        tpl = TEMPLATES[names[int(pick)]]
        sigma = tpl.sigma_s * rate
        onset = 3.0 * sigma
        delay = tpl.propagation_s * rate * s_jit / (sensors - 1)
        centers = start + onset + delay * sensor_idx
        lo = int(start)
        hi = min(samples, int(np.ceil(centers[-1] + 3.0 * sigma)) + 1)
        t = np.arange(lo, hi, dtype=np.float64)
        bump = np.exp(-0.5 * ((t[None, :] - centers[:, None]) / sigma) ** 2)
        values[:, lo:hi] += (a_jit * tpl.amplitudes)[:, None] * bump

    if cfg.noise_std > 0:
        values += rng.normal(0.0, cfg.noise_std, size=values.shape)

    recording = ManometryRecording(
        values=values,
        sample_rate=rate,
        preprocessed=False,
        patient_id=cfg.patient_id,
        meta={"synthetic": True, "rng_seed": int(cfg.rng_seed)},
    )
    annotations = AnnotationSet(recording_id=cfg.patient_id, starts=starts)
    return recording, annotations
