"""Run configuration shared by the CLI subcommands.

A config file is a JSON object with one section per pipeline stage
(preprocess, synth, baseline, ml, cluster, eval) plus a global seed.
Unknown sections or keys are rejected so typos fail loudly; values are
validated against the same preconditions the library enforces.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidParameterError
from .io import _load_json


@dataclass
class PreprocessConfig:
    w: int = 30


@dataclass
class SynthSection:
    duration_s: float = 1200.0
    n_swallows: int = 25
    min_gap_s: float = 12.0
    noise_std: float = 5.0
    sample_rate: float = 50.0


@dataclass
class BaselineSection:
    binarize_threshold: float = 80.0
    vertical_window: int = 20
    smooth_window: int = 100
    peak_height: float = 20.0
    peak_distance: int = 200


@dataclass
class MlSection:
    input_side: int = 64
    learning_rate: float = 3e-3
    batch_size: int = 128
    epochs: int = 20
    neg_per_pos: float = 1.0
    stride: int = 1
    smooth_w: int = 20
    threshold: float = 0.2


@dataclass
class ClusterSection:
    method: str = "agglomerative"
    n_components: int = 30
    k_min: int = 4
    k_max: int = 10
    stage2_k: int = 10
    blur_sigma: float = 1.0


@dataclass
class EvalSection:
    d: int = 400
    mode: str = "start_centered"
    folds: int = 5


@dataclass
class RunConfig:
    seed: int = 0
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    synth: SynthSection = field(default_factory=SynthSection)
    baseline: BaselineSection = field(default_factory=BaselineSection)
    ml: MlSection = field(default_factory=MlSection)
    cluster: ClusterSection = field(default_factory=ClusterSection)
    eval: EvalSection = field(default_factory=EvalSection)


_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig) if f.name != "seed"}


def _validate(cfg: RunConfig) -> None:
    checks = [
        (cfg.preprocess.w >= 1, "preprocess.w must be >= 1"),
        (cfg.synth.duration_s > 0, "synth.duration_s must be > 0"),
        (cfg.synth.n_swallows >= 0, "synth.n_swallows must be >= 0"),
        (cfg.synth.min_gap_s >= 0, "synth.min_gap_s must be >= 0"),
        (cfg.synth.noise_std >= 0, "synth.noise_std must be >= 0"),
        (cfg.baseline.vertical_window >= 1, "baseline.vertical_window must be >= 1"),
        (cfg.baseline.smooth_window >= 1, "baseline.smooth_window must be >= 1"),
        (cfg.baseline.peak_distance >= 0, "baseline.peak_distance must be >= 0"),
        (cfg.ml.input_side >= 10, "ml.input_side must be >= 10"),
        (cfg.ml.learning_rate > 0, "ml.learning_rate must be > 0"),
        (cfg.ml.batch_size >= 1, "ml.batch_size must be >= 1"),
        (cfg.ml.epochs >= 1, "ml.epochs must be >= 1"),
        (cfg.ml.neg_per_pos >= 0, "ml.neg_per_pos must be >= 0"),
        (cfg.ml.stride >= 1, "ml.stride must be >= 1"),
        (cfg.ml.smooth_w >= 1, "ml.smooth_w must be >= 1"),
        (cfg.cluster.method in ("agglomerative", "kmeans"), "cluster.method unknown"),
        (cfg.cluster.n_components >= 1, "cluster.n_components must be >= 1"),
        (1 <= cfg.cluster.k_min <= cfg.cluster.k_max, "cluster k range invalid"),
        (cfg.cluster.stage2_k >= 1, "cluster.stage2_k must be >= 1"),
        (cfg.cluster.blur_sigma > 0, "cluster.blur_sigma must be > 0"),
        (cfg.eval.d >= 0, "eval.d must be >= 0"),
        (
            cfg.eval.mode in ("start_centered", "event_forward", "event_asymmetric"),
            "eval.mode unknown",
        ),
        (cfg.eval.folds >= 2, "eval.folds must be >= 2"),
    ]
    for ok, message in checks:
        if not ok:
            raise InvalidParameterError(f"config: {message}")


def load_config(path: str | Path | None) -> RunConfig:
    """Load and validate a config file; None gives the defaults."""
    cfg = RunConfig()
    if path is None:
        _validate(cfg)
        return cfg
    obj = _load_json(Path(path))
    for section, content in obj.items():
        if section == "seed":
            if not isinstance(content, int) or isinstance(content, bool):
                raise InvalidParameterError("config: seed must be an integer")
            cfg.seed = content
            continue
        if section not in _SECTIONS:
            raise InvalidParameterError(
                f"config: unknown section {section!r}, expected one of "
                f"{['seed', *sorted(_SECTIONS)]}"
            )
        target = getattr(cfg, section)
        known = {f.name for f in dataclasses.fields(target)}
        if not isinstance(content, dict):
            raise InvalidParameterError(f"config: section {section!r} must be an object")
        for key, value in content.items():
            if key not in known:
                raise InvalidParameterError(
                    f"config: unknown key {section}.{key}, expected one of {sorted(known)}"
                )
            setattr(target, key, value)
    _validate(cfg)
    return cfg
