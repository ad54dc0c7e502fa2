"""Evaluation protocol: event matching, detection metrics, patient-wise
cross-validation, inter-rater agreement and error histograms.

Matching is one-to-one and greedy: eligible (truth, prediction) pairs
are taken in order of ascending |p - y|, each side matched at most once.
Cross-validation folds split by recording (patient) so no patient's data
appears in both train and test of a fold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import InvalidDataError, InvalidParameterError
from .recording import AnnotationSet, ManometryRecording

MatchMode = Literal["start_centered", "event_forward", "event_asymmetric"]

D_DEFAULT = 400


@dataclass(frozen=True)
class MatchConfig:
    """Tolerance window d (samples) and eligibility mode."""

    d: int = D_DEFAULT
    mode: MatchMode = "start_centered"

    def __post_init__(self) -> None:
        if self.d < 0:
            raise InvalidParameterError(f"d must be >= 0, got {self.d}")
        if self.mode not in ("start_centered", "event_forward", "event_asymmetric"):
            raise InvalidParameterError(f"unknown match mode {self.mode!r}")


def _eligible(y: float, p: float, cfg: MatchConfig) -> bool:
    if cfg.mode == "start_centered":
        return abs(p - y) <= cfg.d / 2
    if cfg.mode == "event_forward":
        return y <= p <= y + cfg.d
    return y - cfg.d / 4 <= p <= y + 3 * cfg.d / 4


def match_events(
    true_starts: Sequence[int],
    predicted_starts: Sequence[int],
    cfg: MatchConfig | None = None,
):
    """One-to-one greedy matching of predictions to ground truth.

    Candidate pairs are ordered by ascending |p - y|, ties by smaller y
    then smaller p; a pair is accepted when both sides are still free.
    Returns (pairs, tp, fp, fn, distances) where distances holds p - y
    per matched pair; tp + fn = len(true_starts) and
    tp + fp = len(predicted_starts).
    """
    cfg = cfg or MatchConfig()
    truths = np.asarray(true_starts, dtype=np.int64).reshape(-1)
    preds = np.asarray(predicted_starts, dtype=np.int64).reshape(-1)
    candidates = [
        (abs(int(p) - int(y)), int(y), int(p), iy, ip)
        for iy, y in enumerate(truths)
        for ip, p in enumerate(preds)
        if _eligible(int(y), int(p), cfg)
    ]
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    matched_y: set[int] = set()
    matched_p: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for _, y, p, iy, ip in candidates:
        if iy in matched_y or ip in matched_p:
            continue
        matched_y.add(iy)
        matched_p.add(ip)
        pairs.append((y, p))
    tp = len(pairs)
    distances = [p - y for y, p in pairs]
    return pairs, tp, len(preds) - tp, len(truths) - tp, distances


@dataclass(frozen=True)
class Metrics:
    """Precision/recall/F1 for one evaluation run.

    Metrics with a zero denominator are reported as 0 and named in
    ``undefined``.
    """

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    undefined: tuple[str, ...] = ()


def compute_metrics(tp: int, fp: int, fn: int) -> Metrics:
    """Precision, recall and F1 with an explicit zero-denominator flag."""
    if min(tp, fp, fn) < 0:
        raise InvalidParameterError("counts must be non-negative")
    undefined: list[str] = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    return Metrics(tp, fp, fn, precision, recall, f1, tuple(undefined))


@dataclass
class MetricsReport:
    """Aggregate scores: pooled counts, per-fold metrics, fold statistics.

    mean_std maps metric name to (mean, population standard deviation)
    over folds; it is empty for single-run reports. distances pools the
    signed prediction errors of all matched pairs.
    """

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    per_fold: list[Metrics] = field(default_factory=list)
    mean_std: dict[str, tuple[float, float]] = field(default_factory=dict)
    distances: list[int] = field(default_factory=list)
    undefined: tuple[str, ...] = ()
    d: int = D_DEFAULT
    mode: str = "start_centered"


def _report_from_counts(tp: int, fp: int, fn: int, distances: list[int], cfg: MatchConfig) -> MetricsReport:
    m = compute_metrics(tp, fp, fn)
    return MetricsReport(
        tp=m.tp,
        fp=m.fp,
        fn=m.fn,
        precision=m.precision,
        recall=m.recall,
        f1=m.f1,
        distances=distances,
        undefined=m.undefined,
        d=cfg.d,
        mode=cfg.mode,
    )


def score_detections(
    true_starts: Sequence[int],
    predicted_starts: Sequence[int],
    cfg: MatchConfig | None = None,
) -> MetricsReport:
    """Match one recording's predictions and compute its metrics."""
    cfg = cfg or MatchConfig()
    _, tp, fp, fn, distances = match_events(true_starts, predicted_starts, cfg)
    return _report_from_counts(tp, fp, fn, distances, cfg)


Pipeline = Callable[
    [list[tuple[ManometryRecording, AnnotationSet]], ManometryRecording], Sequence[int]
]


def cross_validate(
    recordings: list[tuple[ManometryRecording, AnnotationSet]],
    pipeline: Pipeline,
    folds: int = 5,
    cfg: MatchConfig | None = None,
    rng_seed: int = 0,
    predictions_out: dict[str, np.ndarray] | None = None,
) -> MetricsReport:
    """Patient-wise k-fold cross-validation of a detector pipeline.

    Recordings are shuffled with the seeded generator and dealt
    round-robin into folds, so remainders spread evenly. For each fold
    the pipeline is trained on the out-of-fold pairs and applied to each
    held-out recording; fold metrics come from the fold's pooled counts.
    mean_std holds the across-fold mean and population standard deviation.
    If predictions_out is given it is filled with each held-out
    recording's predicted starts keyed by recording id, so the same
    outputs can be re-scored at other tolerances.
    """
    cfg = cfg or MatchConfig()
    if folds < 2:
        raise InvalidParameterError(f"folds must be >= 2, got {folds}")
    if len(recordings) < folds:
        raise InvalidParameterError(
            f"{len(recordings)} recordings cannot fill {folds} folds"
        )
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(len(recordings))
    fold_of = np.empty(len(recordings), dtype=np.int64)
    fold_of[order] = np.arange(len(recordings)) % folds

    per_fold: list[Metrics] = []
    distances: list[int] = []
    tp = fp = fn = 0
    for f in range(folds):
        test_idx = [i for i in range(len(recordings)) if fold_of[i] == f]
        train = [recordings[i] for i in range(len(recordings)) if fold_of[i] != f]
        ftp = ffp = ffn = 0
        for i in test_idx:
            rec, ann = recordings[i]
            predicted = pipeline(train, rec)
            if predictions_out is not None:
                predictions_out[rec.patient_id] = np.asarray(predicted)
            _, itp, ifp, ifn, dist = match_events(ann.starts, predicted, cfg)
            ftp, ffp, ffn = ftp + itp, ffp + ifp, ffn + ifn
            distances.extend(dist)
        per_fold.append(compute_metrics(ftp, ffp, ffn))
        tp, fp, fn = tp + ftp, fp + ffp, fn + ffn

    report = _report_from_counts(tp, fp, fn, distances, cfg)
    report.per_fold = per_fold
    for name in ("precision", "recall", "f1"):
        vals = np.array([getattr(m, name) for m in per_fold])
        report.mean_std[name] = (float(vals.mean()), float(vals.std()))
    return report


def fleiss_kappa(ratings: np.ndarray) -> float:
    """Fleiss' kappa for a subjects x categories count table.

    Every row must sum to the same number of raters n >= 2. When the
    expected agreement is 1 (all ratings in a single category) observed
    agreement is necessarily 1 as well and kappa is defined as 1.
    """
    table = np.asarray(ratings, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] < 1 or table.shape[1] < 1:
        raise InvalidDataError(f"expected a (subjects, categories) table, got shape {table.shape}")
    if (table < 0).any() or not np.allclose(table, np.round(table)):
        raise InvalidDataError("ratings must be non-negative integer counts")
    row_sums = table.sum(axis=1)
    n = row_sums[0]
    if n < 2:
        raise InvalidDataError(f"need at least 2 raters, got {int(n)}")
    if not np.all(row_sums == n):
        raise InvalidDataError("all subjects must have the same number of ratings")
    p_i = ((table**2).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_i.mean())
    p_c = table.sum(axis=0) / (table.shape[0] * n)
    p_e = float((p_c**2).sum())
    if p_e >= 1.0:
        return 1.0
    return (p_bar - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class DistanceHistogram:
    """Histogram of signed matching distances with center statistics.

    Bin b counts distances in [edges[b], edges[b+1]); edges are integer
    multiples of the bin width. mean/median are None for empty input.
    """

    bin_width: int
    edges: np.ndarray
    counts: np.ndarray
    mean: float | None
    median: float | None


def distance_histogram(distances: Sequence[int], bin_width: int = 10) -> DistanceHistogram:
    """Histogram the signed distances p - y into bins aligned at 0."""
    if bin_width < 1:
        raise InvalidParameterError(f"bin_width must be >= 1, got {bin_width}")
    d = np.asarray(distances, dtype=np.int64).reshape(-1)
    if d.size == 0:
        return DistanceHistogram(
            bin_width=bin_width,
            edges=np.zeros(0, dtype=np.int64),
            counts=np.zeros(0, dtype=np.int64),
            mean=None,
            median=None,
        )
    lo = math.floor(d.min() / bin_width)
    hi = math.floor(d.max() / bin_width)
    edges = np.arange(lo, hi + 2, dtype=np.int64) * bin_width
    idx = np.floor_divide(d, bin_width) - lo
    counts = np.bincount(idx, minlength=hi - lo + 1)
    return DistanceHistogram(
        bin_width=bin_width,
        edges=edges,
        counts=counts,
        mean=float(d.mean()),
        median=float(np.median(d)),
    )
