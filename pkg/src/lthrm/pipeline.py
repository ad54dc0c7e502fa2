"""Ready-made detector pipelines for cross-validation and the CLI.

A pipeline takes (train pairs, test recording) and returns predicted
start samples. Both factories preprocess raw recordings on the fly and
cache the result per recording id, so repeated folds do not redo work.
"""
from __future__ import annotations

import zlib

from .baseline import BaselineParams, detect_baseline
from .cnn import TrainingConfig, train_classifier
from .detect import SMOOTH_WINDOW_DEFAULT, THRESHOLD_DEFAULT, detect_ml
from .preprocess import SMOOTH_WINDOW, preprocess_recording
from .recording import AnnotationSet, ManometryRecording
from .windows import SwallowWindow, WindowStats, extract_training_windows


def ensure_preprocessed(r: ManometryRecording, w: int = SMOOTH_WINDOW) -> ManometryRecording:
    """Preprocess a raw recording; pass a preprocessed one through."""
    return r if r.preprocessed else preprocess_recording(r, w)


def window_seed_for(recording_id: str, base_seed: int = 0) -> int:
    """Stable per-recording seed for negative-window sampling."""
    return (base_seed + zlib.crc32(recording_id.encode())) % (2**31)


def collect_training_windows(
    pairs: list[tuple[ManometryRecording, AnnotationSet]],
    neg_per_pos: float = 1.0,
    base_seed: int = 0,
    preprocess_w: int = SMOOTH_WINDOW,
) -> tuple[list[SwallowWindow], list[WindowStats]]:
    """Extract labelled windows from several annotated recordings."""
    data: list[SwallowWindow] = []
    stats: list[WindowStats] = []
    for rec, ann in pairs:
        ann.validate_against(rec)
        rec = ensure_preprocessed(rec, preprocess_w)
        wins, st = extract_training_windows(
            rec, ann, neg_per_pos=neg_per_pos, rng_seed=window_seed_for(ann.recording_id, base_seed)
        )
        data.extend(wins)
        stats.append(st)
    return data, stats


def make_baseline_pipeline(params: BaselineParams | None = None, preprocess_w: int = SMOOTH_WINDOW):
    """Threshold-detector pipeline (the train set is ignored)."""
    cache: dict[int, ManometryRecording] = {}

    def run(train: list[tuple[ManometryRecording, AnnotationSet]], test: ManometryRecording):
        del train
        rec = cache.setdefault(id(test), ensure_preprocessed(test, preprocess_w))
        return detect_baseline(rec, params).starts

    return run


def make_ml_pipeline(
    train_cfg: TrainingConfig | None = None,
    neg_per_pos: float = 1.0,
    stride: int = 1,
    smooth_w: int = SMOOTH_WINDOW_DEFAULT,
    threshold: float = THRESHOLD_DEFAULT,
    window_seed: int = 0,
    preprocess_w: int = SMOOTH_WINDOW,
):
    """Classifier pipeline: train on the fold's windows, detect on the rest.

    Negative-window sampling derives a per-recording seed from
    window_seed plus a stable hash of the recording id, so fold
    composition does not change which negatives a recording contributes.
    """
    cfg = train_cfg or TrainingConfig()
    cache: dict[int, ManometryRecording] = {}

    def prep(rec: ManometryRecording) -> ManometryRecording:
        return cache.setdefault(id(rec), ensure_preprocessed(rec, preprocess_w))

    def run(train: list[tuple[ManometryRecording, AnnotationSet]], test: ManometryRecording):
        data = []
        for rec, ann in train:
            seed = window_seed_for(ann.recording_id, window_seed)
            wins, _ = extract_training_windows(prep(rec), ann, neg_per_pos=neg_per_pos, rng_seed=seed)
            data.extend(wins)
        model = train_classifier(data, cfg)
        result = detect_ml(model, prep(test), stride=stride, smooth_w=smooth_w, threshold=threshold)
        return result.starts

    return run
