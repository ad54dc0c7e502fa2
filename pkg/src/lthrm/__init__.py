"""Swallow detection and clustering for long-term esophageal manometry.

The package covers the full pipeline on 36-sensor pressure recordings:
synthetic data generation, preprocessing, a threshold detector, a small
convolutional window classifier, two-stage clustering of detected
swallows, and an evaluation protocol with recording-wise
cross-validation.
"""
from .baseline import BaselineParams, binarize_pressure, detect_baseline, find_peaks
from .cluster import (
    ClusteringResult,
    agglomerative_cluster,
    kmeans_cluster,
    select_cluster_count,
    two_stage_clustering,
)
from .cnn import ClassifierModel, TrainingConfig, classify_window, train_classifier
from .config import RunConfig, load_config
from .detect import DetectedEvent, DetectionResult, detect_ml, extract_events, sliding_window_inference
from .errors import (
    FormatError,
    InvalidDataError,
    InvalidParameterError,
    InvalidStateError,
    ManometryError,
)
from .evaluate import (
    DistanceHistogram,
    MatchConfig,
    Metrics,
    MetricsReport,
    compute_metrics,
    cross_validate,
    distance_histogram,
    fleiss_kappa,
    match_events,
    score_detections,
)
from .features import SwallowFeature, build_features, change_filter, prepare_feature
from .io import (
    read_annotations,
    read_clustering,
    read_detections,
    read_metrics,
    read_model,
    read_pca,
    read_recording,
    write_annotations,
    write_clustering,
    write_detections,
    write_metrics,
    write_model,
    write_pca,
    write_recording,
)
from .pca import PcaModel, fit_pca, project
from .pipeline import (
    collect_training_windows,
    ensure_preprocessed,
    make_baseline_pipeline,
    make_ml_pipeline,
)
from .preprocess import clip_and_scale, moving_average_time, preprocess_recording
from .recording import SENSOR_COUNT, AnnotationSet, ManometryRecording
from .report import kappa_summary, render_metrics_table, write_report
from .synth import TEMPLATES, SynthConfig, generate_recording
from .windows import SwallowWindow, extract_training_windows, resize_window

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet",
    "BaselineParams",
    "ClassifierModel",
    "ClusteringResult",
    "DetectedEvent",
    "DetectionResult",
    "DistanceHistogram",
    "FormatError",
    "InvalidDataError",
    "InvalidParameterError",
    "InvalidStateError",
    "ManometryError",
    "ManometryRecording",
    "MatchConfig",
    "Metrics",
    "MetricsReport",
    "PcaModel",
    "RunConfig",
    "SENSOR_COUNT",
    "SwallowFeature",
    "SwallowWindow",
    "SynthConfig",
    "TEMPLATES",
    "TrainingConfig",
    "agglomerative_cluster",
    "binarize_pressure",
    "build_features",
    "change_filter",
    "classify_window",
    "clip_and_scale",
    "collect_training_windows",
    "compute_metrics",
    "cross_validate",
    "detect_baseline",
    "detect_ml",
    "distance_histogram",
    "ensure_preprocessed",
    "extract_events",
    "extract_training_windows",
    "find_peaks",
    "fit_pca",
    "fleiss_kappa",
    "generate_recording",
    "kappa_summary",
    "kmeans_cluster",
    "load_config",
    "make_baseline_pipeline",
    "make_ml_pipeline",
    "match_events",
    "moving_average_time",
    "prepare_feature",
    "preprocess_recording",
    "project",
    "read_annotations",
    "read_clustering",
    "read_detections",
    "read_metrics",
    "read_model",
    "read_pca",
    "read_recording",
    "render_metrics_table",
    "resize_window",
    "score_detections",
    "select_cluster_count",
    "sliding_window_inference",
    "train_classifier",
    "two_stage_clustering",
    "write_annotations",
    "write_clustering",
    "write_detections",
    "write_metrics",
    "write_model",
    "write_pca",
    "write_recording",
    "write_report",
]
