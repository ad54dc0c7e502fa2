"""Change-based features describing swallow morphology.

A swallow window is reduced to how its pressures move: a horizontal
change filter (difference over a 10-sample lag), squared to emphasize
large changes, resized to a fixed 50 x 50 image, lightly blurred and
flattened. The resulting vectors feed PCA and clustering.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

from .errors import InvalidDataError, InvalidParameterError
from .windows import resize_window

CHANGE_LAG = 10
FEATURE_SIDE = 50
BLUR_SIGMA_DEFAULT = 1.0
_BLUR_SIZE = 5


def change_filter(w: np.ndarray) -> np.ndarray:
    """Convolve each sensor row with the length-10 kernel [-1, 0, ..., 0, 1].

    out[i, j] = w[i, j + 9] - w[i, j]; a 36 x 500 window becomes 36 x 491.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise InvalidDataError(f"expected a 2-D matrix, got ndim={w.ndim}")
    if w.shape[1] < CHANGE_LAG:
        raise InvalidDataError(
            f"window of width {w.shape[1]} is shorter than the change lag {CHANGE_LAG}"
        )
    return w[:, CHANGE_LAG - 1 :] - w[:, : w.shape[1] - CHANGE_LAG + 1]


def gaussian_kernel(sigma: float, size: int = _BLUR_SIZE) -> np.ndarray:
    """size x size Gaussian kernel normalized to sum 1."""
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def gaussian_blur(img: np.ndarray, sigma: float = BLUR_SIGMA_DEFAULT) -> np.ndarray:
    """5x5 Gaussian blur with border values clamped (edge replication)."""
    img = np.asarray(img, dtype=np.float64)
    return correlate(img, gaussian_kernel(sigma), mode="nearest")


def prepare_feature(w: np.ndarray, blur_sigma: float = BLUR_SIGMA_DEFAULT):
    """Change image and flattened feature vector for one window.

    Returns (change_image, vector): the 50 x 50 blurred squared-change
    image and its row-major flattening (length 2500).
    """
    change = change_filter(w)
    image = gaussian_blur(resize_window(change**2, FEATURE_SIDE), blur_sigma)
    return image, image.reshape(-1).copy()


@dataclass
class SwallowFeature:
    """Feature bundle for one detected or annotated swallow."""

    swallow_id: tuple[str, int]  # (recording id, start sample)
    raw_window: np.ndarray  # (sensors, 500)
    change_image: np.ndarray  # (50, 50)
    vector: np.ndarray  # (2500,)
    reduced: np.ndarray | None = None  # filled in by PCA projection


def build_features(
    windows: list[tuple[tuple[str, int], np.ndarray]],
    blur_sigma: float = BLUR_SIGMA_DEFAULT,
) -> list[SwallowFeature]:
    """Prepare features for a list of (swallow_id, window) pairs."""
    out = []
    for swallow_id, w in windows:
        image, vector = prepare_feature(w, blur_sigma)
        out.append(
            SwallowFeature(
                swallow_id=swallow_id,
                raw_window=np.asarray(w, dtype=np.float64),
                change_image=image,
                vector=vector,
            )
        )
    return out
