"""Small convolutional window classifier, implemented directly in numpy.

Architecture: conv 3x3 (8 filters) -> ReLU -> 2x2 max pool -> conv 3x3
(16 filters) -> ReLU -> 2x2 max pool -> flatten -> dense to 2 logits.
Forward and backward passes are written out explicitly so the analytic
gradients can be checked against finite differences; training is plain
minibatch SGD on the softmax cross-entropy. All arithmetic is float64
and every random draw comes from one seeded generator, making training
runs bit-reproducible.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidDataError, InvalidParameterError
from .windows import SwallowWindow, resize_batch, resize_window

CONV1_CHANNELS = 8
CONV2_CHANNELS = 16
KERNEL = 3
N_CLASSES = 2

PARAM_ORDER = ("w1", "b1", "w2", "b2", "w3", "b3")


@dataclass(frozen=True)
class TrainingConfig:
    """SGD hyperparameters for the window classifier."""

    learning_rate: float = 3e-3
    batch_size: int = 128
    epochs: int = 20
    seed: int = 0
    input_side: int = 64

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise InvalidParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise InvalidParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise InvalidParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.input_side < 10:
            raise InvalidParameterError(
                f"input_side must be >= 10 to survive two conv/pool stages, got {self.input_side}"
            )


@dataclass
class ClassifierModel:
    """Trained parameters plus everything needed to reapply them."""

    params: dict[str, np.ndarray]
    input_side: int
    raw_window_shape: tuple[int, int]
    training_meta: dict
    epoch_losses: list[float] = field(default_factory=list)
    schema_version: int = 1

    def digest(self) -> str:
        """Hex digest over all parameter bytes in declared order."""
        h = hashlib.sha256()
        for name in PARAM_ORDER:
            h.update(np.ascontiguousarray(self.params[name], dtype=np.float64).tobytes())
        return h.hexdigest()


def _pooled_side(side: int) -> int:
    return (side - KERNEL + 1) // 2


def feature_dim(side: int) -> int:
    """Flattened feature count entering the dense layer."""
    s = _pooled_side(_pooled_side(side))
    if s < 1:
        raise InvalidParameterError(f"input side {side} is too small for the architecture")
    return CONV2_CHANNELS * s * s


def init_params(side: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases."""

    def glorot(shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    k2 = KERNEL * KERNEL
    f = feature_dim(side)
    return {
        "w1": glorot((CONV1_CHANNELS, 1, KERNEL, KERNEL), k2, CONV1_CHANNELS * k2),
        "b1": np.zeros(CONV1_CHANNELS),
        "w2": glorot(
            (CONV2_CHANNELS, CONV1_CHANNELS, KERNEL, KERNEL),
            CONV1_CHANNELS * k2,
            CONV2_CHANNELS * k2,
        ),
        "b2": np.zeros(CONV2_CHANNELS),
        "w3": glorot((N_CLASSES, f), f, N_CLASSES),
        "b3": np.zeros(N_CLASSES),
    }


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Valid 3x3 convolution via im2col. Returns (out, cols) with cols cached."""
    n_out, n_in = w.shape[0], w.shape[1]
    batch = x.shape[0]
    win = sliding_window_view(x, (KERNEL, KERNEL), axis=(2, 3))  # (B,C,h,w,3,3)
    h, wd = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(batch * h * wd, n_in * KERNEL * KERNEL)
    out = cols @ w.reshape(n_out, -1).T + b
    return out.reshape(batch, h, wd, n_out).transpose(0, 3, 1, 2), cols


def _conv_grad_w(cols: np.ndarray, dout: np.ndarray):
    batch, n_out, h, wd = dout.shape
    dcols = dout.transpose(0, 2, 3, 1).reshape(batch * h * wd, n_out)
    dw_flat = dcols.T @ cols
    return dw_flat, dout.sum(axis=(0, 2, 3))


def _conv_grad_x(dout: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the convolution input (full correlation with flipped kernels)."""
    batch, n_out = dout.shape[0], dout.shape[1]
    n_in = w.shape[1]
    pad = KERNEL - 1
    padded = np.pad(dout, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(padded, (KERNEL, KERNEL), axis=(2, 3))  # (B,O,H,W,3,3)
    h, wd = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(batch * h * wd, n_out * KERNEL * KERNEL)
    wf = w[:, :, ::-1, ::-1].transpose(0, 2, 3, 1).reshape(n_out * KERNEL * KERNEL, n_in)
    dx = cols @ wf
    return dx.reshape(batch, h, wd, n_in).transpose(0, 3, 1, 2)


def _pool_forward(x: np.ndarray):
    """2x2 max pool, stride 2; odd trailing rows/columns are dropped.

    Ties inside a pool window route to the first element in row-major
    order, both forward and backward.
    """
    batch, ch, h, w = x.shape
    h2, w2 = h // 2, w // 2
    blocks = (
        x[:, :, : h2 * 2, : w2 * 2]
        .reshape(batch, ch, h2, 2, w2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(batch, ch, h2, w2, 4)
    )
    idx = blocks.argmax(axis=4)
    out = np.take_along_axis(blocks, idx[..., None], axis=4)[..., 0]
    return out, idx


def _pool_backward(dout: np.ndarray, idx: np.ndarray, in_shape: tuple[int, ...]) -> np.ndarray:
    batch, ch, h, w = in_shape
    h2, w2 = dout.shape[2], dout.shape[3]
    dblocks = np.zeros((batch, ch, h2, w2, 4))
    np.put_along_axis(dblocks, idx[..., None], dout[..., None], axis=4)
    dx = np.zeros(in_shape)
    dx[:, :, : h2 * 2, : w2 * 2] = (
        dblocks.reshape(batch, ch, h2, w2, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(batch, ch, h2 * 2, w2 * 2)
    )
    return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, numerically stabilized."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def network_forward(params: dict[str, np.ndarray], x: np.ndarray):
    """Logits plus the cache needed for the backward pass.

    x is a (batch, side, side) stack of resized windows in scaled units
    [0, 255]; the network divides by 255 internally.
    """
    x = np.asarray(x, dtype=np.float64)
    xin = (x / 255.0)[:, None, :, :]
    pre1, cols1 = _conv_forward(xin, params["w1"], params["b1"])
    act1 = np.maximum(pre1, 0.0)
    pool1, idx1 = _pool_forward(act1)
    pre2, cols2 = _conv_forward(pool1, params["w2"], params["b2"])
    act2 = np.maximum(pre2, 0.0)
    pool2, idx2 = _pool_forward(act2)
    flat = pool2.reshape(x.shape[0], -1)
    logits = flat @ params["w3"].T + params["b3"]
    cache = (cols1, pre1, idx1, act1.shape, pool1, cols2, pre2, idx2, act2.shape, pool2.shape, flat)
    return logits, cache


def network_loss(params: dict[str, np.ndarray], x: np.ndarray, labels: np.ndarray) -> float:
    """Mean softmax cross-entropy of a batch."""
    logits, _ = network_forward(params, x)
    p = softmax(logits)
    picked = p[np.arange(len(labels)), labels]
    return float(-np.log(picked).mean())


def loss_and_grads(params: dict[str, np.ndarray], x: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy loss and analytic gradients for every parameter."""
    labels = np.asarray(labels, dtype=np.int64)
    logits, cache = network_forward(params, x)
    cols1, pre1, idx1, shape1, pool1, cols2, pre2, idx2, shape2, pool2_shape, flat = cache
    n = len(labels)
    p = softmax(logits)
    loss = float(-np.log(p[np.arange(n), labels]).mean())

    dlogits = p.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    dw3 = dlogits.T @ flat
    db3 = dlogits.sum(axis=0)
    dflat = dlogits @ params["w3"]
    dpool2 = dflat.reshape(pool2_shape)
    dact2 = _pool_backward(dpool2, idx2, shape2)
    dpre2 = dact2 * (pre2 > 0.0)
    dw2_flat, db2 = _conv_grad_w(cols2, dpre2)
    dpool1 = _conv_grad_x(dpre2, params["w2"])
    dact1 = _pool_backward(dpool1, idx1, shape1)
    dpre1 = dact1 * (pre1 > 0.0)
    dw1_flat, db1 = _conv_grad_w(cols1, dpre1)

    grads = {
        "w1": dw1_flat.reshape(params["w1"].shape),
        "b1": db1,
        "w2": dw2_flat.reshape(params["w2"].shape),
        "b2": db2,
        "w3": dw3,
        "b3": db3,
    }
    return loss, grads


def train_classifier(data: Sequence[SwallowWindow], cfg: TrainingConfig | None = None) -> ClassifierModel:
    """Train the classifier on labelled windows with minibatch SGD.

    Windows are resized once up front. Epoch order, batch composition and
    weight initialization all come from the seeded generator, so the same
    data and seed give bit-identical parameters. Per-epoch mean training
    loss is recorded on the returned model.
    """
    cfg = cfg or TrainingConfig()
    if not data:
        raise InvalidDataError("training data is empty")
    labels = np.array([w.label for w in data], dtype=np.int64)
    if len(set(labels.tolist())) < 2:
        raise InvalidDataError("training data must contain both classes")
    raw_shape = data[0].values.shape
    for w in data:
        if w.values.shape != raw_shape:
            raise InvalidDataError(
                f"inconsistent window shapes: {w.values.shape} vs {raw_shape}"
            )

    stack = np.stack([w.values for w in data]).astype(np.float64)
    x = resize_batch(stack, cfg.input_side)

    rng = np.random.default_rng(cfg.seed)
    params = init_params(cfg.input_side, rng)
    n = len(data)
    epoch_losses: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            loss, grads = loss_and_grads(params, x[batch], labels[batch])
            for name in PARAM_ORDER:
                params[name] = params[name] - cfg.learning_rate * grads[name]
            total += loss * len(batch)
        epoch_losses.append(total / n)

    return ClassifierModel(
        params=params,
        input_side=cfg.input_side,
        raw_window_shape=(int(raw_shape[0]), int(raw_shape[1])),
        training_meta={
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
        },
        epoch_losses=epoch_losses,
    )


def classify_batch(model: ClassifierModel, resized: np.ndarray):
    """Classes and confidences for a stack of already-resized windows.

    Confidence is the softmax probability of the predicted class (always
    >= 0.5 for two classes); exactly tied probabilities resolve to class 0.
    """
    logits, _ = network_forward(model.params, resized)
    p = softmax(logits)
    classes = np.argmax(p, axis=1)
    confidences = p[np.arange(p.shape[0]), classes]
    return classes.astype(np.int64), confidences


def classify_window(model: ClassifierModel, w: np.ndarray) -> tuple[int, float]:
    """Classify one raw window (resized internally to the model's side)."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != model.raw_window_shape:
        raise InvalidDataError(
            f"window shape {w.shape} does not match model input {model.raw_window_shape}"
        )
    resized = resize_window(w, model.input_side)
    classes, confidences = classify_batch(model, resized[None])
    return int(classes[0]), float(confidences[0])
