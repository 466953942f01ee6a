"""Lightweight convolutional map scorer, built from scratch.

Two 3x3 convolutions (stride 1, pad 1, ReLU) with a 128-wide hidden state,
global average pooling and a linear head produce one scalar per normalized
similarity map. Backpropagation is manual (im2col + GEMM) and the optimizer
is Adam. Training uses the bidirectional contrastive cross-entropy over a
B x B score matrix with identity labels.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dcsm import build_fr_table  # noqa: F401  (re-export convenience)
from .errors import (
    EmptyDataset,
    NonFiniteGradient,
    ShapeMismatch,
    ZeroVariance,
)
from .oracle import DenseEmbedding
from .world import ConceptWorld

PARAM_FIELDS = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "head_w", "head_b")


@dataclass
class ScorerParams:
    conv1_w: np.ndarray  # (hidden, 1, 3, 3)
    conv1_b: np.ndarray  # (hidden,)
    conv2_w: np.ndarray  # (hidden, hidden, 3, 3)
    conv2_b: np.ndarray  # (hidden,)
    head_w: np.ndarray  # (hidden,)
    head_b: np.ndarray  # (1,)

    @property
    def hidden(self) -> int:
        return self.conv1_w.shape[0]

    def items(self):
        return [(name, getattr(self, name)) for name in PARAM_FIELDS]

    def count(self) -> int:
        return sum(a.size for _, a in self.items())

    def astype(self, dtype) -> "ScorerParams":
        return ScorerParams(**{n: a.astype(dtype) for n, a in self.items()})

    def copy(self) -> "ScorerParams":
        return ScorerParams(**{n: a.copy() for n, a in self.items()})


def init_params(
    hidden: int = 128,
    seed: int = 0,
    dtype=np.float32,
    pool: str = "gap",
    map_shape=None,
) -> ScorerParams:
    """He-style seeded initialization, zero biases.

    pool="gap" averages conv features over the map before the head;
    pool="flatten" gives the head one weight per feature and position
    (position-aware readout; requires map_shape=(h, w)).
    """
    rng = np.random.default_rng(seed)
    c1 = rng.standard_normal((hidden, 1, 3, 3)) * np.sqrt(2.0 / 9.0)
    c2 = rng.standard_normal((hidden, hidden, 3, 3)) * np.sqrt(2.0 / (9.0 * hidden))
    if pool == "gap":
        head_len = hidden
    elif pool == "flatten":
        if map_shape is None:
            raise ShapeMismatch("pool='flatten' needs map_shape=(h, w)")
        head_len = hidden * map_shape[0] * map_shape[1]
    else:
        raise ShapeMismatch(f"unknown pool mode {pool!r}")
    hw = rng.standard_normal(head_len) * np.sqrt(1.0 / head_len)
    return ScorerParams(
        conv1_w=c1.astype(dtype),
        conv1_b=np.zeros(hidden, dtype=dtype),
        conv2_w=c2.astype(dtype),
        conv2_b=np.zeros(hidden, dtype=dtype),
        head_w=hw.astype(dtype),
        head_b=np.zeros(1, dtype=dtype),
    )


# -- conv plumbing (im2col / col2im, 3x3, stride 1, pad 1) ------------------


def _im2col(x: np.ndarray) -> np.ndarray:
    """(n, c, h, w) -> (n*h*w, c*9) patches of the zero-padded input."""
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2, w + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    cols = np.empty((n, h, w, c, 9), dtype=x.dtype)
    k = 0
    for dy in range(3):
        for dx in range(3):
            cols[..., k] = xp[:, :, dy : dy + h, dx : dx + w].transpose(0, 2, 3, 1)
            k += 1
    return cols.reshape(n * h * w, c * 9)


def _col2im(dcol: np.ndarray, shape) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patch gradients back to the input."""
    n, c, h, w = shape
    dxp = np.zeros((n, c, h + 2, w + 2), dtype=dcol.dtype)
    dcols = dcol.reshape(n, h, w, c, 9)
    k = 0
    for dy in range(3):
        for dx in range(3):
            dxp[:, :, dy : dy + h, dx : dx + w] += dcols[..., k].transpose(0, 3, 1, 2)
            k += 1
    return dxp[:, :, 1:-1, 1:-1]


def _conv_forward(x, weight, bias):
    n, c, h, w = x.shape
    out_c = weight.shape[0]
    col = _im2col(x)
    wmat = weight.reshape(out_c, c * 9)
    out = col @ wmat.T + bias
    return out.reshape(n, h, w, out_c).transpose(0, 3, 1, 2), col


def _conv_backward(dout, col, weight, x_shape):
    n, c, h, w = x_shape
    out_c = weight.shape[0]
    dmat = dout.transpose(0, 2, 3, 1).reshape(n * h * w, out_c)
    wmat = weight.reshape(out_c, c * 9)
    dw = (dmat.T @ col).reshape(weight.shape)
    db = dmat.sum(axis=0)
    dx = _col2im(dmat @ wmat, x_shape)
    return dx, dw, db


# -- forward / backward ------------------------------------------------------


def forward(params: ScorerParams, maps: np.ndarray, want_cache: bool = False):
    """Score a stack of normalized maps.

    maps: (n, h, w) or (h, w). Returns (n,) scores (scalar for 2-D input).
    """
    single = maps.ndim == 2
    if single:
        maps = maps[None]
    if maps.ndim != 3:
        raise ShapeMismatch(f"expected (n, h, w) maps, got shape {maps.shape}")
    x = maps[:, None].astype(params.conv1_w.dtype)

    z1, col1 = _conv_forward(x, params.conv1_w, params.conv1_b)
    a1 = np.maximum(z1, 0)
    z2, col2 = _conv_forward(a1, params.conv2_w, params.conv2_b)
    a2 = np.maximum(z2, 0)
    if params.head_w.size == params.hidden:
        pooled = a2.mean(axis=(2, 3))  # global average pool -> (n, hidden)
    else:
        pooled = a2.reshape(a2.shape[0], -1)  # position-aware readout
    scores = pooled @ params.head_w + params.head_b[0]

    if not want_cache:
        return scores[0] if single else scores
    cache = {
        "x_shape": x.shape,
        "a1_shape": a1.shape,
        "col1": col1,
        "col2": col2,
        "mask1": z1 > 0,
        "mask2": z2 > 0,
        "pooled": pooled,
    }
    return scores, cache


def backward_from_scores(params: ScorerParams, cache, dscores: np.ndarray) -> dict:
    """Gradients of sum(dscores * scores) w.r.t. every parameter."""
    n = cache["pooled"].shape[0]
    hidden = params.hidden
    _, _, h, w = cache["a1_shape"]
    dtype = params.conv1_w.dtype
    dscores = dscores.astype(dtype)

    grads = {}
    grads["head_b"] = np.array([dscores.sum()], dtype=dtype)
    grads["head_w"] = dscores @ cache["pooled"]
    dpooled = np.outer(dscores, params.head_w)
    if params.head_w.size == hidden:
        da2 = np.broadcast_to(
            dpooled[:, :, None, None] / (h * w), (n, hidden, h, w)
        ).astype(dtype)
    else:
        da2 = dpooled.reshape(n, hidden, h, w)
    dz2 = da2 * cache["mask2"]
    da1, grads["conv2_w"], grads["conv2_b"] = _conv_backward(
        dz2, cache["col2"], params.conv2_w, cache["a1_shape"]
    )
    dz1 = da1 * cache["mask1"]
    _, grads["conv1_w"], grads["conv1_b"] = _conv_backward(
        dz1, cache["col1"], params.conv1_w, cache["x_shape"]
    )
    return grads


def contrastive_loss(scores: np.ndarray):
    """Bidirectional softmax cross-entropy against identity labels.

    Returns (loss, dloss/dscores). Log-sum-exp stabilized; equals 2 ln B on
    a constant matrix and tends to 0 for strongly diagonal scores.
    """
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ShapeMismatch(f"scores must be square, got {scores.shape}")
    b = scores.shape[0]
    s = scores.astype(np.float64)

    def ce_rows(m):
        shifted = m - m.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        logp = shifted - logz
        probs = np.exp(logp)
        loss = -np.trace(logp) / b
        grad = (probs - np.eye(b)) / b
        return loss, grad

    loss_r, grad_r = ce_rows(s)
    loss_c, grad_c = ce_rows(s.T)
    return loss_r + loss_c, grad_r + grad_c.T


def batch_loss_and_grads(params: ScorerParams, maps: np.ndarray):
    """Loss and parameter gradients for a (B, B, h, w) map batch."""
    b = maps.shape[0]
    flat = maps.reshape(b * b, *maps.shape[2:])
    scores, cache = forward(params, flat, want_cache=True)
    loss, dscores = contrastive_loss(scores.reshape(b, b))
    grads = backward_from_scores(params, cache, dscores.reshape(b * b))
    return loss, grads, scores.reshape(b, b)


def gradient_check(
    params: ScorerParams,
    maps: np.ndarray,
    eps: float = 1e-4,
    samples_per_tensor: int = 40,
    seed: int = 0,
) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Runs in double precision. Coordinates whose +/- eps perturbation flips a
    ReLU activation are skipped: the loss is not differentiable across the
    kink, so a central difference there measures nothing.
    """
    params = params.astype(np.float64)
    maps = maps.astype(np.float64)
    loss, grads, _ = batch_loss_and_grads(params, maps)
    rng = np.random.default_rng(seed)
    b = maps.shape[0]
    flat_maps = maps.reshape(b * b, *maps.shape[2:])

    def masks(p):
        _, cache = forward(p, flat_maps, want_cache=True)
        return cache["mask1"], cache["mask2"]

    worst = 0.0
    for name, arr in params.items():
        flat = arr.ravel()
        gflat = grads[name].ravel()
        idx = rng.choice(flat.size, size=min(flat.size, samples_per_tensor), replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            m1p, m2p = masks(params)
            lp, _, _ = batch_loss_and_grads(params, maps)
            flat[i] = orig - eps
            m1m, m2m = masks(params)
            lm, _, _ = batch_loss_and_grads(params, maps)
            flat[i] = orig
            if not (np.array_equal(m1p, m1m) and np.array_equal(m2p, m2m)):
                continue  # kink crossed; central difference undefined
            numeric = (lp - lm) / (2 * eps)
            denom = max(abs(numeric), abs(gflat[i]), 1e-8)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst


# -- Adam --------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ScorerParams, lr: float = 1e-3) -> "AdamState":
        zeros = {n: np.zeros_like(a) for n, a in params.items()}
        return cls(m=zeros, v={n: np.zeros_like(a) for n, a in params.items()}, lr=lr)


def adam_step(params: ScorerParams, grads: dict, state: AdamState) -> ScorerParams:
    """Standard bias-corrected Adam update; returns new parameters."""
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains non-finite entries")
    state.step += 1
    t = state.step
    new = {}
    for name, value in params.items():
        g = grads[name].astype(value.dtype)
        state.m[name] = state.beta1 * state.m[name] + (1 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1 - state.beta2) * g * g
        mhat = state.m[name] / (1 - state.beta1**t)
        vhat = state.v[name] / (1 - state.beta2**t)
        new[name] = value - state.lr * mhat / (np.sqrt(vhat) + state.eps)
    return type(params)(**new)


# -- training ----------------------------------------------------------------


@dataclass
class TrainPair:
    """One hard positive (text, image) pair and its hard negative twin."""

    pos_text: DenseEmbedding
    pos_image: DenseEmbedding
    neg_text: DenseEmbedding
    neg_image: DenseEmbedding


@dataclass
class TrainConfig:
    hidden: int = 128
    lr: float = 1e-3
    batch_size: int = 8  # rows of the score matrix; batch_size//2 samples
    epochs: int = 2
    seed: int = 0
    pool: str = "flatten"  # "gap" | "flatten"


def build_map_batch(texts, images, world: ConceptWorld, table) -> np.ndarray:
    """All pairwise normalized maps for B texts x B images -> (B, B, h, w).

    table=None skips functional-row insertion (the ablation path).
    """
    tstack = np.stack([t.rows for t in texts]).astype(np.float32)
    istack = np.stack([i.rows for i in images]).astype(np.float32)
    values = np.einsum("ite,jpe->ijtp", tstack, istack)
    if table is not None:
        from .dcsm import _functional_class

        for i, text in enumerate(texts):
            for row, role in enumerate(text.roles):
                key = _functional_class(world, role)
                if key is not None:
                    values[i, :, row, :] = table.entries[key].astype(np.float32)
    mean = values.mean(axis=(2, 3), keepdims=True)
    std = values.std(axis=(2, 3), keepdims=True)
    if np.any(std < 1e-12):
        raise ZeroVariance("constant map in batch")
    return (values - mean) / std


def train(
    data,
    world: ConceptWorld,
    table,
    cfg: TrainConfig,
    params: Optional[ScorerParams] = None,
):
    """Epochs of seeded shuffled mini-batches over hard positive/negative
    pairs; returns (params, log) with one (epoch, mean_loss, diag_accuracy)
    entry per epoch."""
    if not data:
        raise EmptyDataset("no training pairs")
    if params is None:
        shape = (data[0].pos_text.rows.shape[0], data[0].pos_image.rows.shape[0])
        params = init_params(cfg.hidden, seed=cfg.seed, pool=cfg.pool, map_shape=shape)
    state = AdamState.for_params(params, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    per_batch = min(max(1, cfg.batch_size // 2), len(data))
    log = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(data))
        losses = []
        hits = 0
        total = 0
        for start in range(0, len(order) - per_batch + 1, per_batch):
            chunk = [data[i] for i in order[start : start + per_batch]]
            texts = []
            images = []
            for pair in chunk:
                texts.extend([pair.pos_text, pair.neg_text])
                images.extend([pair.pos_image, pair.neg_image])
            maps = build_map_batch(texts, images, world, table)
            loss, grads, scores = batch_loss_and_grads(params, maps)
            params = adam_step(params, grads, state)
            losses.append(loss)
            hits += int((scores.argmax(axis=1) == np.arange(scores.shape[0])).sum())
            total += scores.shape[0]
        log.append(
            {
                "epoch": epoch + 1,
                "loss": float(np.mean(losses)),
                "train_accuracy": hits / total if total else float("nan"),
            }
        )
    return params, log


# -- checkpoint format (magic "DCSM") ---------------------------------------

_CKPT_MAGIC = b"DCSM"
_CKPT_VERSION = 1


def save_checkpoint(path, params: ScorerParams) -> None:
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<II", _CKPT_VERSION, len(PARAM_FIELDS)))
        for _, arr in params.items():
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f4").tobytes(order="C"))


def load_checkpoint(path) -> ScorerParams:
    with open(path, "rb") as fh:
        if fh.read(4) != _CKPT_MAGIC:
            raise ShapeMismatch("bad checkpoint magic")
        version, count = struct.unpack("<II", fh.read(8))
        if version != _CKPT_VERSION or count != len(PARAM_FIELDS):
            raise ShapeMismatch("unsupported checkpoint layout")
        arrays = {}
        for name in PARAM_FIELDS:
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            size = int(np.prod(shape))
            arrays[name] = np.frombuffer(fh.read(size * 4), dtype="<f4").reshape(shape).copy()
        return ScorerParams(**arrays)
