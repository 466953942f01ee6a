"""Single-vector baselines for the caption-choice benchmarks.

Both baselines see only the summary rows of the dense embeddings: the text
EOS row and the image CLS row — the classical one-vector-per-side score.

  * cosine: dot(EOS, CLS) with no trainable parameters,
  * mlp: a one-hidden-layer network on the concatenated summary vectors,
    trained with the same bidirectional contrastive loss as the map scorer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, ShapeMismatch
from .oracle import ROLE_CLS, ROLE_EOS, DenseEmbedding
from .scorer import AdamState, adam_step, contrastive_loss


def summary_row(emb: DenseEmbedding, role: str) -> np.ndarray:
    for i, r in enumerate(emb.roles):
        if r == role:
            return emb.rows[i]
    raise ShapeMismatch(f"embedding has no {role} row")


def cosine_score(text: DenseEmbedding, image: DenseEmbedding) -> float:
    return float(np.dot(summary_row(text, ROLE_EOS), summary_row(image, ROLE_CLS)))


# -- MLP on concatenated summary vectors -------------------------------------

PARAM_FIELDS = ("w1", "b1", "w2", "b2")


@dataclass
class MlpParams:
    w1: np.ndarray  # (hidden, 2N)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: np.ndarray  # (1,)

    def items(self):
        return [(name, getattr(self, name)) for name in PARAM_FIELDS]


def init_mlp(dimension: int, hidden: int = 128, seed: int = 0) -> MlpParams:
    rng = np.random.default_rng(seed)
    return MlpParams(
        w1=(rng.standard_normal((hidden, 2 * dimension)) * np.sqrt(2.0 / (2 * dimension))),
        b1=np.zeros(hidden),
        w2=rng.standard_normal(hidden) * np.sqrt(1.0 / hidden),
        b2=np.zeros(1),
    )


def mlp_forward(params: MlpParams, inputs: np.ndarray, want_cache: bool = False):
    """inputs: (k, 2N) concatenated (EOS, CLS) rows -> (k,) scores."""
    z1 = inputs @ params.w1.T + params.b1
    a1 = np.maximum(z1, 0)
    scores = a1 @ params.w2 + params.b2[0]
    if not want_cache:
        return scores
    return scores, {"inputs": inputs, "a1": a1, "mask": z1 > 0}


def mlp_backward(params: MlpParams, cache, dscores: np.ndarray) -> dict:
    da1 = np.outer(dscores, params.w2) * cache["mask"]
    return {
        "w2": dscores @ cache["a1"],
        "b2": np.array([dscores.sum()]),
        "w1": da1.T @ cache["inputs"],
        "b1": da1.sum(axis=0),
    }


def mlp_score(params: MlpParams, text: DenseEmbedding, image: DenseEmbedding) -> float:
    x = np.concatenate([summary_row(text, ROLE_EOS), summary_row(image, ROLE_CLS)])
    return float(mlp_forward(params, x[None])[0])


def train_mlp(data, cfg, dimension: int):
    """Contrastive training over hard positive/negative summary pairs.

    data: list of scorer.TrainPair; cfg: scorer.TrainConfig.
    """
    if not data:
        raise EmptyDataset("no training pairs")
    params = init_mlp(dimension, hidden=cfg.hidden, seed=cfg.seed)
    state = AdamState.for_params(params, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    per_batch = min(max(1, cfg.batch_size // 2), len(data))
    log = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(data))
        losses = []
        for start in range(0, len(order) - per_batch + 1, per_batch):
            chunk = [data[i] for i in order[start : start + per_batch]]
            eos = []
            cls = []
            for pair in chunk:
                eos.extend(
                    [summary_row(pair.pos_text, ROLE_EOS), summary_row(pair.neg_text, ROLE_EOS)]
                )
                cls.extend(
                    [summary_row(pair.pos_image, ROLE_CLS), summary_row(pair.neg_image, ROLE_CLS)]
                )
            b = len(eos)
            inputs = np.stack(
                [np.concatenate([eos[i], cls[j]]) for i in range(b) for j in range(b)]
            )
            scores, cache = mlp_forward(params, inputs, want_cache=True)
            loss, dscores = contrastive_loss(scores.reshape(b, b))
            grads = mlp_backward(params, cache, dscores.reshape(b * b))
            params = adam_step(params, grads, state)
            losses.append(loss)
        log.append({"epoch": epoch + 1, "loss": float(np.mean(losses))})
    return params, log
