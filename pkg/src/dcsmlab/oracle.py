"""Synthetic oracle embeddings.

Two layers of make-believe encoder stand in for trained CLIP encoders:

  * global single-vector embeddings placed exactly where the geometric
    analysis assumes them (attributed objects as weighted superpositions
    with the unit-norm weight p, composites as normalized sums, negation
    as the antipode on a simplex layout), and
  * dense per-token / per-patch embeddings in which background patches and
    the CLS row carry scene-level content while object patches carry local
    object + attribute content.

Text and image oracle vectors coincide (no modality gap).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ConfigInvalid,
    DegenerateSum,
    GridOverflow,
    NoRealRoot,
    RequiresSimplex,
    UnknownToken,
)
from .hypersphere import normalize, random_unit_from, regular_simplex
from .world import ConceptWorld, Token

ROLE_CLS = "CLS"
ROLE_PATCH = "patch"
ROLE_TOKEN = "token"
ROLE_EOS = "EOS"
ROLE_PAD = "pad"

_ROLE_BYTES = {ROLE_CLS: 0, ROLE_PATCH: 1, ROLE_TOKEN: 2, ROLE_EOS: 3, ROLE_PAD: 4}
_BYTES_ROLE = {v: k for k, v in _ROLE_BYTES.items()}


@dataclass
class GlobalEmbeddingSpace:
    """Unit-vector registries for the single-vector oracle."""

    world: ConceptWorld
    concept_vectors: np.ndarray  # (M, N); doubles as both i(x) and t(x)
    attribute_vectors: np.ndarray  # (A, N) text directions t(a)
    functional_vectors: dict  # term/conjunction name -> unit vector
    delta: float
    layout: str  # "simplex" | "random"

    @property
    def dimension(self) -> int:
        return self.concept_vectors.shape[1]

    def concept(self, ref) -> np.ndarray:
        return self.concept_vectors[self.world.object(ref).index]

    def attribute(self, ref) -> np.ndarray:
        return self.attribute_vectors[self.world.attribute(ref).index]


def build_global_space(
    world: ConceptWorld,
    delta: float = 0.02,
    layout: str = "random",
    seed: int = 0,
) -> GlobalEmbeddingSpace:
    """Concept vectors per layout, attribute and functional directions random."""
    if not (0.0 < delta < 0.5):
        raise ConfigInvalid(f"delta={delta} outside (0, 0.5)")
    if layout not in ("simplex", "random"):
        raise ConfigInvalid(f"unknown layout {layout!r}")
    m = len(world.objects)
    n = world.cfg.dimension
    rng = np.random.default_rng(seed)
    if layout == "simplex":
        concepts = regular_simplex(m, n).vertices
    else:
        concepts = np.stack([random_unit_from(rng, n) for _ in range(m)])
    attrs = np.stack([random_unit_from(rng, n) for _ in world.attributes])
    functional = {c.name: random_unit_from(rng, n) for c in world.compositional}
    functional["and"] = random_unit_from(rng, n)
    return GlobalEmbeddingSpace(
        world=world,
        concept_vectors=concepts,
        attribute_vectors=attrs,
        functional_vectors=functional,
        delta=delta,
        layout=layout,
    )


def attribute_weight(delta: float, cos_theta: float) -> float:
    """Positive root p of p^2 + 2(1-delta) p cos(theta) - (2 delta - delta^2) = 0.

    This is the weight that keeps (1-delta) i(x) + p t(a) on the sphere.
    """
    if delta == 0.0:
        return 0.0
    disc = 4.0 * (1.0 - delta) ** 2 * cos_theta**2 + 8.0 * delta - 4.0 * delta**2
    if disc < 0.0:  # impossible for delta in (0, 0.5); guard anyway
        raise NoRealRoot(f"discriminant {disc} < 0")
    return -(1.0 - delta) * cos_theta + 0.5 * math.sqrt(disc)


def embed_attributed(space: GlobalEmbeddingSpace, x, a) -> np.ndarray:
    """Unit embedding of object x carrying attribute a."""
    ix = space.concept(x)
    ta = space.attribute(a)
    p = attribute_weight(space.delta, float(np.dot(ix, ta)))
    out = (1.0 - space.delta) * ix + p * ta
    assert abs(float(np.linalg.norm(out)) - 1.0) < 1e-12
    return out


def embed_composite(space: GlobalEmbeddingSpace, parts) -> np.ndarray:
    """Normalized superposition of constituent embeddings."""
    total = np.sum(np.asarray(parts, dtype=np.float64), axis=0)
    norm = float(np.linalg.norm(total))
    if norm < 1e-10:
        raise DegenerateSum("constituents cancel; superposition undefined")
    return total / norm


def embed_negation_text(space: GlobalEmbeddingSpace, x) -> np.ndarray:
    """Ideal negated-concept text vector: the antipode of i(x)."""
    if space.layout != "simplex":
        raise RequiresSimplex("negation placement is derived for the simplex layout")
    return -space.concept(x)


# -- dense embeddings ----------------------------------------------------


@dataclass(frozen=True)
class SceneSpec:
    """Placement list (object, attribute, (row, col) grid cell)."""

    placements: tuple  # of (ConceptId, AttributeId, (row, col))
    negated: tuple = ()  # concepts asserted absent, for bookkeeping only


@dataclass(frozen=True)
class DenseEncoderConfig:
    patch_grid: int = 4  # P; image embeddings have 1 + P*P rows
    t_max: int = 8  # text embeddings padded to this many rows
    w_obj: float = 0.8
    w_attr: float = 0.4
    w_global: float = 0.9
    noise: float = 0.15
    seed: int = 0


@dataclass
class DenseEmbedding:
    rows: np.ndarray  # (R, N) unit rows
    roles: list  # one role string per row
    grid: Optional[tuple] = None  # (P, P) for images


class DenseEncoder:
    """Deterministic dense oracle encoder over a global embedding space."""

    def __init__(self, space: GlobalEmbeddingSpace, cfg: DenseEncoderConfig):
        self.space = space
        self.world = space.world
        self.cfg = cfg

    def _token_vector(self, tok: Token, preceding: list) -> np.ndarray:
        if tok.kind == "obj":
            return self.space.concept(tok.name)
        if tok.kind == "attr":
            return self.space.attribute(tok.name)
        if tok.kind in ("relation", "location", "negation", "conj"):
            name = tok.name if tok.kind != "conj" else "and"
            return self.space.functional_vectors[name]
        if tok.kind == "eos":
            total = np.sum(preceding, axis=0)
            if float(np.linalg.norm(total)) < 1e-10:
                raise DegenerateSum("EOS superposition degenerate")
            return normalize(total)
        raise UnknownToken(f"unknown token kind {tok.kind!r}")

    def embed_text(self, tokens) -> DenseEmbedding:
        """Rows: one per token (EOS = superposition of the content rows),
        padded with EOS copies to t_max."""
        if len(tokens) > self.cfg.t_max:
            raise ConfigInvalid(
                f"{len(tokens)} tokens exceed t_max={self.cfg.t_max}"
            )
        rows = []
        roles = []
        for tok in tokens:
            rows.append(self._token_vector(tok, rows))
            roles.append(ROLE_EOS if tok.kind == "eos" else f"{ROLE_TOKEN}:{tok.kind}:{tok.name}")
        if not rows or roles[-1] != ROLE_EOS:
            raise UnknownToken("token stream must end with EOS")
        eos = rows[-1]
        while len(rows) < self.cfg.t_max:
            rows.append(eos)
            roles.append(ROLE_PAD)
        return DenseEmbedding(rows=np.stack(rows), roles=roles, grid=None)

    def embed_scene(self, scene: SceneSpec, sample_seed: int = 0) -> DenseEmbedding:
        """Per-patch unit rows over a P x P grid, CLS first.

        Object patches mix the object and attribute directions; background
        patches and the CLS row carry the scene superposition. Noise draws
        are deterministic for a fixed (config seed, sample seed).
        """
        p = self.cfg.patch_grid
        occupied = {}
        for concept, attr, cell in scene.placements:
            r, c = cell
            if not (0 <= r < p and 0 <= c < p):
                raise GridOverflow(f"cell {cell} outside {p}x{p} grid")
            if cell in occupied:
                raise GridOverflow(f"cell {cell} occupied twice")
            occupied[cell] = (concept, attr)

        rng = np.random.default_rng([self.cfg.seed, sample_seed])
        n = self.space.dimension
        sigma = self.cfg.noise

        if scene.placements:
            g_scene = normalize(
                np.sum([self.space.concept(c) for c, _, _ in scene.placements], axis=0)
            )
        elif sigma == 0.0:
            raise DegenerateSum("empty noiseless scene has no content")
        else:
            g_scene = np.zeros(n)

        def noisy(base):
            # noise is a direction scaled by sigma, so its size is relative
            # to the unit-scale content regardless of dimension
            direction = rng.standard_normal(n)
            vec = base + sigma * (direction / np.linalg.norm(direction))
            if float(np.linalg.norm(vec)) < 1e-10:
                raise DegenerateSum("patch content cancelled")
            return normalize(vec)

        rows = [noisy(self.cfg.w_global * g_scene)]
        roles = [ROLE_CLS]
        for r in range(p):
            for c in range(p):
                if (r, c) in occupied:
                    concept, attr = occupied[(r, c)]
                    base = self.cfg.w_obj * self.space.concept(concept)
                    if attr is not None:
                        base = base + self.cfg.w_attr * self.space.attribute(attr)
                    rows.append(noisy(base))
                else:
                    rows.append(noisy(self.cfg.w_global * g_scene))
                roles.append(f"{ROLE_PATCH}({r},{c})")
        return DenseEmbedding(rows=np.stack(rows), roles=roles, grid=(p, p))

    def embed_caption(self, text: str) -> DenseEmbedding:
        return self.embed_text(self.world.tokenize(text))


# -- flat binary batch format (magic "DCSE") ------------------------------

_DCSE_MAGIC = b"DCSE"
_DCSE_VERSION = 1


def write_dense_batch(path, embeddings) -> None:
    """Serialize same-shape dense embeddings: header, f32 rows, role bytes."""
    if not embeddings:
        raise ConfigInvalid("empty batch")
    rows, dim = embeddings[0].rows.shape
    for emb in embeddings:
        if emb.rows.shape != (rows, dim):
            raise ConfigInvalid("batch members must share one shape")
    with open(path, "wb") as fh:
        fh.write(_DCSE_MAGIC)
        fh.write(struct.pack("<III", _DCSE_VERSION, len(embeddings), rows))
        fh.write(struct.pack("<I", dim))
        for emb in embeddings:
            fh.write(emb.rows.astype("<f4").tobytes(order="C"))
        for emb in embeddings:
            fh.write(bytes(_ROLE_BYTES[role.split(":")[0].split("(")[0]] for role in emb.roles))


def read_dense_batch(path) -> list:
    """Read a DCSE file; roles come back as coarse tags only."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _DCSE_MAGIC:
            raise ConfigInvalid(f"bad magic {magic!r}")
        version, count, rows = struct.unpack("<III", fh.read(12))
        (dim,) = struct.unpack("<I", fh.read(4))
        if version != _DCSE_VERSION:
            raise ConfigInvalid(f"unsupported version {version}")
        out = []
        payload = np.frombuffer(fh.read(count * rows * dim * 4), dtype="<f4")
        payload = payload.reshape(count, rows, dim).astype(np.float64)
        tags = fh.read(count * rows)
        for i in range(count):
            roles = [_BYTES_ROLE[tags[i * rows + j]] for j in range(rows)]
            out.append(DenseEmbedding(rows=payload[i], roles=roles, grid=None))
        return out
