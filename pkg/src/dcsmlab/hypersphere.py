"""Primitives for unit vectors on the sphere S^(N-1).

Unit vectors are plain float64 numpy arrays of shape (n,) with Euclidean
norm 1. All operations here are pure; nothing mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateObjective,
    DimensionMismatch,
    DimensionTooSmall,
    ZeroVector,
)

UNIT_NORM_TOL = 1e-12


def normalize(v) -> np.ndarray:
    """Scale v to unit norm, preserving direction."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < 1e-300:
        raise ZeroVector("cannot normalize a (near-)zero vector")
    return v / norm


def is_unit(v, tol: float = UNIT_NORM_TOL) -> bool:
    v = np.asarray(v, dtype=np.float64)
    return v.ndim == 1 and v.size >= 2 and abs(float(np.linalg.norm(v)) - 1.0) <= tol


def cosine(a, b) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def random_unit(seed: int, n: int) -> np.ndarray:
    """Seeded isotropic random direction (normalized standard Gaussian)."""
    if n < 2:
        raise DimensionTooSmall("need n >= 2")
    rng = np.random.default_rng(seed)
    return normalize(rng.standard_normal(n))


def random_unit_from(rng: np.random.Generator, n: int) -> np.ndarray:
    """Isotropic random direction drawn from an existing generator."""
    if n < 2:
        raise DimensionTooSmall("need n >= 2")
    return normalize(rng.standard_normal(n))


@dataclass(frozen=True)
class SimplexFrame:
    """M equiangular unit vectors in R^n with pairwise cosine -1/(M-1)."""

    vertices: np.ndarray  # shape (m, n), rows are unit vectors
    pairwise_cosine: float

    @property
    def m(self) -> int:
        return self.vertices.shape[0]

    @property
    def n(self) -> int:
        return self.vertices.shape[1]


def regular_simplex(m: int, n: int) -> SimplexFrame:
    """Deterministic regular simplex frame of m vertices embedded in R^n.

    Construction: take the m standard basis vectors of R^m, subtract their
    centroid, pick an orthonormal basis of the (m-1)-dimensional span, and
    embed the renormalized vertices into the first m-1 coordinates of R^n.
    """
    if m < 2:
        raise DimensionTooSmall("need m >= 2")
    if m > n + 1:
        raise DimensionTooSmall(f"m={m} equiangular unit vectors need n >= m-1")

    centered = np.eye(m) - np.full((m, m), 1.0 / m)
    # Rows of `centered` span an (m-1)-dim subspace; SVD gives an exact
    # orthonormal basis of it.
    _, s, vt = np.linalg.svd(centered)
    basis = vt[: m - 1]  # (m-1, m)
    coords = centered @ basis.T  # (m, m-1)
    coords /= np.linalg.norm(coords, axis=1, keepdims=True)

    vertices = np.zeros((m, n))
    vertices[:, : m - 1] = coords
    return SimplexFrame(vertices=vertices, pairwise_cosine=-1.0 / (m - 1))


@dataclass(frozen=True)
class SphereObjective:
    """Linear objective u -> sum_i w_i (u . v_i), maximized over the sphere."""

    weights: np.ndarray  # shape (k,)
    vectors: np.ndarray  # shape (k, n), rows are unit vectors

    @classmethod
    def from_terms(cls, terms) -> "SphereObjective":
        weights = np.array([w for w, _ in terms], dtype=np.float64)
        vectors = np.array([np.asarray(v, dtype=np.float64) for _, v in terms])
        return cls(weights=weights, vectors=vectors)

    def direction(self) -> np.ndarray:
        """Weighted vector sum; the analytic optimum is its normalization."""
        return self.weights @ self.vectors

    def value(self, u) -> float:
        return float(np.dot(self.direction(), u))


def sphere_argmax(
    obj: SphereObjective,
    restarts: int = 4,
    steps: int = 2000,
    step_size: float = 0.1,
    seed: int = 0,
) -> np.ndarray:
    """Projected gradient ascent for the sphere-constrained linear argmax.

    Steps in the (constant) gradient direction and renormalizes; the best
    endpoint over seeded restarts is returned. Matches the analytic optimum
    normalize(sum_i w_i v_i) to within 1e-6 in objective value.
    """
    if obj.weights.size == 0 or not np.any(obj.weights != 0.0):
        raise DegenerateObjective("objective has no nonzero terms")
    g = obj.direction()
    if float(np.linalg.norm(g)) < 1e-10:
        raise DegenerateObjective("weighted vector sum is (near-)zero")

    n = obj.vectors.shape[1]
    best_u = None
    best_val = -np.inf
    for r in range(restarts):
        u = random_unit(seed * restarts + r + 1, n)
        for _ in range(steps):
            u = normalize(u + step_size * g)
        val = obj.value(u)
        if val > best_val:
            best_val = val
            best_u = u
    return best_u
