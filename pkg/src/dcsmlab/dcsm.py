"""Dense cosine similarity maps with functional-row overwrite and z-scoring.

Pipeline order: compute -> apply_frs -> zscore. Functional rows are inserted
before normalization so their magnitudes land on the same scale as the
similarity values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigInvalid, DimensionMismatch, MissingFrEntry, ZeroVariance
from .oracle import DenseEmbedding
from .world import ConceptWorld

FUNCTIONAL_KINDS = ("relation", "location", "negation")


@dataclass
class Dcsm:
    """Token x patch cosine-similarity matrix for one (text, image) pair."""

    values: np.ndarray  # (T_max, 1 + P*P)
    fr_applied: bool = False
    normalized: bool = False
    provenance: tuple = ("", "")
    token_roles: tuple = ()

    @property
    def shape(self):
        return self.values.shape


@dataclass
class FrTable:
    """One fixed random row per functional-word synonym class."""

    entries: dict  # class key -> np.ndarray of length (1 + P*P)
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "entries": {k: v.tolist() for k, v in sorted(self.entries.items())},
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "FrTable":
        data = json.loads(text)
        return cls(
            entries={k: np.asarray(v, dtype=np.float64) for k, v in data["entries"].items()},
            seed=data["seed"],
        )


def build_fr_table(world: ConceptWorld, num_columns: int, seed: int = 0) -> FrTable:
    """Sample one uniform [-1, 1] row per synonym class, deterministically."""
    rng = np.random.default_rng(seed)
    entries = {}
    for key in world.fr_classes:
        entries[key] = rng.uniform(-1.0, 1.0, size=num_columns)
    return FrTable(entries=entries, seed=seed)


def compute_dcsm(text: DenseEmbedding, image: DenseEmbedding, provenance=("", "")) -> Dcsm:
    """Pairwise cosines between every text row and every image row."""
    if text.rows.shape[1] != image.rows.shape[1]:
        raise DimensionMismatch(
            f"embedding dims differ: {text.rows.shape[1]} vs {image.rows.shape[1]}"
        )
    values = np.clip(text.rows @ image.rows.T, -1.0, 1.0)
    return Dcsm(
        values=values,
        provenance=tuple(provenance),
        token_roles=tuple(text.roles),
    )


def _functional_class(world: ConceptWorld, role: str) -> Optional[str]:
    parts = role.split(":")
    if len(parts) == 3 and parts[0] == "token" and parts[1] in FUNCTIONAL_KINDS:
        return world.synonym_class[parts[2]]
    return None


def apply_frs(map_: Dcsm, world: ConceptWorld, table: FrTable) -> Dcsm:
    """Overwrite each functional-word row with its class entry.

    Padded EOS rows and content rows are left untouched.
    """
    if map_.fr_applied:
        raise ConfigInvalid("functional rows already applied")
    values = map_.values.copy()
    for i, role in enumerate(map_.token_roles):
        key = _functional_class(world, role)
        if key is not None:
            if key not in table.entries:
                raise MissingFrEntry(f"no functional row for class {key!r}")
            values[i] = table.entries[key]
    return replace(map_, values=values, fr_applied=True)


def zscore(map_: Dcsm) -> Dcsm:
    """Standardize all entries of a single map to mean 0, std 1."""
    std = float(map_.values.std())
    if std < 1e-12:
        raise ZeroVariance("constant map cannot be z-scored")
    values = (map_.values - float(map_.values.mean())) / std
    return replace(map_, values=values, normalized=True)


def prepare_map(text: DenseEmbedding, image: DenseEmbedding, world: ConceptWorld,
                table: Optional[FrTable], provenance=("", "")) -> Dcsm:
    """Full pipeline: compute, optionally insert FRs, z-score.

    table=None is the without-FR ablation; the map is then z-scored directly
    (fr_applied stays False).
    """
    m = compute_dcsm(text, image, provenance)
    if table is not None:
        m = apply_frs(m, world, table)
    return zscore(m)


# -- exports ---------------------------------------------------------------


def dcsm_to_csv(map_: Dcsm, column_labels=None) -> str:
    """CSV with token-role row labels and patch-coordinate column labels."""
    rows, cols = map_.values.shape
    if column_labels is None:
        column_labels = ["CLS"] + [f"p{i}" for i in range(cols - 1)]
    lines = ["token," + ",".join(column_labels)]
    for role, row in zip(map_.token_roles, map_.values):
        lines.append(role + "," + ",".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def dcsm_to_pgm(map_: Dcsm) -> bytes:
    """8-bit grayscale PGM heatmap, min-max scaled."""
    v = map_.values
    lo, hi = float(v.min()), float(v.max())
    scale = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
    pixels = np.round(scale * 255).astype(np.uint8)
    header = f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode()
    return header + pixels.tobytes(order="C")
