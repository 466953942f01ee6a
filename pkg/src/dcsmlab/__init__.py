"""Unit-hypersphere embedding geometry experiments and a dense
similarity-map scorer over a synthetic concept world."""

from .errors import DcsmLabError
from .harness import RunConfig
from .world import ConceptWorld, WorldConfig, build_world

__all__ = [
    "DcsmLabError",
    "RunConfig",
    "ConceptWorld",
    "WorldConfig",
    "build_world",
]

__version__ = "0.1.0"
