"""Hard-negative benchmark families over the synthetic world.

Three families of (positive scene, negative scene, positive captions,
negative captions) quads:

  * attribute: negatives swap which attribute binds to which object,
  * spatial: negatives flip the relation to its antonym,
  * negation: negatives swap the present and the negated objects.

Ground truth is symbolic (placement lists and grid coordinates), entirely
independent of any embedding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import WorldTooSmall
from .oracle import SceneSpec
from .world import (
    AttributeId,
    CompositionalId,
    ConceptId,
    ConceptWorld,
    NEGATION_TERMS,
    RELATION_TERMS,
)

FAMILIES = ("attribute", "spatial", "negation")
CHANCE_LEVEL = {"attribute": 0.5, "spatial": 0.25, "negation": 0.5}

_RELATION_ORDER = [name for name, _ in RELATION_TERMS]


@dataclass
class Sample:
    family: str
    pos_scene: SceneSpec
    neg_scene: SceneSpec
    pos_captions: tuple  # two clauses
    neg_captions: tuple  # two clauses


# -- symbolic ground truth ---------------------------------------------------


def _bindings(scene: SceneSpec) -> dict:
    return {c.name: (a.name if a is not None else None) for c, a, _ in scene.placements}


def _cells(scene: SceneSpec) -> dict:
    return {c.name: cell for c, _, cell in scene.placements}


def relation_holds(relation: str, cell_a, cell_b) -> bool:
    """Grid truth for 'a <relation> b'; row 0 is the top of the image."""
    (ra, ca), (rb, cb) = cell_a, cell_b
    if relation == "left_of":
        return ca < cb
    if relation == "right_of":
        return ca > cb
    if relation == "above":
        return ra < rb
    if relation == "below":
        return ra > rb
    raise KeyError(relation)


def location_holds(location: str, cell, grid: int) -> bool:
    r, c = cell
    half = grid / 2.0
    if location == "to_the_left":
        return c < half
    if location == "to_the_right":
        return c >= half
    if location == "at_top":
        return r < half
    if location == "at_bottom":
        return r >= half
    raise KeyError(location)


def caption_true(world: ConceptWorld, scene: SceneSpec, clause, grid: int = 4) -> bool:
    """Does the clause hold in the scene, judged purely symbolically?"""
    groups, seps = world._segment(tuple(clause))
    bindings = _bindings(scene)
    cells = _cells(scene)

    def group_info(group):
        attrs = [g.name for g in group if isinstance(g, AttributeId)]
        objs = [g.name for g in group if isinstance(g, ConceptId)]
        locs = [g for g in group if isinstance(g, CompositionalId)]
        return attrs, objs, locs

    def group_present(group) -> bool:
        attrs, objs, locs = group_info(group)
        for obj in objs:
            if obj not in bindings:
                return False
        if attrs:
            if len(objs) != 1 or len(attrs) != 1:
                return False
            if bindings[objs[0]] != attrs[0]:
                return False
        for loc in locs:
            if not location_holds(loc.name, cells[objs[-1]], grid):
                return False
        return True

    prev_objs = group_info(groups[0])[1]
    if not group_present(groups[0]):
        return False
    for sep, group in zip(seps, groups[1:]):
        attrs, objs, locs = group_info(group)
        if sep is None or sep.kind == "relation":
            if not group_present(group):
                return False
            if sep is not None:
                if not (
                    prev_objs
                    and objs
                    and prev_objs[-1] in cells
                    and objs[0] in cells
                    and relation_holds(sep.name, cells[prev_objs[-1]], cells[objs[0]])
                ):
                    return False
        elif sep.kind == "negation":
            for obj in objs:
                if obj in bindings:
                    return False
        prev_objs = objs
    return True


# -- generators --------------------------------------------------------------


def _pick_cells(rng, grid: int, k: int):
    idx = rng.choice(grid * grid, size=k, replace=False)
    return [(int(i) // grid, int(i) % grid) for i in idx]


def gen_attribute(world: ConceptWorld, n: int, seed: int = 0, objects=None, attributes=None, grid: int = 4):
    """Swapped-binding quads: 'a x and b y' vs 'a y and b x'."""
    objects = list(objects if objects is not None else world.objects)
    attributes = list(attributes if attributes is not None else world.attributes)
    if len(objects) < 2 or len(attributes) < 2:
        raise WorldTooSmall("attribute family needs >= 2 objects and attributes")
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n):
        x, y = (objects[i] for i in rng.choice(len(objects), size=2, replace=False))
        a, b = (attributes[i] for i in rng.choice(len(attributes), size=2, replace=False))
        cells = _pick_cells(rng, grid, 2)
        pos_scene = SceneSpec(placements=((x, a, cells[0]), (y, b, cells[1])))
        neg_scene = SceneSpec(placements=((x, b, cells[0]), (y, a, cells[1])))
        samples.append(
            Sample(
                family="attribute",
                pos_scene=pos_scene,
                neg_scene=neg_scene,
                pos_captions=((a, x, b, y), (b, y, a, x)),
                neg_captions=((a, y, b, x), (b, x, a, y)),
            )
        )
    return samples


def _spatial_cells(rng, relation: str, grid: int):
    """Two cells making the relation hold, aligned on the other axis so
    exactly one of the four relations is true."""
    lo = int(rng.integers(0, grid - 1))
    hi = int(rng.integers(lo + 1, grid))
    other = int(rng.integers(0, grid))
    if relation in ("left_of", "right_of"):
        first, second = (other, lo), (other, hi)  # (row, col): same row
        return (first, second) if relation == "left_of" else (second, first)
    first, second = (lo, other), (hi, other)  # same column
    return (first, second) if relation == "above" else (second, first)


def gen_spatial(world: ConceptWorld, n: int, seed: int = 0, objects=None, grid: int = 4, prob_location: float = 0.25):
    """Relation quads 'x rel y' with antonym negatives, plus single-object
    location variants with the given probability."""
    objects = list(objects if objects is not None else world.objects)
    if len(objects) < 2:
        raise WorldTooSmall("spatial family needs >= 2 objects")
    rng = np.random.default_rng(seed)
    locations = [c for c in world.compositional if c.kind == "location"]
    samples = []
    for _ in range(n):
        if rng.random() < prob_location:
            x = objects[int(rng.integers(len(objects)))]
            loc = locations[int(rng.integers(len(locations)))]
            anti = world.antonym(loc)
            cell = _location_cell(rng, loc.name, grid)
            anticell = _location_cell(rng, anti.name, grid)
            pos = (x, loc)
            neg = (x, anti)
            samples.append(
                Sample(
                    family="spatial",
                    pos_scene=SceneSpec(placements=((x, None, cell),)),
                    neg_scene=SceneSpec(placements=((x, None, anticell),)),
                    pos_captions=(pos, pos),
                    neg_captions=(neg, neg),
                )
            )
            continue
        x, y = (objects[i] for i in rng.choice(len(objects), size=2, replace=False))
        rel = world.term(_RELATION_ORDER[int(rng.integers(len(_RELATION_ORDER)))])
        anti = world.antonym(rel)
        cx, cy = _spatial_cells(rng, rel.name, grid)
        samples.append(
            Sample(
                family="spatial",
                pos_scene=SceneSpec(placements=((x, None, cx), (y, None, cy))),
                neg_scene=SceneSpec(placements=((x, None, cy), (y, None, cx))),
                pos_captions=((x, rel, y), (y, anti, x)),
                neg_captions=((x, anti, y), (y, rel, x)),
            )
        )
    return samples


def _location_cell(rng, location: str, grid: int):
    half = grid // 2
    r = int(rng.integers(0, grid))
    c = int(rng.integers(0, grid))
    if location == "to_the_left":
        return (r, int(rng.integers(0, half)))
    if location == "to_the_right":
        return (r, int(rng.integers(half, grid)))
    if location == "at_top":
        return (int(rng.integers(0, half)), c)
    return (int(rng.integers(half, grid)), c)


def gen_negation(world: ConceptWorld, n: int, seed: int = 0, objects=None, grid: int = 4):
    """Two present objects, two absent ones, negation word per caption."""
    objects = list(objects if objects is not None else world.objects)
    if len(objects) < 4:
        raise WorldTooSmall("negation family needs >= 4 objects")
    rng = np.random.default_rng(seed)
    neg_names = [name for name, _ in NEGATION_TERMS]
    samples = []
    for _ in range(n):
        a1, a2, b1, b2 = (objects[i] for i in rng.choice(len(objects), size=4, replace=False))
        word = world.term(neg_names[int(rng.integers(len(neg_names)))])
        cells = _pick_cells(rng, grid, 2)
        samples.append(
            Sample(
                family="negation",
                pos_scene=SceneSpec(placements=((a1, None, cells[0]), (a2, None, cells[1])), negated=(b1, b2)),
                neg_scene=SceneSpec(placements=((b1, None, cells[0]), (b2, None, cells[1])), negated=(a1, a2)),
                pos_captions=((a1, word, b1), (a2, word, b2)),
                neg_captions=((b1, word, a1), (b2, word, a2)),
            )
        )
    return samples


def generate_family(world: ConceptWorld, family: str, n: int, seed: int = 0, **kwargs):
    if family == "attribute":
        return gen_attribute(world, n, seed, **kwargs)
    if family == "spatial":
        return gen_spatial(world, n, seed, **kwargs)
    if family == "negation":
        return gen_negation(world, n, seed, **kwargs)
    raise KeyError(family)


# -- evaluation candidates ----------------------------------------------------


def candidate_captions(world: ConceptWorld, sample: Sample):
    """Caption-choice candidates for one sample and the correct index.

    Spatial relation samples are a 4-way choice over all relations; the
    other families (and location variants) are 2-way positive-vs-negative.
    """
    if sample.family == "spatial":
        clause = sample.pos_captions[0]
        rel_positions = [i for i, el in enumerate(clause) if isinstance(el, CompositionalId)]
        el = clause[rel_positions[0]]
        if el.kind == "relation":
            candidates = []
            correct = None
            for i, name in enumerate(_RELATION_ORDER):
                cand = tuple(
                    world.term(name) if j == rel_positions[0] else c
                    for j, c in enumerate(clause)
                )
                candidates.append(cand)
                if name == el.name:
                    correct = i
            return candidates, correct
    return [sample.pos_captions[0], sample.neg_captions[0]], 0


# -- concept splits ------------------------------------------------------------


def split_concepts(world: ConceptWorld, eval_fraction: float = 0.25, seed: int = 0):
    """Disjoint train/eval pools of object and attribute ids."""
    rng = np.random.default_rng(seed)
    def split(pool):
        k = max(2, int(round(len(pool) * eval_fraction)))
        order = rng.permutation(len(pool))
        eval_ids = [pool[i] for i in order[:k]]
        train_ids = [pool[i] for i in order[k:]]
        return train_ids, eval_ids

    train_obj, eval_obj = split(world.objects)
    train_attr, eval_attr = split(world.attributes)
    return {
        "train_objects": train_obj,
        "eval_objects": eval_obj,
        "train_attributes": train_attr,
        "eval_attributes": eval_attr,
    }


# -- serialization -------------------------------------------------------------


def _clause_names(clause):
    return [el.name for el in clause]


def _clause_from_names(world: ConceptWorld, names):
    out = []
    for name in names:
        if name in world._objects_by_name:
            out.append(world.object(name))
        elif name in world._attrs_by_name:
            out.append(world.attribute(name))
        else:
            out.append(world.term(name))
    return tuple(out)


def _scene_json(scene: SceneSpec):
    return {
        "placements": [
            [c.name, a.name if a is not None else None, list(cell)]
            for c, a, cell in scene.placements
        ],
        "negated": [c.name for c in scene.negated],
    }


def _scene_from_json(world: ConceptWorld, data) -> SceneSpec:
    return SceneSpec(
        placements=tuple(
            (world.object(c), world.attribute(a) if a is not None else None, tuple(cell))
            for c, a, cell in data["placements"]
        ),
        negated=tuple(world.object(c) for c in data["negated"]),
    )


def sample_to_json(world: ConceptWorld, sample: Sample) -> str:
    return json.dumps(
        {
            "family": sample.family,
            "pos_scene": _scene_json(sample.pos_scene),
            "neg_scene": _scene_json(sample.neg_scene),
            "pos_captions": [_clause_names(c) for c in sample.pos_captions],
            "neg_captions": [_clause_names(c) for c in sample.neg_captions],
            "pos_texts": [world.render(c) for c in sample.pos_captions],
            "neg_texts": [world.render(c) for c in sample.neg_captions],
        },
        sort_keys=True,
    )


def sample_from_json(world: ConceptWorld, line: str) -> Sample:
    data = json.loads(line)
    return Sample(
        family=data["family"],
        pos_scene=_scene_from_json(world, data["pos_scene"]),
        neg_scene=_scene_from_json(world, data["neg_scene"]),
        pos_captions=tuple(_clause_from_names(world, c) for c in data["pos_captions"]),
        neg_captions=tuple(_clause_from_names(world, c) for c in data["neg_captions"]),
    )


def write_jsonl(path, world: ConceptWorld, samples) -> None:
    with open(path, "w") as fh:
        for s in samples:
            fh.write(sample_to_json(world, s) + "\n")


def read_jsonl(path, world: ConceptWorld):
    with open(path) as fh:
        return [sample_from_json(world, line) for line in fh if line.strip()]
