"""Executable geometry experiments over the oracle embedding space.

Each experiment compares closed-form predictions about unit-sphere
embeddings with numbers computed independently (sphere optimization or
Monte-Carlo), and each ideal-space requirement is checked inequality by
inequality over the world registries.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    BetaConstraintViolated,
    ConfigInvalid,
    MissingClause,
    RequiresSimplex,
)
from .hypersphere import SphereObjective, cosine, normalize, random_unit_from, sphere_argmax
from .oracle import GlobalEmbeddingSpace, attribute_weight
from .world import ConceptWorld, LOCATION_TERMS, RELATION_TERMS

BOUNDARY_TOL = 1e-9


@dataclass
class ConditionReport:
    condition_id: str
    instances: int
    violations: int
    boundary: int
    worst_margin: float


@dataclass
class LemmaCertificate:
    lemma_id: str
    analytic: dict  # name -> predicted real
    numeric: dict  # name -> measured real (superset of analytic keys)
    verdict: bool  # contradiction / identity reproduced
    notes: str = ""

    @property
    def max_abs_deviation(self) -> float:
        """Largest |analytic - numeric| over the jointly named values."""
        keys = set(self.analytic) & set(self.numeric)
        if not keys:
            return 0.0
        return max(abs(self.analytic[k] - self.numeric[k]) for k in keys)


# -- clause assignments ------------------------------------------------------


def _orthogonalize_rows(rows: np.ndarray, against: np.ndarray) -> np.ndarray:
    """Project each row off the row space of `against`, then renormalize,
    Gram-Schmidting the rows among themselves as well."""
    q, _ = np.linalg.qr(against.T)
    basis = [q[:, i] for i in range(q.shape[1])]
    out = []
    for row in rows:
        v = row.astype(np.float64).copy()
        for b in basis:
            v -= np.dot(v, b) * b
        v = normalize(v)
        basis.append(v)
        out.append(v)
    return np.stack(out)


class OracleAssignment:
    """Ideal-position clause embeddings derived from a global space.

    Attribute and compositional directions are projected orthogonal to the
    concept span (and to each other), so the attribute weight p and the
    orthogonal-error magnitude are exact and shared across objects.
    """

    def __init__(self, space: GlobalEmbeddingSpace):
        self.space = space
        self.world = space.world
        self.delta = space.delta
        concepts = space.concept_vectors
        self.attr_dirs = _orthogonalize_rows(space.attribute_vectors, concepts)
        func_names = sorted(space.functional_vectors)
        func_stack = np.stack([space.functional_vectors[n] for n in func_names])
        func_dirs = _orthogonalize_rows(func_stack, concepts)
        self.func_dirs = dict(zip(func_names, func_dirs))
        self.p = attribute_weight(self.delta, 0.0)  # = sqrt(2 delta - delta^2)
        self._cache = {}

    def vector(self, key) -> np.ndarray:
        if key in self._cache:
            return self._cache[key]
        c = self.space.concept_vectors
        d = 1.0 - self.delta
        kind = key[0]
        if kind in ("i", "t"):
            vec = c[key[1]]
        elif kind == "t_attr":
            vec = self.attr_dirs[key[1]]
        elif kind == "i_attr":
            vec = d * c[key[1]] + self.p * self.attr_dirs[key[2]]
        elif kind == "i_pair":
            vec = normalize(c[key[1]] + c[key[2]])
        elif kind == "i_bind":
            _, x, a, y, b = key
            vec = normalize(d * (c[x] + c[y]) + self.p * (self.attr_dirs[a] + self.attr_dirs[b]))
        elif kind == "i_loc":
            vec = d * c[key[1]] + self.p * self.func_dirs[key[2]]
        elif kind == "i_rel":
            _, x, g, y = key
            vec = d * normalize(c[x] + c[y]) + self.p * self.func_dirs[g]
        elif kind == "t_neg":
            if self.space.layout != "simplex":
                raise MissingClause("negated text clauses need the simplex layout")
            vec = -c[key[1]]
        else:
            raise MissingClause(f"no embedding for clause key {key!r}")
        self._cache[key] = vec
        return vec


class RandomAssignment:
    """Distinct seeded random unit vectors, one per clause key, no structure."""

    def __init__(self, world: ConceptWorld, dimension: int = 64, seed: int = 0):
        self.world = world
        self.dimension = dimension
        self.seed = seed
        self._cache = {}

    def vector(self, key) -> np.ndarray:
        if key not in self._cache:
            digest = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
            rng = np.random.default_rng([self.seed, int.from_bytes(digest, "little")])
            self._cache[key] = random_unit_from(rng, self.dimension)
        return self._cache[key]


# -- condition enumeration ---------------------------------------------------

_LOCATIONS = [name for name, _ in LOCATION_TERMS]
_RELATIONS = [name for name, _ in RELATION_TERMS]


def _instances(count_fn, draw_fn, all_fn, cap, rng):
    total = count_fn()
    if total <= cap:
        return list(all_fn())
    return [draw_fn(rng) for _ in range(cap)]


def check_conditions(assignment, seed: int = 0, sample_cap: int = 1000):
    """Evaluate every ideal-space inequality over the world registries.

    Small index spaces are enumerated exhaustively; larger ones are sampled
    (sample_cap seeded random instances). Comparative inequalities lhs < rhs
    count as violated when rhs - lhs < -1e-9, with |margin| <= 1e-9 tallied
    separately as boundary cases. Non-parallelism requirements (value < 1)
    count equality within 1e-9 of 1 as a violation, since the contradictions
    they certify are exact equalities.
    """
    world = assignment.world
    v = assignment.vector
    m = len(world.objects)
    na = len(world.attributes)
    rng = np.random.default_rng(seed)

    def objs():
        return range(m)

    def distinct(pool, k, gen):
        return tuple(gen.choice(pool, size=k, replace=False))

    checks = {}

    def comparative(cid, pairs):
        checks.setdefault(cid, ("cmp", []))[1].extend(pairs)

    def nonparallel(cid, values):
        checks.setdefault(cid, ("par", []))[1].extend(values)

    # 1.1 basic description: matched text beats mismatched text.
    inst = _instances(
        lambda: m * (m - 1),
        lambda g: distinct(m, 2, g),
        lambda: itertools.permutations(objs(), 2),
        sample_cap,
        rng,
    )
    comparative(
        "1.1",
        [(np.dot(v(("i", x)), v(("t", y))), np.dot(v(("i", x)), v(("t", x)))) for x, y in inst],
    )
    inst = _instances(
        lambda: m * (m - 1) * (m - 2),
        lambda g: distinct(m, 3, g),
        lambda: itertools.permutations(objs(), 3),
        sample_cap,
        rng,
    )
    comparative(
        "1.1",
        [
            (np.dot(v(("i_pair", x, y)), v(("t", z))), np.dot(v(("i_pair", x, y)), v(("t", x))))
            for x, y, z in inst
        ],
    )

    # 1.2 same concepts, different attribute / location, still closer.
    def draw_12a(g):
        x, y = distinct(m, 2, g)
        a, b = distinct(na, 2, g)
        return x, y, a, b

    inst = _instances(
        lambda: m * (m - 1) * na * (na - 1),
        draw_12a,
        lambda: (
            (x, y, a, b)
            for x, y in itertools.permutations(objs(), 2)
            for a, b in itertools.permutations(range(na), 2)
        ),
        sample_cap,
        rng,
    )
    comparative(
        "1.2",
        [
            (
                np.dot(v(("i_attr", x, a)), v(("i", y))),
                np.dot(v(("i_attr", x, a)), v(("i_attr", x, b))),
            )
            for x, y, a, b in inst
        ],
    )

    loc_pairs = list(itertools.permutations(_LOCATIONS, 2))

    def draw_12b(g):
        x, y = distinct(m, 2, g)
        g1, g2 = loc_pairs[g.integers(len(loc_pairs))]
        return x, y, g1, g2

    inst = _instances(
        lambda: m * (m - 1) * len(loc_pairs),
        draw_12b,
        lambda: (
            (x, y, g1, g2)
            for x, y in itertools.permutations(objs(), 2)
            for g1, g2 in loc_pairs
        ),
        sample_cap,
        rng,
    )
    comparative(
        "1.2",
        [
            (
                np.dot(v(("i", x)), v(("i", y))),
                np.dot(v(("i_loc", x, g1)), v(("i_loc", x, g2))),
            )
            for x, y, g1, g2 in inst
        ],
    )

    # 2.1 attributed variants of one object are not parallel.
    nonparallel(
        "2.1",
        [
            np.dot(v(("i_attr", x, a)), v(("i_attr", x, b)))
            for x in objs()
            for a, b in itertools.combinations(range(na), 2)
        ],
    )

    # 2.2 the attributed image is closer to its attribute text.
    comparative(
        "2.2",
        [
            (
                np.dot(v(("i_attr", x, b)), v(("t_attr", a))),
                np.dot(v(("i_attr", x, a)), v(("t_attr", a))),
            )
            for x in objs()
            for a, b in itertools.permutations(range(na), 2)
        ],
    )

    # 2.3 swapped attribute bindings are not parallel.
    def draw_23(g):
        x, y = sorted(distinct(m, 2, g))
        a, b = sorted(distinct(na, 2, g))
        return x, y, a, b

    inst = _instances(
        lambda: (m * (m - 1) // 2) * (na * (na - 1) // 2),
        draw_23,
        lambda: (
            (x, y, a, b)
            for x, y in itertools.combinations(objs(), 2)
            for a, b in itertools.combinations(range(na), 2)
        ),
        sample_cap,
        rng,
    )
    nonparallel(
        "2.3",
        [np.dot(v(("i_bind", x, a, y, b)), v(("i_bind", x, b, y, a))) for x, y, a, b in inst],
    )

    # 3.1 / 3.2 distinct placements and relations are not parallel.
    nonparallel(
        "3.1",
        [
            np.dot(v(("i_loc", x, g1)), v(("i_loc", x, g2)))
            for x in objs()
            for g1, g2 in itertools.combinations(_LOCATIONS, 2)
        ],
    )
    rel_pairs = list(itertools.combinations(_RELATIONS, 2))

    def draw_32(g):
        x, y = sorted(distinct(m, 2, g))
        g3, g4 = rel_pairs[g.integers(len(rel_pairs))]
        return x, y, g3, g4

    inst = _instances(
        lambda: (m * (m - 1) // 2) * len(rel_pairs),
        draw_32,
        lambda: (
            (x, y, g3, g4)
            for x, y in itertools.combinations(objs(), 2)
            for g3, g4 in rel_pairs
        ),
        sample_cap,
        rng,
    )
    nonparallel(
        "3.2",
        [np.dot(v(("i_rel", x, g3, y)), v(("i_rel", x, g4, y))) for x, y, g3, g4 in inst],
    )

    # 3.3 shared relation beats a different relation, other object varying.
    rel_perm = list(itertools.permutations(_RELATIONS, 2))

    def draw_33(g):
        x, y, z = distinct(m, 3, g)
        g1, g2 = rel_perm[g.integers(len(rel_perm))]
        return x, y, z, g1, g2

    inst = _instances(
        lambda: m * (m - 1) * (m - 2) * len(rel_perm),
        draw_33,
        lambda: (
            (x, y, z, g1, g2)
            for x, y, z in itertools.permutations(objs(), 3)
            for g1, g2 in rel_perm
        ),
        sample_cap,
        rng,
    )
    comparative(
        "3.3",
        [
            (
                np.dot(v(("i_rel", x, g1, y)), v(("i_rel", x, g2, z))),
                np.dot(v(("i_rel", x, g1, y)), v(("i_rel", x, g1, z))),
            )
            for x, y, z, g1, g2 in inst
        ],
    )

    # 4.x negation.
    try:
        inst = _instances(
            lambda: m * (m - 1),
            lambda g: distinct(m, 2, g),
            lambda: itertools.permutations(objs(), 2),
            sample_cap,
            rng,
        )
        comparative(
            "4.1",
            [
                (np.dot(v(("t", x)), v(("t_neg", x))), np.dot(v(("t", y)), v(("t_neg", x))))
                for x, y in inst
            ],
        )
        comparative(
            "4.2",
            [
                (np.dot(v(("i", x)), v(("t_neg", x))), np.dot(v(("i", x)), v(("t", y))))
                for x, y in inst
            ],
        )
        # 4.3: negated pairs must beat both the positive pair and every
        # positive/negative cross pairing (they share the most semantics).
        pairs43 = []
        for x, y in itertools.combinations(objs(), 2):
            rhs = np.dot(v(("t_neg", y)), v(("t_neg", x)))
            pairs43.append((np.dot(v(("t", x)), v(("t", y))), rhs))
            pairs43.append((np.dot(v(("t_neg", x)), v(("t", y))), rhs))
        comparative("4.3", pairs43)
    except MissingClause:
        pass  # assignment has no negated clauses; skip condition 4

    reports = []
    for cid in sorted(checks):
        mode, items = checks[cid]
        if mode == "cmp":
            margins = [float(rhs - lhs) for lhs, rhs in items]
            violations = sum(1 for mg in margins if mg < -BOUNDARY_TOL)
            boundary = sum(1 for mg in margins if abs(mg) <= BOUNDARY_TOL)
            count = len(items)
        else:
            margins = [1.0 - float(val) for val in items]
            violations = sum(1 for mg in margins if mg <= BOUNDARY_TOL)
            boundary = 0
            count = len(items)
        reports.append(
            ConditionReport(
                condition_id=cid,
                instances=count,
                violations=violations,
                boundary=boundary,
                worst_margin=float(min(margins)) if margins else float("nan"),
            )
        )
    return reports


# -- lemma experiments -------------------------------------------------------


def verify_superposition(space: GlobalEmbeddingSpace, trials: int = 50, seed: int = 0) -> LemmaCertificate:
    """Numeric sphere optimum of the two-in, rest-out objective vs the
    normalized two-vector superposition."""
    world = space.world
    m = len(world.objects)
    rng = np.random.default_rng(seed)
    cosines = []
    value_gaps = []
    for trial in range(trials):
        x, y = rng.choice(m, size=2, replace=False)
        weights = np.full(m, -1.0)
        weights[x] = 1.0
        weights[y] = 1.0
        obj = SphereObjective(weights=weights, vectors=space.concept_vectors)
        numeric = sphere_argmax(obj, seed=seed * trials + trial)
        analytic = normalize(space.concept_vectors[x] + space.concept_vectors[y])
        cosines.append(cosine(numeric, analytic))
        exact_opt = normalize(obj.direction())
        value_gaps.append(obj.value(numeric) - obj.value(exact_opt))
    min_cos = float(min(cosines))
    analytic_cos = 1.0 if space.layout == "simplex" else None
    cert = LemmaCertificate(
        lemma_id="superposition",
        analytic={} if analytic_cos is None else {"min_cosine": analytic_cos},
        numeric={
            "min_cosine": min_cos,
            "mean_cosine": float(np.mean(cosines)),
            "max_value_gap": float(max(value_gaps)),
        },
        verdict=min_cos >= 0.999 and max(value_gaps) <= 1e-9,
        notes="optimum of the pair objective is the normalized pair sum",
    )
    return cert


def verify_attribute_collapse(
    space: GlobalEmbeddingSpace, noise_weights=(0.0, 0.2), trials: int = 1000, seed: int = 0
) -> LemmaCertificate:
    """Swapped attribute bindings collapse to one composite embedding.

    Noiseless: the two composites are built from the exact unit-norm weight
    p shared across the symmetric quartet, so they coincide. With noise, one
    image-level perturbation of the fixed magnitude is added per composite
    (weights 0.8 object / 0.2 attribute at noise 0.2 reproduce the reference
    concentration near 1). Unrelated quartets stay near orthogonal.
    """
    world = space.world
    m = len(world.objects)
    na = len(world.attributes)
    rng = np.random.default_rng(seed)
    n = space.dimension

    # exact noiseless identity with a symmetrized quartet
    x, y = 0, 1
    a, b = 0, 1
    ix, iy = space.concept_vectors[x], space.concept_vectors[y]
    diff = normalize(ix - iy)

    def symmetrize(t):
        return normalize(t - np.dot(t, diff) * diff)

    ta = symmetrize(space.attribute_vectors[a])
    tb = symmetrize(space.attribute_vectors[b])
    p = attribute_weight(space.delta, float(np.dot(ix, ta)))
    q = attribute_weight(space.delta, float(np.dot(ix, tb)))
    d = 1.0 - space.delta
    comp_ab = normalize(d * (ix + iy) + p * ta + q * tb)
    comp_ba = normalize(d * (ix + iy) + q * tb + p * ta)
    noiseless = cosine(comp_ab, comp_ba)

    w_obj, w_attr = 0.8, 0.2
    numeric = {"noiseless_cosine": float(noiseless)}
    analytic = {"noiseless_cosine": 1.0}
    for w in noise_weights:
        if w == 0.0:
            continue
        cosines = []
        for _ in range(trials):
            xx, yy = rng.choice(m, size=2, replace=False)
            aa, bb = rng.choice(na, size=2, replace=False)
            base = w_obj * (
                space.concept_vectors[xx] + space.concept_vectors[yy]
            ) + w_attr * (space.attribute_vectors[aa] + space.attribute_vectors[bb])
            c1 = normalize(base + w * random_unit_from(rng, n))
            c2 = normalize(base + w * random_unit_from(rng, n))
            cosines.append(cosine(c1, c2))
        numeric[f"mean_cosine_noise_{w:g}"] = float(np.mean(cosines))

    unrelated = []
    for _ in range(trials):
        xx, yy, ww, zz = rng.choice(m, size=4, replace=False)
        aa, bb, cc, dd = (rng.integers(na) for _ in range(4))
        c1 = normalize(
            w_obj * (space.concept_vectors[xx] + space.concept_vectors[yy])
            + w_attr * (space.attribute_vectors[aa] + space.attribute_vectors[bb])
        )
        c2 = normalize(
            w_obj * (space.concept_vectors[ww] + space.concept_vectors[zz])
            + w_attr * (space.attribute_vectors[cc] + space.attribute_vectors[dd])
        )
        unrelated.append(cosine(c1, c2))
    numeric["unrelated_mean_cosine"] = float(np.mean(unrelated))

    return LemmaCertificate(
        lemma_id="attribute-collapse",
        analytic=analytic,
        numeric=numeric,
        verdict=abs(noiseless - 1.0) <= 1e-9,
        notes="swapped bindings give one embedding; noise only blurs it",
    )


def verify_spatial_contradiction(space: GlobalEmbeddingSpace, betas=(1.0, 1.0, 1.0)) -> LemmaCertificate:
    """Reweighted orthogonal-error vectors for location/relation prompts
    force opposite-sign dot products, so both similarity requirements cannot
    hold at once."""
    b1, b2, b3 = (float(b) for b in betas)
    if abs(b1 + b2 + b3 - 3.0) > 1e-9:
        raise BetaConstraintViolated(f"betas {betas} must sum to 3")
    delta = space.delta

    # three mutually orthogonal unit prompt directions, orthogonal to the
    # concept span (cross terms vanish exactly)
    names = [c.name for c in space.world.compositional[:3]]
    stack = np.stack([space.functional_vectors[nm] for nm in names])
    t1, t2, t3 = _orthogonalize_rows(stack, space.concept_vectors)

    s = np.sqrt(2.0 * delta)
    e1 = (b1 * t1 + b2 * t2 + b3 * t3) * s
    e2 = (b1 * t1 + b2 * t2 - b3 * t3) * s
    e3 = (-b1 * t1 - b2 * t2 + b3 * t3) * s

    numeric = {
        "e1_dot_e2": float(np.dot(e1, e2)),
        "e1_dot_e3": float(np.dot(e1, e3)),
        "e2_dot_e3": float(np.dot(e2, e3)),
    }
    analytic = {
        "e1_dot_e2": 2.0 * delta * (b1**2 + b2**2 - b3**2),
        "e1_dot_e3": 2.0 * delta * (-(b1**2) - b2**2 + b3**2),
        "e2_dot_e3": -2.0 * delta * (b1**2 + b2**2 + b3**2),
    }
    antisym = numeric["e1_dot_e2"] + numeric["e1_dot_e3"]
    numeric["antisymmetry"] = float(antisym)
    analytic["antisymmetry"] = 0.0
    return LemmaCertificate(
        lemma_id="spatial-contradiction",
        analytic=analytic,
        numeric=numeric,
        verdict=abs(antisym) <= 1e-12,
        notes="sign certificate: the two required positives sum to zero",
    )


def verify_preposition_hierarchy(space: GlobalEmbeddingSpace) -> LemmaCertificate:
    """A general preposition superposes its antonym pair back onto the bare
    pair embedding, which then erroneously beats specific prepositions."""
    delta = space.delta
    d = 1.0 - delta
    names = [c.name for c in space.world.compositional[:2]]
    stack = np.stack([space.functional_vectors[nm] for nm in names])
    e_dir, a_dir = _orthogonalize_rows(stack, space.concept_vectors)
    s = np.sqrt(2.0 * delta - delta**2)

    t_xy = normalize(space.concept_vectors[0] + space.concept_vectors[1])
    e_l = s * e_dir
    t_left = d * t_xy + e_l
    t_right = d * t_xy - e_l
    t_general = normalize(t_left + t_right)
    parallel_cos = cosine(t_general, t_xy)

    i_other = d * t_xy + s * a_dir  # image with an orthogonal relation
    margin = float(np.dot(t_general, i_other) - np.dot(t_left, i_other))
    analytic_margin = d - d**2  # = delta (1 - delta)

    return LemmaCertificate(
        lemma_id="preposition-hierarchy",
        analytic={"parallel_cosine": 1.0, "margin": analytic_margin},
        numeric={"parallel_cosine": float(parallel_cos), "margin": margin},
        verdict=abs(parallel_cos - 1.0) <= 1e-9 and margin > 0.0,
        notes="general term collapses to the bare pair and outscores "
        "equally inapplicable specific terms",
    )


def verify_negation_contradiction(space: GlobalEmbeddingSpace) -> LemmaCertificate:
    """On the isotropic layout, negated texts are antipodes, so negated
    pairs are exactly as similar as positive pairs and cross pairs beat
    them, violating the negation-overlap requirement."""
    if space.layout != "simplex":
        raise RequiresSimplex("negation placement is derived for the simplex layout")
    m = len(space.world.objects)
    c = space.concept_vectors
    pos = float(np.dot(c[0], c[1]))
    neg = float(np.dot(-c[0], -c[1]))
    cross = float(np.dot(-c[0], c[1]))
    expected = -1.0 / (m - 1)
    return LemmaCertificate(
        lemma_id="negation-contradiction",
        analytic={
            "pos_pair": expected,
            "neg_pair": expected,
            "cross_pair": -expected,
            "violation_margin": 2.0 / (m - 1),
        },
        numeric={
            "pos_pair": pos,
            "neg_pair": neg,
            "cross_pair": cross,
            "violation_margin": cross - neg,
        },
        verdict=cross > neg,
        notes="cross pair exceeds negated pair on every concept pair",
    )


def multi_object_dilution(
    space: GlobalEmbeddingSpace, k_max: int = 8, trials: int = 500, seed: int = 0
):
    """Mean cosine between one concept's text vector and a k-concept
    composite, for k = 1..k_max; near 1/sqrt(k) for random layouts."""
    world = space.world
    m = len(world.objects)
    if k_max > m:
        raise ConfigInvalid(f"k_max={k_max} exceeds M={m}")
    rng = np.random.default_rng(seed)
    curve = []
    for k in range(1, k_max + 1):
        vals = []
        for _ in range(trials):
            idx = rng.choice(m, size=k, replace=False)
            composite = normalize(space.concept_vectors[idx].sum(axis=0))
            vals.append(cosine(composite, space.concept_vectors[idx[0]]))
        curve.append((k, float(np.mean(vals))))
    return curve


# -- report emission ---------------------------------------------------------


def condition_reports_to_csv(reports) -> str:
    lines = ["condition,instances,violations,boundary,worst_margin"]
    for r in reports:
        lines.append(
            f"{r.condition_id},{r.instances},{r.violations},{r.boundary},{r.worst_margin:.12g}"
        )
    return "\n".join(lines) + "\n"


def certificate_to_csv(cert: LemmaCertificate) -> str:
    lines = ["name,analytic,numeric"]
    for name in sorted(set(cert.analytic) | set(cert.numeric)):
        a = cert.analytic.get(name)
        nval = cert.numeric.get(name)
        lines.append(
            f"{name},{'' if a is None else format(a, '.12g')},"
            f"{'' if nval is None else format(nval, '.12g')}"
        )
    lines.append(f"max_abs_deviation,,{cert.max_abs_deviation:.12g}")
    lines.append(f"verdict,,{int(cert.verdict)}")
    return "\n".join(lines) + "\n"


def summary_text(reports, certificates) -> str:
    out = ["== condition reports =="]
    for r in reports:
        status = "violated" if r.violations else "satisfied"
        out.append(
            f"condition {r.condition_id}: {status} "
            f"({r.violations}/{r.instances} violations, {r.boundary} boundary, "
            f"worst margin {r.worst_margin:.6g})"
        )
    out.append("")
    out.append("== lemma certificates ==")
    for cert in certificates:
        out.append(
            f"{cert.lemma_id}: verdict={'reproduced' if cert.verdict else 'FAILED'} "
            f"max_abs_deviation={cert.max_abs_deviation:.3g}"
        )
        for name in sorted(cert.numeric):
            a = cert.analytic.get(name)
            pred = "" if a is None else f" (analytic {a:.6g})"
            out.append(f"  {name} = {cert.numeric[name]:.6g}{pred}")
    return "\n".join(out) + "\n"
