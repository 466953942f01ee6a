"""Top-level acceptance checks, one test (and one pass/fail line) per
criterion. The first seven are fast geometry/scorer checks; 8-10 train real
models with the default config and take several minutes on one core.

Run with `pytest -v tests/test_acceptance.py`; each criterion also prints a
`criterion N: PASS/FAIL` line (shown with -rA/-s, and always on failure).
"""

import time

import numpy as np
import pytest

from dcsmlab import bench, harness, scorer, verifier
from dcsmlab.harness import RunConfig, build_components
from dcsmlab.oracle import build_global_space
from dcsmlab.world import WorldConfig, build_world


def _report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def world64():
    return build_world(WorldConfig())  # M=16, N=64


@pytest.fixture(scope="module")
def simplex_space(world64):
    return build_global_space(world64, delta=0.02, layout="simplex", seed=0)


def test_criterion_01_superposition_optimum(simplex_space):
    t0 = time.perf_counter()
    cert = verifier.verify_superposition(simplex_space, trials=50, seed=0)
    elapsed = time.perf_counter() - t0
    min_cos = cert.numeric["min_cosine"]
    ok = min_cos >= 0.999 and cert.verdict and elapsed < 30.0
    _report(1, ok, f"min cosine {min_cos:.12f}, runtime {elapsed:.1f}s")


def test_criterion_02_attribute_binding_collapse(world64):
    space = build_global_space(world64, delta=0.02, layout="random", seed=0)
    t0 = time.perf_counter()
    cert = verifier.verify_attribute_collapse(
        space, noise_weights=(0.0, 0.2), trials=1000, seed=0
    )
    elapsed = time.perf_counter() - t0
    noiseless = cert.numeric["noiseless_cosine"]
    noisy = cert.numeric["mean_cosine_noise_0.2"]
    unrelated = cert.numeric["unrelated_mean_cosine"]
    ok = (
        abs(noiseless - 1.0) <= 1e-9
        and noisy >= 0.95
        and abs(unrelated) <= 0.1
        and elapsed < 30.0
    )
    _report(
        2,
        ok,
        f"noiseless off 1 by {abs(noiseless - 1.0):.2e}, noisy mean {noisy:.4f}, "
        f"unrelated {unrelated:.4f}, runtime {elapsed:.1f}s",
    )


def test_criterion_03_spatial_contradiction(simplex_space):
    cert = verifier.verify_spatial_contradiction(simplex_space, betas=(1.0, 1.0, 1.0))
    vals = (cert.numeric["e1_dot_e2"], cert.numeric["e1_dot_e3"], cert.numeric["e2_dot_e3"])
    dev = max(abs(a - b) for a, b in zip(vals, (0.04, -0.04, -0.12)))
    antisym_exact = True
    rng = np.random.default_rng(0)
    for _ in range(20):
        b1, b2 = rng.uniform(0.1, 1.4, size=2)
        cert_b = verifier.verify_spatial_contradiction(
            simplex_space, betas=(b1, b2, 3.0 - b1 - b2)
        )
        if cert_b.numeric["e1_dot_e2"] != -cert_b.numeric["e1_dot_e3"]:
            antisym_exact = False
    ok = dev <= 1e-12 and antisym_exact
    _report(3, ok, f"dots {vals}, max deviation {dev:.2e}, antisymmetry exact: {antisym_exact}")


def test_criterion_04_preposition_hierarchy(world64):
    worst_parallel = 0.0
    min_margin = float("inf")
    for delta in (0.01, 0.05, 0.1):
        space = build_global_space(world64, delta=delta, layout="random", seed=0)
        cert = verifier.verify_preposition_hierarchy(space)
        worst_parallel = max(worst_parallel, abs(cert.numeric["parallel_cosine"] - 1.0))
        min_margin = min(min_margin, cert.numeric["margin"])
    ok = worst_parallel <= 1e-9 and min_margin > 0.0
    _report(4, ok, f"parallel off by <= {worst_parallel:.2e}, min margin {min_margin:.4f}")


def test_criterion_05_negation_conditions():
    ok = True
    details = []
    for m in (4, 16, 32):
        world = build_world(WorldConfig(num_objects=m))
        space = build_global_space(world, delta=0.02, layout="simplex", seed=0)
        reports = {
            r.condition_id: r
            for r in verifier.check_conditions(verifier.OracleAssignment(space), seed=0)
        }
        pairs = m * (m - 1) // 2
        cert = verifier.verify_negation_contradiction(space)
        expected = 1.0 / (m - 1)
        value_dev = max(
            abs(cert.numeric["pos_pair"] + expected),
            abs(cert.numeric["neg_pair"] + expected),
            abs(cert.numeric["cross_pair"] - expected),
        )
        ok = ok and (
            reports["4.1"].violations == 0
            and reports["4.2"].violations == 0
            and reports["4.3"].violations == pairs
            and value_dev <= 1e-9
        )
        details.append(f"M={m}: 4.3 violated {reports['4.3'].violations}/{pairs} pairs")
    _report(5, ok, "; ".join(details))


def test_criterion_06_multi_object_dilution():
    world = build_world(WorldConfig(dimension=512))
    space = build_global_space(world, delta=0.02, layout="random", seed=0)
    curve = verifier.multi_object_dilution(space, k_max=8, trials=500, seed=0)
    values = [v for _, v in curve]
    decreasing = all(a > b for a, b in zip(values, values[1:]))
    max_dev = max(abs(v - 1.0 / np.sqrt(k)) for k, v in curve)
    ok = decreasing and max_dev <= 0.05
    _report(6, ok, f"strictly decreasing: {decreasing}, max |v - 1/sqrt(k)| {max_dev:.4f}")


def test_criterion_07_scorer_correctness():
    worst = 0.0
    for seed in (0, 1, 2):
        params = scorer.init_params(8, seed=seed, dtype=np.float64)
        maps = np.random.default_rng(seed + 100).standard_normal((4, 4, 8, 9))
        worst = max(worst, scorer.gradient_check(params, maps, seed=seed))
    loss_dev = max(
        abs(scorer.contrastive_loss(np.full((b, b), 0.7))[0] - 2 * np.log(b))
        for b in (2, 4, 8)
    )
    cfg = RunConfig(train_samples=8, epochs=1)
    comp = build_components(cfg)
    samples = bench.gen_attribute(comp.world, 8, seed=0)
    pairs = harness.embed_training_pairs(comp, samples)
    tcfg = scorer.TrainConfig(hidden=8, epochs=1, seed=0)
    p1, _ = scorer.train(pairs, comp.world, comp.fr_table, tcfg)
    p2, _ = scorer.train(pairs, comp.world, comp.fr_table, tcfg)
    deterministic = all(np.array_equal(a, b) for (_, a), (_, b) in zip(p1.items(), p2.items()))
    ok = worst < 1e-4 and loss_dev <= 1e-9 and deterministic
    _report(
        7,
        ok,
        f"gradcheck max rel err {worst:.2e}, loss dev {loss_dev:.2e}, "
        f"bit-deterministic: {deterministic}",
    )


# -- trained criteria ---------------------------------------------------------


@pytest.fixture(scope="module")
def full_runs():
    """One full default-config train+eval per family, timed end to end."""
    cfg = RunConfig()
    comp = build_components(cfg)
    out = {"comp": comp}
    t0 = time.perf_counter()
    for family in bench.FAMILIES:
        train, evals = harness.generate_datasets(comp, family)
        params, _, _ = harness.train_family(comp, family, train_samples=train)
        models = {
            "dcsm": harness.make_dcsm_model(params, comp.world, comp.fr_table),
            "cosine": harness.make_cosine_model(),
        }
        results = {r.model: r for r in harness.evaluate_models(comp, family, evals, models)}
        out[family] = {"results": results, "train": train, "evals": evals}
    out["elapsed"] = time.perf_counter() - t0
    return out


def test_criterion_08_dcsm_beats_geometry(full_runs):
    details = []
    ok = full_runs["elapsed"] < 600.0
    for family in bench.FAMILIES:
        res = full_runs[family]["results"]
        acc = res["dcsm"].accuracy
        ok = ok and acc >= 0.90
        details.append(f"{family} dcsm {acc:.3f}")
        if family in ("attribute", "spatial"):
            gap = abs(res["cosine"].accuracy - res["cosine"].chance)
            ok = ok and gap <= 0.05
            details.append(f"{family} cosine off chance {gap:.3f}")
    details.append(f"train+eval {full_runs['elapsed']:.0f}s")
    _report(8, ok, ", ".join(details))


def test_criterion_09_fr_ablation(full_runs):
    comp = full_runs["comp"]
    full_acc = full_runs["spatial"]["results"]["dcsm"].accuracy
    params, _, _ = harness.train_family(
        comp, "spatial", train_samples=full_runs["spatial"]["train"], use_fr=False
    )
    results = harness.evaluate_models(
        comp,
        "spatial",
        full_runs["spatial"]["evals"],
        {"dcsm_no_fr": harness.make_dcsm_model(params, comp.world, None)},
    )
    ablated = results[0].accuracy
    drop = full_acc - ablated
    ok = drop >= 0.10
    _report(9, ok, f"spatial full {full_acc:.3f} vs no-FR {ablated:.3f}, drop {drop:.3f}")


def test_criterion_10_data_scaling(tmp_path_factory):
    cfg = RunConfig(out_dir=str(tmp_path_factory.mktemp("scaling")))
    rows = harness.cmd_scaling(cfg)
    by_family = {}
    for family, size, acc in rows:
        by_family.setdefault(family, {})[size] = acc
    ok = True
    details = []
    for family, accs in by_family.items():
        quarter, double = accs[cfg.scaling_base // 4], accs[2 * cfg.scaling_base]
        ok = ok and double >= quarter - 0.02
        details.append(f"{family} 1/4x {quarter:.3f} -> 2x {double:.3f}")
    _report(10, ok, ", ".join(details))
