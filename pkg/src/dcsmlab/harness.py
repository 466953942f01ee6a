"""Run orchestration: resolved configs, dataset builds, training and
evaluation against baselines, ablations, scaling sweeps, and artifact
emission (CSV, JSONL, PGM, checkpoints, text reports).

Every command is a function of a RunConfig and is deterministic: the same
config produces byte-identical artifacts.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import baselines, bench, dcsm, scorer, verifier
from .errors import ConfigInvalid, EmptyDataset, MissingArtifact
from .oracle import DenseEncoder, DenseEncoderConfig, build_global_space
from .world import ConceptWorld, WorldConfig, build_world

TIE_TOL = 1e-9
_EVAL_SEED_OFFSET = 10_000_000


@dataclass
class RunConfig:
    # world
    num_objects: int = 16
    num_attributes: int = 8
    dimension: int = 64
    world_seed: int = 0
    # global embedding space
    delta: float = 0.02
    layout: str = "random"
    space_seed: int = 0
    # dense encoder
    patch_grid: int = 4
    t_max: int = 8
    w_obj: float = 0.8
    w_attr: float = 0.4
    w_global: float = 0.9
    noise: float = 0.15
    encoder_seed: int = 0
    # functional rows
    fr_seed: int = 0
    # scorer training
    hidden: int = 128
    lr: float = 2e-3
    batch_size: int = 8
    epochs: int = 2
    train_seed: int = 0
    pool: str = "flatten"
    # datasets
    train_samples: int = 2000
    eval_samples: int = 500
    data_seed: int = 0
    eval_fraction: float = 0.25
    prob_location: float = 0.0
    # verification
    trials: int = 50
    collapse_trials: int = 1000
    dilution_trials: int = 500
    dilution_dimension: int = 512
    dilution_kmax: int = 8
    # scaling sweep
    scaling_base: int = 320
    # output
    out_dir: str = "out"

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in sorted(asdict(self).items()))


def parse_config(text: str, base: RunConfig = None) -> RunConfig:
    """Flat key=value lines; '#' starts a comment; types follow defaults."""
    cfg = base or RunConfig()
    types = {f.name: f.type for f in fields(RunConfig)}
    defaults = asdict(RunConfig())
    overrides = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise ConfigInvalid(f"unknown config key {key!r}")
        kind = type(defaults[key])
        overrides[key] = kind(value)
    return replace(cfg, **overrides)


def load_config(path, base: RunConfig = None) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), base)


@dataclass
class EvalResult:
    model: str
    family: str
    accuracy: float
    chance: float
    margins: list  # per-sample (correct score - best competing score)


# -- shared component construction -------------------------------------------


@dataclass
class Components:
    cfg: RunConfig
    world: ConceptWorld
    space: object
    encoder: DenseEncoder
    fr_table: dcsm.FrTable
    splits: dict


def build_components(cfg: RunConfig) -> Components:
    world = build_world(
        WorldConfig(
            num_objects=cfg.num_objects,
            num_attributes=cfg.num_attributes,
            dimension=cfg.dimension,
            seed=cfg.world_seed,
        )
    )
    space = build_global_space(world, delta=cfg.delta, layout=cfg.layout, seed=cfg.space_seed)
    enc_cfg = DenseEncoderConfig(
        patch_grid=cfg.patch_grid,
        t_max=cfg.t_max,
        w_obj=cfg.w_obj,
        w_attr=cfg.w_attr,
        w_global=cfg.w_global,
        noise=cfg.noise,
        seed=cfg.encoder_seed,
    )
    encoder = DenseEncoder(space, enc_cfg)
    table = dcsm.build_fr_table(world, 1 + cfg.patch_grid**2, seed=cfg.fr_seed)
    splits = bench.split_concepts(world, cfg.eval_fraction, seed=cfg.data_seed)
    return Components(cfg=cfg, world=world, space=space, encoder=encoder, fr_table=table, splits=splits)


def generate_datasets(comp: Components, family: str, n_train: int = None, n_eval: int = None):
    """Train on one concept pool, evaluate on held-out concepts."""
    cfg = comp.cfg
    n_train = cfg.train_samples if n_train is None else n_train
    n_eval = cfg.eval_samples if n_eval is None else n_eval
    kwargs_train = {"grid": cfg.patch_grid, "objects": comp.splits["train_objects"]}
    kwargs_eval = {"grid": cfg.patch_grid, "objects": comp.splits["eval_objects"]}
    if family == "attribute":
        kwargs_train["attributes"] = comp.splits["train_attributes"]
        kwargs_eval["attributes"] = comp.splits["eval_attributes"]
    if family == "spatial":
        kwargs_train["prob_location"] = cfg.prob_location
        kwargs_eval["prob_location"] = 0.0  # keep the eval a clean 4-way task
    train = bench.generate_family(comp.world, family, n_train, seed=cfg.data_seed, **kwargs_train)
    evals = bench.generate_family(
        comp.world, family, n_eval, seed=cfg.data_seed + 1, **kwargs_eval
    )
    return train, evals


def embed_training_pairs(comp: Components, samples, seed_base: int = 0):
    """One hard positive and one hard negative (text, image) pair each."""
    enc = comp.encoder
    world = comp.world
    pairs = []
    for i, s in enumerate(samples):
        pairs.append(
            scorer.TrainPair(
                pos_text=enc.embed_caption(world.render(s.pos_captions[0])),
                pos_image=enc.embed_scene(s.pos_scene, sample_seed=seed_base + 2 * i),
                neg_text=enc.embed_caption(world.render(s.neg_captions[0])),
                neg_image=enc.embed_scene(s.neg_scene, sample_seed=seed_base + 2 * i + 1),
            )
        )
    return pairs


# -- evaluation ---------------------------------------------------------------


def _tie_credit(scores, correct: int) -> tuple:
    """Fractional credit for argmax with exact ties split evenly.

    Returns (credit, margin). Ties within 1e-9 of the maximum share the
    credit, which keeps uninformative scorers exactly at chance instead of
    pinning them to one index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    top = scores.max()
    tied = np.flatnonzero(scores >= top - TIE_TOL)
    credit = (1.0 / len(tied)) if correct in tied else 0.0
    others = np.delete(scores, correct)
    margin = float(scores[correct] - others.max()) if others.size else float("inf")
    return credit, margin


def make_dcsm_model(params, world, table):
    def score(texts, image):
        maps = [dcsm.prepare_map(t, image, world, table).values for t in texts]
        return scorer.forward(params, np.stack(maps))

    return score


def make_cosine_model():
    def score(texts, image):
        return [baselines.cosine_score(t, image) for t in texts]

    return score


def make_mlp_model(params):
    def score(texts, image):
        return [baselines.mlp_score(params, t, image) for t in texts]

    return score


def evaluate_models(comp: Components, family: str, samples, models: dict, seed_base: int = _EVAL_SEED_OFFSET):
    """Score every candidate caption per sample for each named model."""
    world = comp.world
    enc = comp.encoder
    chance = bench.CHANCE_LEVEL[family]
    credits = {name: [] for name in models}
    margins = {name: [] for name in models}
    text_cache = {}
    for i, sample in enumerate(samples):
        image = enc.embed_scene(sample.pos_scene, sample_seed=seed_base + i)
        candidates, correct = bench.candidate_captions(world, sample)
        texts = []
        for clause in candidates:
            key = tuple(el.name for el in clause)
            if key not in text_cache:
                text_cache[key] = enc.embed_caption(world.render(clause))
            texts.append(text_cache[key])
        for name, model in models.items():
            credit, margin = _tie_credit(model(texts, image), correct)
            credits[name].append(credit)
            margins[name].append(margin)
    return [
        EvalResult(
            model=name,
            family=family,
            accuracy=float(np.mean(credits[name])),
            chance=chance,
            margins=margins[name],
        )
        for name in models
    ]


# -- training pipeline ---------------------------------------------------------


def train_family(comp: Components, family: str, train_samples=None, use_fr: bool = True, epochs: int = None):
    """Generate (or take) training samples, embed, train the map scorer."""
    cfg = comp.cfg
    if train_samples is None:
        train_samples, _ = generate_datasets(comp, family)
    if not train_samples:
        raise EmptyDataset(f"no training samples for family {family}")
    pairs = embed_training_pairs(comp, train_samples)
    train_cfg = scorer.TrainConfig(
        hidden=cfg.hidden,
        lr=cfg.lr,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs if epochs is None else epochs,
        seed=cfg.train_seed,
        pool=cfg.pool,
    )
    table = comp.fr_table if use_fr else None
    params, log = scorer.train(pairs, comp.world, table, train_cfg)
    return params, log, pairs


def training_log_to_csv(log) -> str:
    lines = ["epoch,loss,train_accuracy"]
    for row in log:
        acc = row.get("train_accuracy", float("nan"))
        lines.append(f"{row['epoch']},{row['loss']:.9g},{acc:.9g}")
    return "\n".join(lines) + "\n"


def eval_results_to_csv(results) -> str:
    lines = ["model,family,accuracy,chance,mean_margin"]
    for r in results:
        lines.append(
            f"{r.model},{r.family},{r.accuracy:.6g},{r.chance:.6g},"
            f"{float(np.mean(r.margins)):.6g}"
        )
    return "\n".join(lines) + "\n"


# -- commands -------------------------------------------------------------------


def _ensure_out(cfg: RunConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "resolved_config.txt"), "w") as fh:
        fh.write(cfg.to_text())
    return cfg.out_dir


def cmd_verify_lemmas(cfg: RunConfig) -> int:
    """All geometry experiments + condition reports; nonzero exit code if
    any analytic-vs-numeric deviation exceeds tolerance."""
    out = _ensure_out(cfg)
    world = build_world(
        WorldConfig(cfg.num_objects, cfg.num_attributes, cfg.dimension, cfg.world_seed)
    )
    simplex = build_global_space(world, delta=cfg.delta, layout="simplex", seed=cfg.space_seed)
    random_space = build_global_space(world, delta=cfg.delta, layout="random", seed=cfg.space_seed)
    sweep_space = simplex if cfg.layout == "simplex" else random_space

    reports = verifier.check_conditions(verifier.OracleAssignment(simplex), seed=cfg.space_seed)
    certs = [
        verifier.verify_superposition(simplex, trials=cfg.trials, seed=cfg.space_seed),
        verifier.verify_attribute_collapse(
            sweep_space, noise_weights=(0.0, 0.1, 0.2, 0.4), trials=cfg.collapse_trials, seed=cfg.space_seed
        ),
        verifier.verify_spatial_contradiction(simplex, betas=(1.0, 1.0, 1.0)),
        verifier.verify_preposition_hierarchy(simplex),
        verifier.verify_negation_contradiction(simplex),
    ]
    with open(os.path.join(out, "conditions.csv"), "w") as fh:
        fh.write(verifier.condition_reports_to_csv(reports))
    for cert in certs:
        with open(os.path.join(out, f"lemma_{cert.lemma_id}.csv"), "w") as fh:
            fh.write(verifier.certificate_to_csv(cert))
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(verifier.summary_text(reports, certs))
    ok = all(c.verdict and c.max_abs_deviation < 1e-6 for c in certs)
    return 0 if ok else 1


def cmd_dilution(cfg: RunConfig) -> list:
    out = _ensure_out(cfg)
    world = build_world(
        WorldConfig(cfg.num_objects, cfg.num_attributes, cfg.dilution_dimension, cfg.world_seed)
    )
    space = build_global_space(world, delta=cfg.delta, layout="random", seed=cfg.space_seed)
    curve = verifier.multi_object_dilution(
        space, k_max=cfg.dilution_kmax, trials=cfg.dilution_trials, seed=cfg.space_seed
    )
    with open(os.path.join(out, "dilution.csv"), "w") as fh:
        fh.write("k,mean_cosine,reference\n")
        for k, mean in curve:
            fh.write(f"{k},{mean:.9g},{1.0 / np.sqrt(k):.9g}\n")
    return curve


def cmd_gen_data(cfg: RunConfig, families=bench.FAMILIES) -> dict:
    out = _ensure_out(cfg)
    comp = build_components(cfg)
    with open(os.path.join(out, "world.json"), "w") as fh:
        fh.write(comp.world.to_json())
    datasets = {}
    for family in families:
        train, evals = generate_datasets(comp, family)
        bench.write_jsonl(os.path.join(out, f"{family}_train.jsonl"), comp.world, train)
        bench.write_jsonl(os.path.join(out, f"{family}_eval.jsonl"), comp.world, evals)
        datasets[family] = (train, evals)
    return datasets


def cmd_train(cfg: RunConfig, family: str, use_fr: bool = True, comp: Components = None):
    out = _ensure_out(cfg)
    comp = comp or build_components(cfg)
    params, log, _ = train_family(comp, family, use_fr=use_fr)
    suffix = "" if use_fr else "_no_fr"
    scorer.save_checkpoint(os.path.join(out, f"scorer_{family}{suffix}.bin"), params)
    with open(os.path.join(out, f"train_log_{family}{suffix}.csv"), "w") as fh:
        fh.write(training_log_to_csv(log))
    with open(os.path.join(out, "fr_table.json"), "w") as fh:
        fh.write(comp.fr_table.to_json())
    return params, log


def cmd_eval(cfg: RunConfig, family: str, checkpoint=None, params=None, no_fr_params=None, mlp_params=None, comp: Components = None, eval_samples=None):
    out = _ensure_out(cfg)
    comp = comp or build_components(cfg)
    if params is None:
        if checkpoint is None or not os.path.exists(checkpoint):
            raise MissingArtifact(f"no scorer checkpoint for family {family}")
        params = scorer.load_checkpoint(checkpoint)
    if eval_samples is None:
        _, eval_samples = generate_datasets(comp, family)
    models = {
        "dcsm": make_dcsm_model(params, comp.world, comp.fr_table),
        "cosine": make_cosine_model(),
    }
    if no_fr_params is not None:
        models["dcsm_no_fr"] = make_dcsm_model(no_fr_params, comp.world, None)
    if mlp_params is not None:
        models["mlp"] = make_mlp_model(mlp_params)
    results = evaluate_models(comp, family, eval_samples, models)
    with open(os.path.join(out, f"eval_{family}.csv"), "w") as fh:
        fh.write(eval_results_to_csv(results))
    return results


def cmd_scaling(cfg: RunConfig, families=bench.FAMILIES) -> list:
    """Train at {1/4, 1/2, 1, 2} x the base size against one fixed eval set."""
    out = _ensure_out(cfg)
    if cfg.scaling_base <= 0:
        raise EmptyDataset("scaling_base must be positive")
    comp = build_components(cfg)
    sizes = [max(1, cfg.scaling_base // 4), max(1, cfg.scaling_base // 2), cfg.scaling_base, 2 * cfg.scaling_base]
    rows = []
    for family in families:
        train_full, evals = generate_datasets(comp, family, n_train=2 * cfg.scaling_base)
        for size in sizes:
            params, _, _ = train_family(comp, family, train_samples=train_full[:size])
            results = evaluate_models(
                comp, family, evals, {"dcsm": make_dcsm_model(params, comp.world, comp.fr_table)}
            )
            rows.append((family, size, results[0].accuracy))
    with open(os.path.join(out, "scaling.csv"), "w") as fh:
        fh.write("family,size,accuracy\n")
        for family, size, acc in rows:
            fh.write(f"{family},{size},{acc:.6g}\n")
    return rows


def cmd_emit_dcsm(cfg: RunConfig, caption: str, scene, name: str = "map", comp: Components = None) -> dict:
    out = _ensure_out(cfg)
    comp = comp or build_components(cfg)
    text = comp.encoder.embed_caption(caption)
    image = comp.encoder.embed_scene(scene, sample_seed=0)
    map_ = dcsm.prepare_map(text, image, comp.world, comp.fr_table, provenance=(caption, name))
    csv_path = os.path.join(out, f"{name}.csv")
    pgm_path = os.path.join(out, f"{name}.pgm")
    with open(csv_path, "w") as fh:
        fh.write(dcsm.dcsm_to_csv(map_))
    with open(pgm_path, "wb") as fh:
        fh.write(dcsm.dcsm_to_pgm(map_))
    return {"csv": csv_path, "pgm": pgm_path, "map": map_}
