"""Command-line entry point.

Verbs: verify-lemmas, gen-data, train, eval, scaling, emit-dcsm, dilution.
Every run writes its resolved configuration next to its outputs.
"""

from __future__ import annotations

import argparse
import sys

from . import bench, harness, scorer
from .oracle import SceneSpec


def _add_common(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int, help="master seed applied to all seed fields")
    p.add_argument("--out", help="output directory")
    p.add_argument("--layout", choices=["simplex", "random"], help="concept layout")


def _resolve(args) -> harness.RunConfig:
    cfg = harness.RunConfig()
    if args.config:
        cfg = harness.load_config(args.config, cfg)
    overrides = {}
    if args.seed is not None:
        overrides.update(
            world_seed=args.seed,
            space_seed=args.seed,
            encoder_seed=args.seed,
            fr_seed=args.seed,
            train_seed=args.seed,
            data_seed=args.seed,
        )
    if args.out:
        overrides["out_dir"] = args.out
    if args.layout:
        overrides["layout"] = args.layout
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _families(args):
    return bench.FAMILIES if args.family == "all" else (args.family,)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dcsmlab",
        description="Unit-sphere embedding geometry experiments and the "
        "dense similarity-map scorer on a synthetic concept world.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-lemmas", help="run all geometry experiments")
    _add_common(p)

    p = sub.add_parser("gen-data", help="generate benchmark datasets")
    _add_common(p)
    p.add_argument("--family", choices=[*bench.FAMILIES, "all"], default="all")

    p = sub.add_parser("train", help="train the map scorer")
    _add_common(p)
    p.add_argument("--family", choices=[*bench.FAMILIES, "all"], default="all")
    p.add_argument("--no-fr", action="store_true", help="ablation: skip functional rows")

    p = sub.add_parser("eval", help="evaluate scorer and baselines")
    _add_common(p)
    p.add_argument("--family", choices=[*bench.FAMILIES, "all"], default="all")
    p.add_argument("--checkpoint", help="scorer checkpoint (default: out dir)")
    p.add_argument(
        "--baseline",
        choices=["cosine", "mlp"],
        action="append",
        help="baselines to include (cosine always runs)",
    )

    p = sub.add_parser("scaling", help="train at 1/4x..2x data and record accuracy")
    _add_common(p)
    p.add_argument("--family", choices=[*bench.FAMILIES, "all"], default="all")

    p = sub.add_parser("emit-dcsm", help="render one normalized map as CSV + PGM")
    _add_common(p)
    p.add_argument("--caption", required=True, help='e.g. "obj00 left of obj01"')
    p.add_argument(
        "--place",
        action="append",
        required=True,
        metavar="OBJ[:ATTR]@ROW,COL",
        help="scene placement, repeatable",
    )
    p.add_argument("--name", default="map", help="output file stem")

    p = sub.add_parser("dilution", help="multi-concept composite dilution curve")
    _add_common(p)

    args = parser.parse_args(argv)
    cfg = _resolve(args)

    if args.command == "verify-lemmas":
        return harness.cmd_verify_lemmas(cfg)
    if args.command == "gen-data":
        harness.cmd_gen_data(cfg, _families(args))
        return 0
    if args.command == "train":
        comp = harness.build_components(cfg)
        for family in _families(args):
            harness.cmd_train(cfg, family, use_fr=not args.no_fr, comp=comp)
        return 0
    if args.command == "eval":
        import os

        comp = harness.build_components(cfg)
        code = 0
        for family in _families(args):
            ckpt = args.checkpoint or os.path.join(cfg.out_dir, f"scorer_{family}.bin")
            mlp_params = None
            if args.baseline and "mlp" in args.baseline:
                train, _ = harness.generate_datasets(comp, family)
                pairs = harness.embed_training_pairs(comp, train)
                mlp_params, _ = harness.baselines.train_mlp(
                    pairs,
                    scorer.TrainConfig(
                        hidden=cfg.hidden,
                        lr=cfg.lr,
                        batch_size=cfg.batch_size,
                        epochs=cfg.epochs,
                        seed=cfg.train_seed,
                    ),
                    cfg.dimension,
                )
            results = harness.cmd_eval(
                cfg, family, checkpoint=ckpt, mlp_params=mlp_params, comp=comp
            )
            for r in results:
                print(f"{r.family} {r.model}: accuracy {r.accuracy:.3f} (chance {r.chance})")
        return code
    if args.command == "scaling":
        rows = harness.cmd_scaling(cfg, _families(args))
        for family, size, acc in rows:
            print(f"{family} size {size}: accuracy {acc:.3f}")
        return 0
    if args.command == "emit-dcsm":
        comp = harness.build_components(cfg)
        placements = []
        for spec in args.place:
            body, cell = spec.split("@")
            row, col = (int(v) for v in cell.split(","))
            if ":" in body:
                obj, attr = body.split(":")
            else:
                obj, attr = body, None
            placements.append(
                (
                    comp.world.object(obj),
                    comp.world.attribute(attr) if attr else None,
                    (row, col),
                )
            )
        scene = SceneSpec(placements=tuple(placements))
        paths = harness.cmd_emit_dcsm(cfg, args.caption, scene, name=args.name, comp=comp)
        print(paths["csv"])
        print(paths["pgm"])
        return 0
    if args.command == "dilution":
        curve = harness.cmd_dilution(cfg)
        for k, mean in curve:
            print(f"k={k}: mean cosine {mean:.4f}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
