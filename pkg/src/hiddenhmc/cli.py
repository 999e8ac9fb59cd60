"""Command-line entry point: ``hidden {generate,train,eval,sweep}``.

Exit codes: 0 on success, 2 on usage errors, 1 on data or runtime errors.
Settings come from defaults, then an optional ``--config`` JSON file, then
explicit flags; later sources win.
"""

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, fields, replace
from pathlib import Path

from . import experiment, synthdata
from .data import read_dataset, read_hierarchy, write_dataset, write_hierarchy
from .errors import CheckpointVersionError, InvalidInputError, TrainingError
from .evalmetrics import DEFAULT_KS
from .trainer import VARIANTS, TrainConfig, load_checkpoint, save_checkpoint, train

log = logging.getLogger("hiddenhmc")

# flag dest -> TrainConfig field
TRAIN_FLAGS = {
    "lam": "lam", "epochs": "epochs", "lr": "learning_rate", "batch_size": "batch_size",
    "embed_dim": "embed_dim", "doc_dropout": "doc_dropout",
    "label_dropout": "label_dropout", "validation_fraction": "validation_fraction",
    "l2_schedule": "l2_schedule", "stage1_steps": "stage1_steps",
}
SPEC_FLAGS = {"samples": "total_samples", "spacing": "spacing", "sigma": "sigma",
              "train_fraction": "train_fraction"}


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in text.replace(",", " ").split()]


def _master_seed(args, configured=None):
    if args.seed is not None:
        return args.seed
    if configured is not None:
        return int(configured)
    return int(os.environ.get("HIDDEN_SEED", "0"))


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None


def _spec_from(args, cfg):
    known = {f.name for f in fields(synthdata.GaussianGridSpec)}
    spec = synthdata.GaussianGridSpec(**{k: v for k, v in cfg.get("data", {}).items() if k in known})
    for flag, name in SPEC_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            spec = replace(spec, **{name: value})
    return spec


def _config_from(args, cfg, variant=None):
    config = TrainConfig.from_dict(cfg.get("train", {}))
    for flag, name in TRAIN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            config = replace(config, **{name: value})
    if variant is not None:
        config = replace(config, variant=variant)
    config.validate()
    return config


def _add_train_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, help="co-occurrence loss weight (0.1)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="Adam learning rate (0.001)")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--doc-dropout", type=float)
    p.add_argument("--label-dropout", type=float)
    p.add_argument("--validation-fraction", type=float)
    p.add_argument("--l2-schedule", choices=["every_batch", "first_batch"])
    p.add_argument("--stage1-steps", type=int, help="cas stage-1 Adam steps")
    p.add_argument("--config", help="JSON file with 'train' and 'data' sections")


def _add_spec_flags(p):
    p.add_argument("--samples", type=int, help="total samples before the split (20000)")
    p.add_argument("--spacing", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--train-fraction", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="hidden", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write the synthetic grid benchmark")
    _add_spec_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train one variant and evaluate it on a test file")
    p.add_argument("--train", required=True, help="training dataset (JSON Lines)")
    p.add_argument("--test", required=True, help="test dataset (JSON Lines)")
    p.add_argument("--hierarchy", help="edge list used only for embedding metrics")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--k-list", type=_ints, default=list(DEFAULT_KS))
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--hierarchy")
    p.add_argument("--k-list", type=_ints, default=list(DEFAULT_KS))
    p.add_argument("--out", help="write the metrics JSON here instead of stdout")

    p = sub.add_parser("sweep", help="run Setting 1 (label drop) or Setting 2 (subsampling)")
    p.add_argument("--setting", type=int, choices=[1, 2], default=1)
    p.add_argument("--variants", default=",".join(experiment.SWEEP_VARIANTS))
    p.add_argument("--drop-probs", type=_floats, default=list(experiment.SETTING1_DROP_PROBS))
    p.add_argument("--fractions", type=_floats, default=list(experiment.SETTING2_FRACTIONS))
    p.add_argument("--seeds", type=_ints, default=[0, 1, 2], help="replicate ids")
    p.add_argument("--seed", type=int, help="master seed (falls back to $HIDDEN_SEED)")
    p.add_argument("--k-list", type=_ints, default=list(DEFAULT_KS))
    p.add_argument("--workers", type=int, default=1)
    _add_spec_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="CSV report path")
    return parser


def cmd_generate(args):
    cfg = _load_config(args.config)
    spec = replace(_spec_from(args, cfg), seed=_master_seed(args, cfg.get("data", {}).get("seed")))
    train_set, test_set, hierarchy = synthdata.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(out / "train.jsonl", train_set)
    write_dataset(out / "test.jsonl", test_set)
    write_hierarchy(out / "hierarchy.txt", hierarchy)
    print(f"train={len(train_set)} test={len(test_set)} labels={train_set.num_labels} "
          f"edges={len(hierarchy.edges)} -> {out}")
    return 0


def cmd_train(args):
    cfg = _load_config(args.config)
    config = _config_from(args, cfg, args.variant)
    config = replace(config, seed=_master_seed(args, cfg.get("train", {}).get("seed")))
    train_set = read_dataset(args.train)
    test_set = read_dataset(args.test)
    if test_set.num_labels != train_set.num_labels or test_set.feature_dim != train_set.feature_dim:
        raise InvalidInputError(
            f"train (num_labels={train_set.num_labels}, feature_dim={train_set.feature_dim}) and "
            f"test (num_labels={test_set.num_labels}, feature_dim={test_set.feature_dim}) disagree")
    hierarchy = None
    if args.hierarchy:
        hierarchy = read_hierarchy(args.hierarchy, train_set.num_labels)
    start = time.perf_counter()
    model = train(train_set, config)
    rec = experiment.evaluate_model(model, test_set, hierarchy, args.k_list)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.json", model)
    (out / "metrics.json").write_text(json.dumps(rec.report(), indent=1, sort_keys=True))
    log.info("trained %s in %.1f s", config.variant, time.perf_counter() - start)
    print(json.dumps(rec.report(), sort_keys=True))
    return 0


def cmd_eval(args):
    model = load_checkpoint(args.checkpoint)
    data = read_dataset(args.data)
    hierarchy = read_hierarchy(args.hierarchy, data.num_labels) if args.hierarchy else None
    rec = experiment.evaluate_model(model, data, hierarchy, args.k_list)
    text = json.dumps(rec.report(), indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_sweep(args, parser):
    variants = [v for v in args.variants.replace(",", " ").split()]
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        parser.error(f"unknown variants {bad}")
    grid = args.drop_probs if args.setting == 1 else args.fractions
    if not variants or not grid or not args.seeds or not args.k_list:
        parser.error("sweep grids must be non-empty")
    cfg = _load_config(args.config)
    spec = _spec_from(args, cfg)
    config = _config_from(args, cfg)
    master = _master_seed(args)
    cells = experiment.make_cells(args.setting, variants, grid, args.seeds, master)
    records = experiment.run_sweep(cells, config, spec, args.k_list, args.workers)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(experiment.records_to_csv(records, args.k_list), newline="")
    meta = {"setting": args.setting, "variants": variants, "grid": grid,
            "grid_source": "published drop grid" if args.setting == 1 else "chosen by hiddenhmc",
            "seeds": args.seeds, "master_seed": master, "k_list": args.k_list,
            "data": asdict(spec), "train": asdict(config)}
    out.with_suffix(".meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    timing = "variant,seed,value,seconds\n" + "".join(
        f"{r.variant},{r.seed},{r.setting.get('drop_prob', r.setting.get('fraction'))},"
        f"{r.seconds:.3f}\n" for r in records)
    out.with_suffix(".timing.csv").write_text(timing)
    failed = sum(r.error is not None for r in records)
    print(f"{len(records)} cells ({failed} failed) -> {out}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval":
            return cmd_eval(args)
        return cmd_sweep(args, parser)
    except (InvalidInputError, CheckpointVersionError, TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
