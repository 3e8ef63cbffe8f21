"""Command-line driver.

Subcommands: train (baseline), prune (single mask), finetune, ablate
(rate x variant grid), alpha-sweep, report (re-emit from artifacts).
Exit codes: 0 success, 2 config error, 3 I/O error, 4 numeric divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .data import load_dataset, synth_dataset
from .errors import (
    BudgetError,
    DegenerateDistributionError,
    DivergenceError,
    DomainError,
    SaturationError,
    ShapeError,
)
from .gcn import (
    GcnShape,
    TrainConfig,
    as_layered,
    evaluate,
    init_model,
    load_model,
    save_model,
    train,
)
from .harness import (
    DEFAULT_VARIANTS,
    ExperimentConfig,
    ModelSpec,
    SyntheticSpec,
    config_from_json,
    emit,
    report_from_artifacts,
    run_ablation,
    run_alpha_sweep,
)
from .network import load_mask, load_network, save_mask
from .pruner import PruneSpec, prune
from .topology import consistency_report, report_to_json


def _parse_kv(text: str, cls):
    """Parse "a=1,b=2" into a dataclass, casting by field type."""
    values = {}
    if text:
        for part in text.split(","):
            key, _, raw = part.partition("=")
            key = key.strip()
            fields = {f.name: f.type for f in dataclasses.fields(cls)}
            if key not in fields:
                raise DomainError(f"unknown {cls.__name__} field {key!r}")
            caster = float if fields[key] == "float" else int
            values[key] = caster(raw)
    return cls(**values)


def _load_sequences(args):
    if args.dataset:
        return load_dataset(args.dataset)
    spec = _parse_kv(args.synthetic or "", SyntheticSpec)
    return synth_dataset(
        spec.classes, spec.per_class_train, spec.joints, spec.frames, spec.seed,
        spec.noise, spec.phase_jitter, spec.scale_jitter,
    )


def _train_config(args, epochs) -> TrainConfig:
    return TrainConfig(epochs=epochs, seed=args.seed)


def cmd_train(args) -> int:
    sequences = _load_sequences(args)
    joints = sequences[0].num_joints
    classes = int(max(seq.label for seq in sequences)) + 1
    shape = GcnShape(args.heads, joints, 3 * args.chunks, args.filters, classes)
    model = init_model(shape, args.seed, args.head_scale)
    model, losses = train(model, sequences, _train_config(args, args.epochs))
    save_model(model, args.out)
    acc = evaluate(model, sequences)
    print(f"trained {args.epochs} epochs, final loss {losses[-1]:.6f}, train accuracy {acc:.4f}")
    print(f"model written to {args.out}")
    return 0


def _load_prunable(args):
    if args.model:
        view, _ = as_layered(load_model(args.model))
        return view
    return load_network(args.network)


def cmd_prune(args) -> int:
    net = _load_prunable(args)
    spec = PruneSpec(
        rate=args.rate,
        tc=args.tc,
        stochastic=args.stochastic,
        scoring=args.scoring,
        alpha=args.alpha,
        seed=args.seed,
    )
    mask = prune(net, spec)
    save_mask(mask, args.out)
    print(report_to_json(consistency_report(mask)))
    print(f"mask written to {args.out}")
    return 0


def cmd_finetune(args) -> int:
    model = load_model(args.model)
    mask = load_mask(args.mask)
    sequences = _load_sequences(args)
    tuned, losses = train(model, sequences, _train_config(args, args.epochs), mask)
    save_model(tuned, args.out)
    acc = evaluate(tuned, sequences, mask)
    print(f"fine-tuned {args.epochs} epochs, final loss {losses[-1]:.6f}, train accuracy {acc:.4f}")
    print(f"model written to {args.out}")
    return 0


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        with open(args.config, "r", encoding="ascii") as fh:
            cfg = config_from_json(fh.read())
        if args.out:
            cfg = dataclasses.replace(cfg, output=args.out)
        return cfg
    synthetic = _parse_kv(args.synthetic or "", SyntheticSpec)
    variants = tuple(
        dataclasses.replace(v, scoring=args.scoring, alpha=args.alpha) if v.tc else v
        for v in DEFAULT_VARIANTS
    )
    return ExperimentConfig(
        rates=tuple(float(r) for r in args.rates.split(",")),
        variants=variants,
        alphas=tuple(float(a) for a in args.alphas.split(",")) if args.alphas else (1.0,),
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        synthetic=synthetic,
        dataset_path=args.dataset,
        model=ModelSpec(args.heads, args.filters, args.chunks, args.head_scale),
        epochs=args.epochs,
        finetune_epochs=args.finetune_epochs,
        output=args.out,
    )


def _print_rows(rows) -> None:
    for row in rows:
        alpha = "" if row.alpha is None else f" alpha={row.alpha:g}"
        acc = "NA" if row.accuracy_mean is None else f"{row.accuracy_mean:.4f}"
        ac = "NA" if row.ac_percentage is None else f"{row.ac_percentage:.2f}"
        print(
            f"rate={row.rate:g} tc={row.tc} stochastic={row.stochastic} "
            f"scoring={row.scoring}{alpha} kept={row.kept_params} ac%={ac} acc={acc}"
        )


def cmd_ablate(args) -> int:
    cfg = _experiment_config(args)
    rows = run_ablation(cfg)
    if args.table_out:
        emit(rows, args.format, args.table_out)
        print(f"results written to {args.table_out}")
    _print_rows(rows)
    return 0


def cmd_alpha_sweep(args) -> int:
    cfg = _experiment_config(args)
    rows = run_alpha_sweep(cfg)
    if args.table_out:
        emit(rows, args.format, args.table_out)
        print(f"results written to {args.table_out}")
    _print_rows(rows)
    return 0


def cmd_report(args) -> int:
    rows = report_from_artifacts(args.artifacts)
    if args.table_out:
        emit(rows, args.format, args.table_out)
        print(f"results written to {args.table_out}")
    _print_rows(rows)
    return 0


def _add_data_flags(p) -> None:
    p.add_argument("--dataset", help="directory of sequence files (adjacency.txt + seq_*.txt)")
    p.add_argument("--synthetic", help="synthetic generator overrides, e.g. classes=4,per_class_train=50")


def _add_model_flags(p) -> None:
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--filters", type=int, default=16)
    p.add_argument("--chunks", type=int, default=5)
    p.add_argument("--head-scale", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcprune")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a baseline model")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("prune", help="compute a single mask")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="model JSON to prune (via its layered view)")
    src.add_argument("--network", help="layered network text file to prune")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--tc", action="store_true")
    p.add_argument("--stochastic", action="store_true")
    p.add_argument("--scoring", choices=("local", "global"), default="local")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output mask text file")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("finetune", help="retrain the surviving weights under a mask")
    p.add_argument("--model", required=True)
    p.add_argument("--mask", required=True)
    _add_data_flags(p)
    p.add_argument("--epochs", type=int, default=75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_finetune)

    for name, func in (("ablate", cmd_ablate), ("alpha-sweep", cmd_alpha_sweep)):
        p = sub.add_parser(name, help=f"run the {name} grid")
        p.add_argument("--config", help="experiment config JSON (overrides other flags)")
        _add_data_flags(p)
        _add_model_flags(p)
        p.add_argument("--rates", default="0.5,0.9,0.99")
        p.add_argument("--alphas", default="1")
        p.add_argument("--seeds", default="0")
        p.add_argument("--scoring", choices=("local", "global"), default="local")
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--epochs", type=int, default=300)
        p.add_argument("--finetune-epochs", type=int, default=None)
        p.add_argument("--out", help="artifact directory (masks, runs.json, results)")
        p.add_argument("--table-out", help="write the aggregated table to this path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="re-emit tables from persisted artifacts")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--table-out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (
        DomainError,
        ShapeError,
        BudgetError,
        DegenerateDistributionError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SaturationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
