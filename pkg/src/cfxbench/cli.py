"""Command-line entry points.

Subcommands: preprocess, train, explain, evaluate, report, ablate-scope,
grid. Every config key is exposed as a ``--section.key`` flag; ``--set``
accepts the same ``section.key=value`` pairs, and explicit flags win over
``--set``, which wins over the config file. ``CFX_THREADS`` caps worker
parallelism during evaluation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .data import load_interactions, preprocess_implicit, save_snapshot
from .errors import CfxError
from .harness.config import (
    CONFIG_SCHEMA,
    apply_overrides,
    load_config,
    write_resolved_config,
)
from .harness.figures import render_figures
from .harness.report import (
    emit_positional,
    emit_report,
    load_positional_csv,
    load_report_csv,
)
from .harness.runner import (
    ExperimentConfig,
    _evaluate_user,
    _pretrain_lxr,
    dataset_label,
    grid_search,
    prepare_dataset,
    prepare_model,
    run_experiment,
    scope_ablation,
    split_dataset,
)

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config key (repeatable)",
    )
    for section, keys in CONFIG_SCHEMA.items():
        for key in keys:
            parser.add_argument(
                f"--{section}.{key}",
                dest=f"{section}__{key}",
                default=None,
                metavar="VALUE",
                help=argparse.SUPPRESS,
            )


def _resolve_config(args) -> dict:
    cfg = load_config(args.config)
    apply_overrides(cfg, args.overrides)
    pairs = []
    for section, keys in CONFIG_SCHEMA.items():
        for key in keys:
            raw = getattr(args, f"{section}__{key}", None)
            if raw is not None:
                pairs.append(f"{section}.{key}={raw}")
    # convenience spellings shared by the evaluation-flavored commands
    if getattr(args, "scope", None) is not None:
        pairs.append(f"eval.scope={args.scope}")
    if getattr(args, "hops", None) is not None:
        pairs.append(f"eval.hops={args.hops}")
    if getattr(args, "out_dir", None) is not None:
        pairs.append(f"eval.out_dir={args.out_dir}")
    return apply_overrides(cfg, pairs)


def _add_eval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scope",
        choices=("full", "khop", "indirect", "useronly"),
        default=None,
        help="perturbation scope for graph explainers",
    )
    parser.add_argument("--hops", type=int, default=None, help="scope neighborhood radius")
    parser.add_argument("--out-dir", default=None, help="output directory")


def _prepare(cfg):
    matrix = prepare_dataset(cfg)
    split = split_dataset(cfg, matrix)
    model, log = prepare_model(cfg, split)
    return matrix, split, model, log


def _write_run_outputs(cfg, result, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    emit_report(result.report, os.path.join(out_dir, "report.csv"), fmt="csv")
    emit_report(result.report, os.path.join(out_dir, "report.json"), fmt="json")
    emit_positional(result.positional, os.path.join(out_dir, "positional.csv"))
    with open(os.path.join(out_dir, "explanations.jsonl"), "w") as fh:
        for record in result.dumps:
            fh.write(json.dumps(record) + "\n")
    write_resolved_config(cfg, os.path.join(out_dir, "config.resolved.ini"))


def cmd_preprocess(args) -> int:
    cfg = _resolve_config(args)
    data = cfg["data"]
    if not data["path"]:
        raise CfxError("preprocess needs data.path")
    ratings = load_interactions(data["path"], data["format"])
    matrix = preprocess_implicit(
        ratings,
        positive_threshold=data["rating_threshold"],
        min_degree=data["min_degree"],
    )
    print(
        f"users={matrix.num_users} items={matrix.num_items} "
        f"interactions={matrix.num_interactions}"
    )
    if args.out:
        save_snapshot(matrix, args.out)
        print(f"snapshot written to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    if args.out:
        cfg["recommender"]["checkpoint"] = args.out
    matrix, split, model, log = _prepare(cfg)
    print(
        f"dataset={dataset_label(cfg)} users={matrix.num_users} "
        f"items={matrix.num_items} interactions={matrix.num_interactions}"
    )
    if log is None:
        print("loaded existing checkpoint, no training run")
    else:
        best = log.val_recall[log.best_epoch - 1]  # epochs are 1-based
        print(
            f"trained {cfg['recommender']['kind']} for {len(log.val_recall)} epochs, "
            f"best validation recall@{cfg['recommender']['val_k']} "
            f"{best:.4f} at epoch {log.best_epoch}"
        )
        if cfg["recommender"]["checkpoint"]:
            print(f"checkpoint written to {cfg['recommender']['checkpoint']}")
    return 0


def cmd_explain(args) -> int:
    cfg = _resolve_config(args)
    matrix, split, model, _log = _prepare(cfg)
    exp = ExperimentConfig.from_config(cfg, dataset_label(cfg))
    user = args.user
    if not 0 <= user < split.train.num_users:
        raise CfxError(f"user {user} out of range")
    lxr_net = None
    if "lxr" in exp.explainers:
        lxr_net, _users = _pretrain_lxr(cfg, exp, model, split.train, (user,))
    _records, dumps = _evaluate_user(exp, cfg, model, split.train, lxr_net, user)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for record in dumps:
            out.write(json.dumps(record) + "\n")
    finally:
        if args.out:
            out.close()
            print(f"{len(dumps)} explanations written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    _matrix, split, model, _log = _prepare(cfg)
    result = run_experiment(cfg, model, split.train, dataset_label(cfg))
    out_dir = cfg["eval"]["out_dir"]
    _write_run_outputs(cfg, result, out_dir)
    print(
        f"evaluated {len(result.eval_users)} users, "
        f"{len(result.report.rows)} report rows"
    )
    print(f"outputs in {out_dir}")
    return 0


def cmd_report(args) -> int:
    report_path = os.path.join(args.dir, "report.csv")
    if not os.path.exists(report_path):
        raise CfxError(f"no report.csv under {args.dir}")
    report = load_report_csv(report_path)
    positional_path = os.path.join(args.dir, "positional.csv")
    positional = (
        load_positional_csv(positional_path) if os.path.exists(positional_path) else []
    )
    paths = render_figures(report.rows, positional, args.dir)
    for path in paths:
        print(path)
    print(f"{len(paths)} figures rendered in {args.dir}")
    return 0


def cmd_ablate_scope(args) -> int:
    cfg = _resolve_config(args)
    scopes = [s.strip() for s in args.scopes.split(",") if s.strip()]
    if not scopes:
        raise CfxError("ablate-scope needs at least one scope")
    _matrix, split, model, _log = _prepare(cfg)
    result = scope_ablation(cfg, scopes, model, split.train, dataset_label(cfg))
    out_dir = cfg["eval"]["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "ablation.csv")
    emit_report(result.report, path, fmt="csv")
    print(f"{len(result.report.rows)} rows across scopes {','.join(scopes)}")
    print(f"ablation table written to {path}")
    return 0


def cmd_grid(args) -> int:
    cfg = _resolve_config(args)
    grid = {}
    for spec in args.params:
        if "=" not in spec:
            raise CfxError(f"bad --param {spec!r}, expected section.key=v1,v2,...")
        key, _, raw = spec.partition("=")
        values = [v.strip() for v in raw.split(",") if v.strip()]
        if not values:
            raise CfxError(f"--param {spec!r} lists no values")
        grid[key.strip()] = values
    _matrix, split, model, _log = _prepare(cfg)
    # lattice points are scored on a smaller, separately seeded user sample
    cfg["eval"]["n_eval_users"] = cfg["grid"]["n_users"]
    cfg["eval"]["eval_seed"] = cfg["grid"]["seed"]
    label = dataset_label(cfg)

    def runner(point_cfg):
        return run_experiment(point_cfg, model, split.train, label).report.rows

    result = grid_search(cfg, grid, args.objective, runner)
    out_dir = cfg["eval"]["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "grid.csv")
    keys = list(grid)
    with open(path, "w") as fh:
        fh.write(",".join(keys + [args.objective]) + "\n")
        for point in result.points:
            cells = [str(point.overrides[k]) for k in keys]
            fh.write(",".join(cells + [f"{point.value:.6f}"]) + "\n")
    if result.best is None:
        print("no lattice point produced a finite objective value")
        return 1
    best = " ".join(f"{k}={v}" for k, v in result.best.overrides.items())
    print(f"best {args.objective}={result.best.value:.6f} at {best}")
    print(f"grid table written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfxbench",
        description="benchmark counterfactual explainers for recommenders",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="filter raw ratings into a snapshot")
    _add_config_flags(p)
    p.add_argument("--out", default=None, help="snapshot output path")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a recommender and save a checkpoint")
    _add_config_flags(p)
    p.add_argument("--out", default=None, help="checkpoint output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="dump explanations for one user as JSON lines")
    _add_config_flags(p)
    _add_eval_flags(p)
    p.add_argument("--user", type=int, required=True, help="internal user id")
    p.add_argument("--out", default=None, help="JSON-lines output path (default stdout)")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="run the full benchmark and emit tables")
    _add_config_flags(p)
    _add_eval_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render figures from emitted tables")
    p.add_argument("--dir", required=True, help="directory holding report.csv")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ablate-scope", help="re-run graph explainers across scopes")
    _add_config_flags(p)
    _add_eval_flags(p)
    p.add_argument(
        "--scopes",
        default="full,khop,indirect,useronly",
        help="comma-separated scope list",
    )
    p.set_defaults(func=cmd_ablate_scope)

    p = sub.add_parser("grid", help="exhaustive hyperparameter search")
    _add_config_flags(p)
    _add_eval_flags(p)
    p.add_argument(
        "--param",
        dest="params",
        action="append",
        required=True,
        metavar="SECTION.KEY=V1,V2",
        help="one lattice dimension (repeatable)",
    )
    p.add_argument(
        "--objective",
        required=True,
        choices=sorted(
            ("pos_p", "neg_p", "pn_s", "pn_r", "gini", "num_perturb", "wall_time_s")
        ),
        help="metric to optimize; direction follows the metric",
    )
    p.set_defaults(func=cmd_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CfxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
