"""Experiment orchestration: sampling, explainer dispatch, aggregation.

One experiment walks a fixed user sample through every requested
(explainer, format, level, K) combination, times each explanation call,
evaluates the applicable metrics, and aggregates mean/std with a
population denominator. Determinism comes from per-instance seeds derived
with SeedSequence from (explainer seed, user, K, level, position,
explainer index), never from scheduling order; CFX_THREADS only caps the
worker pool.
"""

from __future__ import annotations

import copy
import itertools
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..data import (
    InteractionMatrix,
    load_interactions,
    load_snapshot,
    preprocess_implicit,
    split_holdout,
)
from ..errors import CfxError, ConfigError
from ..explainers import (
    REGISTRY,
    AccentConfig,
    CFMaskConfig,
    ExplanationTarget,
    LimeConfig,
    LXRConfig,
    PrinceConfig,
    RandomMaskConfig,
    ShapConfig,
    UNRConfig,
    build_perturbation_sequence,
    explain_accent,
    explain_cf_mask,
    explain_lime_rs,
    explain_lxr,
    explain_lxr_explicit,
    explain_prince,
    explain_random,
    explain_shap,
    explain_unr,
    train_lxr,
)
from ..metrics import (
    HIGHER_IS_BETTER,
    gini,
    neg_p_item,
    neg_p_list,
    num_perturb,
    pn_s_item,
    pn_s_list,
    pn_r_list,
    pos_p_item,
    pos_p_list,
)
from ..recommenders import TrainConfig, candidate_pool, make_recommender
from ..recommenders.io import load_checkpoint, save_checkpoint
from ..recommenders.lightgcn import LightGCNModel, train_lightgcn
from ..recommenders.mf import train_mf
from ..scopes import extract_scope
from ..synth import SynthConfig, synth_interactions
from .config import apply_overrides, resolve_scope_kind
from .report import EvalReport, PositionalRow, ReportRow

_LEVEL_CODE = {"item": 0, "list": 1}
_IMPLICIT_METRICS = ("pos_p", "neg_p", "gini")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    recommender: str
    k_values: tuple
    t_steps: int
    levels: tuple
    n_eval_users: int
    min_history: int
    eval_seed: int
    explainer_seed: int
    scope_kind: str
    hops: int
    explainers: tuple

    @classmethod
    def from_config(cls, cfg: dict, dataset: str) -> "ExperimentConfig":
        e = cfg["eval"]
        for name in e["explainers"]:
            if name not in REGISTRY:
                raise ConfigError(f"unknown explainer {name!r}")
        for level in e["levels"]:
            if level not in ("item", "list"):
                raise ConfigError(f"unknown level {level!r}")
        if not e["k_values"] or any(k < 1 for k in e["k_values"]):
            raise ConfigError(f"k_values must be >= 1, got {e['k_values']}")
        if e["t_steps"] < 1:
            raise ConfigError("t_steps must be >= 1")
        return cls(
            dataset=dataset,
            recommender=cfg["recommender"]["kind"],
            k_values=tuple(e["k_values"]),
            t_steps=e["t_steps"],
            levels=tuple(e["levels"]),
            n_eval_users=e["n_eval_users"],
            min_history=e["min_history"],
            eval_seed=e["eval_seed"],
            explainer_seed=e["explainer_seed"],
            scope_kind=resolve_scope_kind(e["scope"]),
            hops=e["hops"],
            explainers=tuple(e["explainers"]),
        )


@dataclass
class RunResult:
    report: EvalReport
    positional: list
    dumps: list
    eval_users: tuple
    pretrain_seconds: float = 0.0
    lxr_train_users: tuple = ()


@dataclass
class _Record:
    user: int
    level: str
    k: int
    position: int  # 1-based original rank; 0 for list level
    explainer: str
    format: str
    failed: bool = False
    wall_time_s: float = 0.0
    metrics: dict = field(default_factory=dict)


def dataset_label(cfg: dict) -> str:
    data = cfg["data"]
    if data["name"]:
        return data["name"]
    if data["format"] == "synthetic":
        return "synthetic"
    stem = os.path.splitext(os.path.basename(data["path"]))[0]
    return stem or "dataset"


def prepare_dataset(cfg: dict) -> InteractionMatrix:
    """Load or generate the filtered interaction matrix named by [data]."""
    data = cfg["data"]
    fmt = data["format"]
    if fmt == "synthetic":
        return synth_interactions(
            SynthConfig(
                n_users=data["synth_users"],
                n_items=data["synth_items"],
                n_clusters=data["synth_clusters"],
                mean_degree=data["synth_mean_degree"],
                seed=data["synth_seed"],
            )
        )
    if not data["path"]:
        raise ConfigError("data.path is required for non-synthetic formats")
    if fmt == "snapshot":
        return load_snapshot(data["path"])
    ratings = load_interactions(data["path"], fmt)
    return preprocess_implicit(
        ratings,
        positive_threshold=data["rating_threshold"],
        min_degree=data["min_degree"],
    )


def split_dataset(cfg: dict, matrix: InteractionMatrix):
    data = cfg["data"]
    ratios = (1.0 - data["val_ratio"] - data["test_ratio"], data["val_ratio"], data["test_ratio"])
    return split_holdout(matrix, ratios, seed=data["split_seed"])


def prepare_model(cfg: dict, split):
    """Train the configured recommender, or load its checkpoint if present."""
    rec = cfg["recommender"]
    checkpoint = rec["checkpoint"]
    if checkpoint and os.path.exists(checkpoint):
        return load_checkpoint(checkpoint, graph=split.train), None
    config = TrainConfig(
        dim=rec["dim"],
        lr=rec["lr"],
        reg=rec["reg"],
        max_epochs=rec["max_epochs"],
        patience=rec["patience"],
        seed=rec["train_seed"],
        val_k=rec["val_k"],
        num_layers=rec["num_layers"],
    )
    if rec["kind"] == "mf":
        model, log = train_mf(split.train, split.val, config)
    elif rec["kind"] == "lightgcn":
        model, log = train_lightgcn(split.train, split.val, config)
    else:
        raise ConfigError(f"unknown recommender kind {rec['kind']!r}")
    if checkpoint:
        save_checkpoint(model, checkpoint)
    return model, log


def sample_eval_users(
    matrix: InteractionMatrix, n: int, seed: int, min_history: int = 1
) -> tuple:
    """Uniform sample without replacement among users with enough history."""
    if min_history < 1:
        raise ConfigError("min_history must be >= 1")
    eligible = [
        u for u in range(matrix.num_users) if len(matrix.items_of(u)) >= min_history
    ]
    if n >= len(eligible):
        if n > len(eligible):
            warnings.warn(
                f"requested {n} eval users but only {len(eligible)} eligible; using all"
            )
        return tuple(eligible)
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(eligible), size=n, replace=False)
    return tuple(sorted(eligible[int(j)] for j in picked))


def _instance_seed(exp: ExperimentConfig, user, k, level, position, ex_index) -> int:
    seq = np.random.SeedSequence(
        (exp.explainer_seed, user, k, _LEVEL_CODE[level], position, ex_index)
    )
    return int(seq.generate_state(1)[0])


def _scope_hops(exp: ExperimentConfig, model) -> int:
    if exp.hops > 0:
        return exp.hops
    return int(getattr(model, "num_layers", 2)) or 2


def _dispatch(name, model, graph, target, hist, pool, scope, cfg, seed, lxr_net):
    """Run one explainer call; returns [(format, payload, wall_s, queries)]."""
    if name == "lime":
        c = cfg["lime"]
        t0 = time.perf_counter()
        mask = explain_lime_rs(
            model,
            target,
            hist,
            LimeConfig(
                n_samples=c["n_samples"],
                keep_prob=c["keep_prob"],
                kernel_width=c["kernel_width"],
                ridge_alpha=c["ridge_alpha"],
                seed=seed,
            ),
        )
        return [("implicit", mask, time.perf_counter() - t0, 0)]
    if name == "shap":
        c = cfg["shap"]
        t0 = time.perf_counter()
        mask = explain_shap(
            model,
            target,
            hist,
            ShapConfig(
                n_permutations=c["n_permutations"],
                exact_limit=c["exact_limit"],
                seed=seed,
            ),
        )
        return [("implicit", mask, time.perf_counter() - t0, 0)]
    if name == "random":
        t0 = time.perf_counter()
        mask = explain_random(target, hist, RandomMaskConfig(seed=seed))
        return [("implicit", mask, time.perf_counter() - t0, 0)]
    if name == "accent":
        c = cfg["accent"]
        t0 = time.perf_counter()
        pert, mask = explain_accent(
            model, target, hist, pool, AccentConfig(max_removals=c["max_removals"])
        )
        wall = time.perf_counter() - t0
        return [
            ("implicit", mask, wall, 0),
            ("explicit", pert, wall, pert.queries_used),
        ]
    if name == "prince":
        c = cfg["prince"]
        t0 = time.perf_counter()
        pert = explain_prince(
            model,
            graph,
            target,
            hist,
            pool,
            PrinceConfig(alpha=c["alpha"], max_removals=c["max_removals"]),
        )
        return [("explicit", pert, time.perf_counter() - t0, pert.queries_used)]
    if name == "lxr":
        c = cfg["lxr"]
        t0 = time.perf_counter()
        mask = explain_lxr(lxr_net, model, target, hist)
        w1 = time.perf_counter() - t0
        t0 = time.perf_counter()
        pert = explain_lxr_explicit(
            lxr_net, model, target, hist, pool, threshold=c["threshold"]
        )
        w2 = time.perf_counter() - t0
        return [
            ("implicit", mask, w1, 0),
            ("explicit", pert, w2, pert.queries_used),
        ]
    if name in ("cfgnn", "cf2", "c2ste"):
        c = cfg["cf_mask"]
        t0 = time.perf_counter()
        pert = explain_cf_mask(
            model,
            target,
            hist,
            pool,
            scope,
            CFMaskConfig(
                steps=c["steps"],
                lr=c["lr"],
                beta=c["beta"],
                margin_frac=c["margin_frac"],
                threshold=c["threshold"],
            ),
            variant=name,
        )
        return [("explicit", pert, time.perf_counter() - t0, pert.queries_used)]
    if name == "unr":
        c = cfg["unr"]
        t0 = time.perf_counter()
        pert = explain_unr(
            model,
            target,
            hist,
            pool,
            scope,
            UNRConfig(
                n_iterations=c["n_iterations"],
                c_uct=c["c_uct"],
                max_size=c["max_size"],
                seed=seed,
            ),
        )
        return [("explicit", pert, time.perf_counter() - t0, pert.queries_used)]
    raise ConfigError(f"unknown explainer {name!r}")


def _implicit_metrics(model, user, pool, mask, target, t_steps) -> dict:
    def rank_of(state, item):
        return model.rank_list(user, state, pool).rank_of(item)

    seq_pos = build_perturbation_sequence(mask, t_steps, "pos")
    seq_neg = build_perturbation_sequence(mask, t_steps, "neg")
    if target.level == "item":
        pos = pos_p_item(rank_of, seq_pos.steps, target.item, target.k)
        neg = neg_p_item(rank_of, seq_neg.steps, target.item, target.k)
    else:
        pos = pos_p_list(rank_of, seq_pos.steps, target.topk, target.k)
        neg = neg_p_list(rank_of, seq_neg.steps, target.topk, target.k)
    return {"pos_p": pos, "neg_p": neg, "gini": gini(mask.scores)}


def _explicit_metrics(model, user, hist, pool, pert, target) -> dict:
    removed = set(pert.removed_items(user))
    kept = tuple(i for i in hist if i not in removed)
    metrics = {}
    if pert.success:
        ranked = model.rank_list_with_removed_edges(user, pert.removed_edges, pool)

        def rank_of(_state, item):
            return ranked.rank_of(item)

        if target.level == "item":
            metrics["pn_s"] = pn_s_item(rank_of, None, target.item, target.k)
        else:
            metrics["pn_s"] = pn_s_list(rank_of, None, target.topk, target.k)
            metrics["pn_r"] = pn_r_list(rank_of, None, target.topk, target.k)
        # sparsity is only meaningful for explanations that worked
        metrics["num_perturb"] = float(num_perturb(hist, kept))
    else:
        metrics["pn_s"] = 0.0
        if target.level == "list":
            metrics["pn_r"] = 0.0
    return metrics


def _dump_record(user, target, position, name, outputs, error=None) -> dict:
    record = {
        "user": int(user),
        "level": target.level,
        "K": int(target.k),
        "method": name,
    }
    if target.level == "item":
        record["target_item"] = int(target.item)
        record["position"] = int(position)
    success = None
    queries = 0
    wall = 0.0
    for fmt, payload, wall_s, q in outputs:
        wall += wall_s
        queries += q
        if fmt == "implicit":
            record["mask"] = [
                [int(i), round(float(s), 6)]
                for i, s in zip(payload.items, payload.scores)
            ]
            if success is None:
                success = True
        else:
            record["removed"] = [[int(u), int(i)] for u, i in payload.removed_edges]
            success = bool(payload.success)
    record["success"] = bool(success) if success is not None else False
    record["queries_used"] = int(queries)
    record["wall_time_ms"] = round(wall * 1000.0, 3)
    if error is not None:
        record["error"] = error
    return record


def _evaluate_user(exp, cfg, model, matrix, lxr_net, user):
    hist = matrix.items_of(user)
    pool = candidate_pool(matrix.num_items, hist)
    records = []
    dumps = []
    hops = _scope_hops(exp, model)
    for k in exp.k_values:
        if pool.size <= k:
            # no ranking possible; one failed instance per expected instance
            for level in exp.levels:
                positions = range(1, k + 1) if level == "item" else (0,)
                for name in exp.explainers:
                    spec = REGISTRY[name]
                    if level not in spec.levels:
                        continue
                    for fmt in sorted(spec.formats):
                        for position in positions:
                            records.append(
                                _Record(user, level, k, position, name, fmt, failed=True)
                            )
            continue
        ranked = model.rank_list(user, hist, pool)
        topk = ranked.head(k)
        for level in exp.levels:
            if level == "item":
                jobs = [
                    (
                        pos + 1,
                        ExplanationTarget(
                            user=user, level="item", k=k, topk=topk, item=topk[pos]
                        ),
                    )
                    for pos in range(k)
                ]
            else:
                jobs = [(0, ExplanationTarget(user=user, level="list", k=k, topk=topk))]
            for position, target in jobs:
                for ex_index, name in enumerate(exp.explainers):
                    spec = REGISTRY[name]
                    if level not in spec.levels:
                        continue
                    seed = _instance_seed(exp, user, k, level, position, ex_index)
                    scope = None
                    if spec.needs_scope:
                        target_items = [target.item] if level == "item" else list(topk)
                        scope = extract_scope(
                            matrix, user, target_items, exp.scope_kind, hops
                        )
                    try:
                        outputs = _dispatch(
                            name, model, matrix, target, hist, pool, scope, cfg,
                            seed, lxr_net,
                        )
                    except (CfxError, ValueError, ArithmeticError) as exc:
                        for fmt in sorted(spec.formats):
                            records.append(
                                _Record(user, level, k, position, name, fmt, failed=True)
                            )
                        dumps.append(
                            _dump_record(user, target, position, name, [], str(exc))
                        )
                        continue
                    for fmt, payload, wall, _queries in outputs:
                        record = _Record(
                            user, level, k, position, name, fmt, wall_time_s=wall
                        )
                        if fmt == "implicit":
                            record.metrics = _implicit_metrics(
                                model, user, pool, payload, target, exp.t_steps
                            )
                        else:
                            record.metrics = _explicit_metrics(
                                model, user, hist, pool, payload, target
                            )
                        records.append(record)
                    dumps.append(_dump_record(user, target, position, name, outputs))
    return records, dumps


def _mean_std(values):
    if not values:
        return float("nan"), float("nan")
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def _metric_order(fmt: str, level: str) -> tuple:
    if fmt == "implicit":
        return _IMPLICIT_METRICS + ("wall_time_s",)
    if level == "list":
        return ("pn_s", "pn_r", "num_perturb", "wall_time_s")
    return ("pn_s", "num_perturb", "wall_time_s")


def _scope_label(exp: ExperimentConfig, name: str) -> str:
    return exp.scope_kind if REGISTRY[name].needs_scope else "full"


def _aggregate(exp: ExperimentConfig, records) -> tuple:
    rows = []
    positional = []
    for name in exp.explainers:
        spec = REGISTRY[name]
        scope = _scope_label(exp, name)
        for level in exp.levels:
            for k in exp.k_values:
                if level not in spec.levels:
                    rows.append(
                        ReportRow(
                            dataset=exp.dataset,
                            recommender=exp.recommender,
                            explainer=name,
                            format=sorted(spec.formats)[0],
                            level=level,
                            k=k,
                            scope=scope,
                            metric="unsupported",
                            mean=float("nan"),
                            std=float("nan"),
                            n=0,
                            failures=0,
                            mean_wall_time_s=float("nan"),
                        )
                    )
                    continue
                for fmt in sorted(spec.formats):
                    group = [
                        r
                        for r in records
                        if r.explainer == name
                        and r.level == level
                        and r.k == k
                        and r.format == fmt
                    ]
                    failures = sum(1 for r in group if r.failed)
                    evaluated = [r for r in group if not r.failed]
                    walls = [r.wall_time_s for r in evaluated]
                    mean_wall = float(np.mean(walls)) if walls else float("nan")
                    for metric in _metric_order(fmt, level):
                        if metric == "wall_time_s":
                            values = walls
                        else:
                            values = [
                                r.metrics[metric]
                                for r in evaluated
                                if metric in r.metrics
                            ]
                        mean, std = _mean_std(values)
                        rows.append(
                            ReportRow(
                                dataset=exp.dataset,
                                recommender=exp.recommender,
                                explainer=name,
                                format=fmt,
                                level=level,
                                k=k,
                                scope=scope,
                                metric=metric,
                                mean=mean,
                                std=std,
                                n=len(values),
                                failures=failures,
                                mean_wall_time_s=mean_wall,
                            )
                        )
                    if level == "item":
                        for position in range(1, k + 1):
                            at_pos = [r for r in evaluated if r.position == position]
                            for metric in _metric_order(fmt, level):
                                if metric == "wall_time_s":
                                    values = [r.wall_time_s for r in at_pos]
                                else:
                                    values = [
                                        r.metrics[metric]
                                        for r in at_pos
                                        if metric in r.metrics
                                    ]
                                mean, std = _mean_std(values)
                                positional.append(
                                    PositionalRow(
                                        dataset=exp.dataset,
                                        recommender=exp.recommender,
                                        explainer=name,
                                        format=fmt,
                                        level=level,
                                        k=k,
                                        scope=scope,
                                        metric=metric,
                                        position=position,
                                        mean=mean,
                                        std=std,
                                        n=len(values),
                                    )
                                )
    return rows, positional


def _pretrain_lxr(cfg, exp, model, matrix, eval_users):
    c = cfg["lxr"]
    taken = set(eval_users)
    eligible = [
        u
        for u in range(matrix.num_users)
        if u not in taken and len(matrix.items_of(u)) >= exp.min_history
    ]
    rng = np.random.default_rng(np.random.SeedSequence((c["seed"], 1)))
    count = min(c["train_users"], len(eligible))
    if count < 1:
        raise ConfigError("no users left to pretrain the mask network on")
    picked = sorted(
        eligible[int(j)] for j in rng.choice(len(eligible), size=count, replace=False)
    )
    histories = [matrix.items_of(u) for u in picked]
    config = LXRConfig(
        hidden_dim=c["hidden_dim"],
        epochs=c["epochs"],
        lr=c["lr"],
        lambda_pos=c["lambda_pos"],
        lambda_neg=c["lambda_neg"],
        l1=c["l1"],
        threshold=c["threshold"],
        seed=c["seed"],
    )
    return train_lxr(model, picked, histories, config), tuple(picked)


def run_experiment(cfg: dict, model, matrix: InteractionMatrix, dataset: str | None = None) -> RunResult:
    """Evaluate every configured explainer over a fixed seeded user sample."""
    exp = ExperimentConfig.from_config(cfg, dataset or dataset_label(cfg))
    users = sample_eval_users(
        matrix, exp.n_eval_users, exp.eval_seed, exp.min_history
    )
    lxr_net = None
    lxr_users = ()
    pretrain_seconds = 0.0
    if "lxr" in exp.explainers:
        lxr_net, lxr_users = _pretrain_lxr(cfg, exp, model, matrix, users)
        pretrain_seconds = lxr_net.pretrain_seconds
    if isinstance(model, LightGCNModel):
        model.propagate()  # warm the clean-propagation cache before fan-out

    threads = max(1, int(os.environ.get("CFX_THREADS", "1") or "1"))

    def one(user):
        return _evaluate_user(exp, cfg, model, matrix, lxr_net, user)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_user = list(pool.map(one, users))
    else:
        per_user = [one(u) for u in users]

    records = [r for chunk, _ in per_user for r in chunk]
    dumps = [d for _, chunk in per_user for d in chunk]
    rows, positional = _aggregate(exp, records)
    return RunResult(
        report=EvalReport(rows=rows),
        positional=positional,
        dumps=dumps,
        eval_users=users,
        pretrain_seconds=pretrain_seconds,
        lxr_train_users=lxr_users,
    )


def scope_ablation(cfg: dict, scopes, model, matrix, dataset: str | None = None) -> RunResult:
    """Same users and seeds, one pass per scope, graph explainers only."""
    graph_explainers = tuple(
        name for name in cfg["eval"]["explainers"] if REGISTRY[name].needs_scope
    )
    if not graph_explainers:
        raise ConfigError("scope ablation needs at least one scope-aware explainer")
    combined = RunResult(
        report=EvalReport(), positional=[], dumps=[], eval_users=()
    )
    for raw in scopes:
        point = copy.deepcopy(cfg)
        point["eval"]["explainers"] = graph_explainers
        point["eval"]["scope"] = raw
        result = run_experiment(point, model, matrix, dataset)
        combined.report.extend(result.report.rows)
        combined.positional.extend(result.positional)
        combined.dumps.extend(result.dumps)
        combined.eval_users = result.eval_users
    return combined


@dataclass(frozen=True)
class GridPoint:
    overrides: dict
    value: float


@dataclass
class GridResult:
    best: GridPoint | None
    points: list


def grid_search(cfg: dict, grid: dict, objective: str, runner) -> GridResult:
    """Exhaustive lattice walk; direction set by the metric, first tie wins.

    ``grid`` maps ``section.key`` strings to candidate value lists;
    ``runner(point_cfg)`` must return report rows for one lattice point.
    """
    if objective not in HIGHER_IS_BETTER:
        raise ConfigError(f"unknown objective metric {objective!r}")
    if not grid:
        raise ConfigError("empty grid")
    higher = HIGHER_IS_BETTER[objective]
    keys = list(grid)
    best = None
    points = []
    for combo in itertools.product(*(grid[key] for key in keys)):
        overrides = dict(zip(keys, combo))
        point_cfg = apply_overrides(
            copy.deepcopy(cfg), [f"{k}={v}" for k, v in overrides.items()]
        )
        rows = runner(point_cfg)
        values = [
            r.mean for r in rows if r.metric == objective and not math.isnan(r.mean)
        ]
        value = float(np.mean(values)) if values else float("nan")
        point = GridPoint(overrides=overrides, value=value)
        points.append(point)
        if math.isnan(value):
            continue
        if best is None or (value > best.value if higher else value < best.value):
            best = point
    return GridResult(best=best, points=points)
