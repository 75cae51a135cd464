"""Benchmarking counterfactual explainers for recommender systems.

The package splits into data loading (``data``), two small recommenders
(``recommenders``), gradient utilities (``diffkit``), the explainer zoo
(``explainers``), perturbation scopes (``scopes``), the metric suite
(``metrics``), and the experiment harness plus CLI (``harness``, ``cli``).
"""

from .data import (
    DatasetSplit,
    InteractionMatrix,
    RawRating,
    load_interactions,
    load_snapshot,
    preprocess_implicit,
    save_snapshot,
    split_holdout,
)
from .errors import (
    CfxError,
    ConfigError,
    EmptyDatasetError,
    NumericError,
    ParseError,
    TrainingError,
)
from .explainers import (
    REGISTRY,
    ExplainerSpec,
    ExplanationTarget,
    ExplicitPerturbation,
    ImplicitMask,
    build_perturbation_sequence,
)
from .harness import (
    EvalReport,
    ReportRow,
    RunResult,
    default_config,
    emit_report,
    grid_search,
    load_config,
    render_figures,
    run_experiment,
    sample_eval_users,
    scope_ablation,
)
from .metrics import (
    HIGHER_IS_BETTER,
    METRIC_IDS,
    gini,
    neg_p_item,
    neg_p_list,
    num_perturb,
    pn_r_list,
    pn_s_item,
    pn_s_list,
    pos_p_item,
    pos_p_list,
)
from .recommenders import RankedList, TrainConfig, candidate_pool, make_recommender
from .scopes import SCOPE_KINDS, PerturbationScope, extract_scope

__version__ = "0.1.0"

__all__ = [
    "CfxError",
    "ConfigError",
    "DatasetSplit",
    "EmptyDatasetError",
    "EvalReport",
    "ExplainerSpec",
    "ExplanationTarget",
    "ExplicitPerturbation",
    "HIGHER_IS_BETTER",
    "ImplicitMask",
    "InteractionMatrix",
    "METRIC_IDS",
    "NumericError",
    "ParseError",
    "PerturbationScope",
    "RankedList",
    "RawRating",
    "REGISTRY",
    "ReportRow",
    "RunResult",
    "SCOPE_KINDS",
    "TrainConfig",
    "TrainingError",
    "build_perturbation_sequence",
    "candidate_pool",
    "default_config",
    "emit_report",
    "extract_scope",
    "gini",
    "grid_search",
    "load_config",
    "load_interactions",
    "load_snapshot",
    "make_recommender",
    "neg_p_item",
    "neg_p_list",
    "num_perturb",
    "pn_r_list",
    "pn_s_item",
    "pn_s_list",
    "pos_p_item",
    "pos_p_list",
    "preprocess_implicit",
    "render_figures",
    "run_experiment",
    "sample_eval_users",
    "save_snapshot",
    "scope_ablation",
    "split_holdout",
    "__version__",
]
