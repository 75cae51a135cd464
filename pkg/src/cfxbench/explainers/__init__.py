"""Explainer registry and shared types."""

from __future__ import annotations

from dataclasses import dataclass

from .accent import AccentConfig, explain_accent
from .base import (
    ExplanationTarget,
    ExplicitPerturbation,
    ImplicitMask,
    PerturbationSequence,
    build_perturbation_sequence,
    removal_counts,
)
from .cf_mask import CFMaskConfig, explain_cf_mask
from .lime_rs import LimeConfig, explain_lime_rs, fit_weighted_ridge
from .lxr import (
    LXRConfig,
    LXRNetwork,
    explain_lxr,
    explain_lxr_explicit,
    lxr_removal_set,
    train_lxr,
)
from .prince import PrinceConfig, explain_prince, personalized_pagerank
from .random_mask import RandomMaskConfig, explain_random
from .shap import ShapConfig, explain_shap
from .unr import UNRConfig, explain_unr


@dataclass(frozen=True)
class ExplainerSpec:
    """What an explainer can do; the harness validates requests against it."""

    name: str
    formats: frozenset  # subset of {"implicit", "explicit"}
    levels: frozenset  # subset of {"item", "list"}
    needs_scope: bool = False
    needs_pretrain: bool = False


REGISTRY = {
    spec.name: spec
    for spec in (
        ExplainerSpec("lime", frozenset({"implicit"}), frozenset({"item", "list"})),
        ExplainerSpec("shap", frozenset({"implicit"}), frozenset({"item", "list"})),
        ExplainerSpec("random", frozenset({"implicit"}), frozenset({"item", "list"})),
        ExplainerSpec(
            "accent", frozenset({"implicit", "explicit"}), frozenset({"item"})
        ),
        ExplainerSpec("prince", frozenset({"explicit"}), frozenset({"item"})),
        ExplainerSpec(
            "lxr",
            frozenset({"implicit", "explicit"}),
            frozenset({"item", "list"}),
            needs_pretrain=True,
        ),
        ExplainerSpec(
            "cfgnn",
            frozenset({"explicit"}),
            frozenset({"item", "list"}),
            needs_scope=True,
        ),
        ExplainerSpec(
            "cf2",
            frozenset({"explicit"}),
            frozenset({"item", "list"}),
            needs_scope=True,
        ),
        ExplainerSpec(
            "c2ste",
            frozenset({"explicit"}),
            frozenset({"item", "list"}),
            needs_scope=True,
        ),
        ExplainerSpec(
            "unr",
            frozenset({"explicit"}),
            frozenset({"item", "list"}),
            needs_scope=True,
        ),
    )
}

__all__ = [
    "ExplanationTarget",
    "ExplicitPerturbation",
    "ImplicitMask",
    "PerturbationSequence",
    "build_perturbation_sequence",
    "removal_counts",
    "ExplainerSpec",
    "REGISTRY",
    "LimeConfig",
    "explain_lime_rs",
    "fit_weighted_ridge",
    "ShapConfig",
    "explain_shap",
    "PrinceConfig",
    "explain_prince",
    "personalized_pagerank",
    "AccentConfig",
    "explain_accent",
    "LXRConfig",
    "LXRNetwork",
    "train_lxr",
    "explain_lxr",
    "explain_lxr_explicit",
    "lxr_removal_set",
    "CFMaskConfig",
    "explain_cf_mask",
    "UNRConfig",
    "explain_unr",
    "RandomMaskConfig",
    "explain_random",
]
