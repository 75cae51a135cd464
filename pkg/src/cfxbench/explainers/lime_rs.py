"""Local surrogate masks: weighted ridge over binary history subsamples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..recommenders import Recommender
from .base import ExplanationTarget, ImplicitMask


@dataclass(frozen=True)
class LimeConfig:
    n_samples: int = 200
    keep_prob: float = 0.8
    kernel_width: float = 0.0  # 0 means the 0.75 * sqrt(n) default
    ridge_alpha: float = 1.0
    seed: int = 0


def fit_weighted_ridge(
    x: np.ndarray, y: np.ndarray, sample_weight: np.ndarray, alpha: float
) -> tuple:
    """Solve the weighted ridge normal equations with an unpenalized intercept.

    Returns (coef, intercept, flagged); a singular system falls back to
    per-feature weighted correlations with ``flagged=True``.
    """
    n, p = x.shape
    xa = np.hstack([x, np.ones((n, 1))])
    w = sample_weight[:, None]
    gram = xa.T @ (w * xa)
    penalty = np.diag(np.concatenate([np.full(p, alpha), [0.0]]))
    rhs = xa.T @ (sample_weight * y)
    try:
        beta = np.linalg.solve(gram + penalty, rhs)
        if not np.all(np.isfinite(beta)):
            raise np.linalg.LinAlgError("non-finite solution")
        return beta[:p], float(beta[p]), False
    except np.linalg.LinAlgError:
        pass
    # Correlation fallback: center under the sample weights and score each
    # feature by its weighted covariance with the response.
    total = sample_weight.sum()
    if total <= 0:
        return np.zeros(p), 0.0, True
    x_mean = (sample_weight[:, None] * x).sum(axis=0) / total
    y_mean = float(sample_weight @ y / total)
    cov = (sample_weight[:, None] * (x - x_mean) * (y - y_mean)[:, None]).sum(axis=0)
    x_var = (sample_weight[:, None] * (x - x_mean) ** 2).sum(axis=0)
    y_var = float(sample_weight @ (y - y_mean) ** 2)
    denom = np.sqrt(np.maximum(x_var * y_var, 1e-30))
    return cov / denom, y_mean, True


def explain_lime_rs(
    model: Recommender,
    target: ExplanationTarget,
    history: Sequence,
    config: LimeConfig = LimeConfig(),
) -> ImplicitMask:
    """Fit a local linear surrogate over keep/drop subsamples of the history.

    The value being regressed is the target item's score (item level) or
    the mean score of the original top-k (list level) under each subsample;
    surrogate coefficients become the mask.
    """
    items = tuple(int(i) for i in history)
    n = len(items)
    if n == 0:
        raise ValueError("cannot explain an empty history")
    rng = np.random.default_rng(config.seed)
    width = config.kernel_width if config.kernel_width > 0 else 0.75 * np.sqrt(n)

    value_items = [target.item] if target.level == "item" else list(target.topk)

    z = rng.random((config.n_samples, n)) < config.keep_prob
    z[0] = True  # anchor the surrogate at the unperturbed instance
    y = np.empty(config.n_samples)
    for row in range(config.n_samples):
        kept = [items[j] for j in range(n) if z[row, j]]
        scores = model.score_items(target.user, kept, value_items)
        y[row] = float(scores.mean())
    hamming = (~z).sum(axis=1).astype(np.float64)
    sample_weight = np.exp(-(hamming**2) / (width**2))

    coef, _, flagged = fit_weighted_ridge(
        z.astype(np.float64), y, sample_weight, config.ridge_alpha
    )
    return ImplicitMask(items=items, scores=coef, flagged=flagged)
