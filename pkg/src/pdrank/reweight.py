"""Iteratively reweighted outer loop and the confidence interpretation.

Starting from unit weights, each round solves the weighted convex
subproblem, then refreshes the per-entry weights as

    w_n = 1 / (softplus(1 - a_n^T x) + epsilon),

so entries whose label agrees with the current scores gain weight (up to
the ceiling 1/epsilon) and contradicted entries lose it.  The final weights
double as a per-comparison confidence measure: values below one flag
observations the solver judges likely erroneous.

The loop stops when weights stabilize between rounds or when no weight is
left inside a band around one (a clean separation of trusted and distrusted
entries), whichever comes first.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import ComparisonDataset, scores_to_ranking, signed_matvec
from .pdhg import DivergenceError, PdhgConfig, pdhg_solve
from .prox import spectral_norm


@dataclass(frozen=True)
class PDRankConfig:
    """Outer-loop parameters; ``inner`` configures each subproblem solve."""

    epsilon: float = 1e-3
    gamma: float = 0.01
    max_outer_iters: int = 30
    stab_tol: float = 1e-3
    band: tuple[float, float] = (0.5, 2.0)
    inner: PdhgConfig = field(default_factory=PdhgConfig)
    keep_history: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.stab_tol <= 0:
            raise ValueError("stab_tol must be positive")
        lo, hi = self.band
        if not lo < 1.0 < hi:
            raise ValueError("band must straddle 1")


@dataclass(frozen=True)
class PDRankResult:
    """Final scores, ranking, and per-entry confidence weights."""

    scores: np.ndarray
    ranking: np.ndarray
    confidence: np.ndarray
    outer_iters: int
    inner_iters: int
    wall_time_s: float
    converged: bool
    weight_history: tuple[np.ndarray, ...] | None = None
    score_history: tuple[np.ndarray, ...] | None = None


def update_weights(x: np.ndarray, dataset: ComparisonDataset,
                   epsilon: float) -> np.ndarray:
    """Per-entry weights 1 / (softplus(1 - a_n^T x) + epsilon), in (0, 1/epsilon]."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    margins = signed_matvec(dataset, np.asarray(x, dtype=float))
    return 1.0 / (np.logaddexp(0.0, 1.0 - margins) + epsilon)


def outer_converged(weight_history: Sequence[np.ndarray],
                    band: tuple[float, float] = (0.5, 2.0),
                    stab_tol: float = 1e-3) -> bool:
    """True once weights stabilized or the band around 1 has emptied.

    Stabilization: max relative change between the last two weight vectors
    below ``stab_tol``.  Separation: no weight strictly inside the open
    interval ``band``.
    """
    if len(weight_history) < 2:
        raise ValueError("need at least two outer weight iterates")
    prev = np.asarray(weight_history[-2], dtype=float)
    cur = np.asarray(weight_history[-1], dtype=float)
    if prev.shape != cur.shape:
        raise ValueError("weight iterates must have equal length")
    stabilized = bool(np.max(np.abs(cur - prev) / prev) < stab_tol)
    lo, hi = band
    separated = not bool(np.any((cur > lo) & (cur < hi)))
    return stabilized or separated


def pd_rank(dataset: ComparisonDataset, cfg: PDRankConfig | None = None,
            x0: np.ndarray | None = None) -> PDRankResult:
    """Full solve: alternate subproblem solves and weight updates.

    Weights start at exactly one; each inner solve warm-starts from the
    previous outer iterate's scores and dual state (rescaled to the new
    weights).  Solver divergence propagates.
    """
    cfg = cfg or PDRankConfig()
    if dataset.num_entries == 0:
        raise ValueError("dataset has no comparisons")
    start = time.perf_counter()
    norm_est = spectral_norm(dataset)
    omega = np.ones(dataset.num_entries)
    weight_history = [omega]
    score_history: list[np.ndarray] = []
    x = x0
    dual = None
    inner_total = 0
    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer_iters + 1):
        try:
            x_new, trace = pdhg_solve(dataset, omega, cfg.gamma, cfg.inner,
                                      x0=x, operator_norm=norm_est, dual0=dual)
        except DivergenceError:
            if dual is None:
                raise
            # a resumed dual can overshoot after a sharp weight move; the
            # detector cannot tell that from a bad step size, so retry cold
            x_new, trace = pdhg_solve(dataset, omega, cfg.gamma, cfg.inner,
                                      x0=x, operator_norm=norm_est, dual0=None)
        x = x_new
        inner_total += trace.n_iters
        omega_new = update_weights(x, dataset, cfg.epsilon)
        # the dual optimum scales entrywise with the weights, so resume the
        # next solve from the rescaled dual; entries whose weight moved by
        # more than 4x restart at zero (a wild rescale starts far from the
        # new solution, and its transient both slows the solve and inflates
        # the relative-cost stopping normalizer)
        ratio = omega_new / omega
        dual = np.where((ratio > 0.25) & (ratio < 4.0),
                        trace.final_dual * ratio, 0.0)
        omega = omega_new
        weight_history.append(omega)
        score_history.append(x)
        if outer_converged(weight_history, cfg.band, cfg.stab_tol):
            converged = True
            break
    return PDRankResult(
        scores=x,
        ranking=scores_to_ranking(x),
        confidence=omega,
        outer_iters=outer,
        inner_iters=inner_total,
        wall_time_s=time.perf_counter() - start,
        converged=converged,
        weight_history=tuple(weight_history) if cfg.keep_history else None,
        score_history=tuple(score_history) if cfg.keep_history else None,
    )


def confidence_report(result: PDRankResult, dataset: ComparisonDataset,
                      true_scores: np.ndarray | None = None) -> list[dict]:
    """Per-entry confidence table: pair, label, count, final weight.

    With ground-truth scores, each row also carries a correctness flag and
    the pair's ratio of correct labels over all its observations (for
    weight-vs-correctness scatter plots).
    """
    if result.confidence.shape != (dataset.num_entries,):
        raise ValueError("result does not match dataset entry count")
    rows = []
    for k in range(dataset.num_entries):
        i = int(dataset.items_i[k])
        j = int(dataset.items_j[k])
        rows.append({
            "item_i": dataset.name_of(i),
            "item_j": dataset.name_of(j),
            "label": int(dataset.labels[k]),
            "count": int(dataset.counts[k]),
            "weight": float(result.confidence[k]),
        })
    if true_scores is None:
        return rows
    t = np.asarray(true_scores, dtype=float)
    true_sign = np.sign(t[dataset.items_i] - t[dataset.items_j])
    correct = dataset.labels == true_sign
    # correct-label ratio per unordered pair, over all its observations
    pair_key = dataset.items_i * dataset.num_items + dataset.items_j
    totals: dict[int, int] = {}
    rights: dict[int, int] = {}
    for k in range(dataset.num_entries):
        key = int(pair_key[k])
        totals[key] = totals.get(key, 0) + int(dataset.counts[k])
        if correct[k]:
            rights[key] = rights.get(key, 0) + int(dataset.counts[k])
    for k, row in enumerate(rows):
        key = int(pair_key[k])
        row["correct"] = bool(correct[k])
        row["correct_ratio"] = rights.get(key, 0) / totals[key]
    return rows


def write_confidence_csv(rows: list[dict], path) -> None:
    import csv

    if not rows:
        raise ValueError("empty confidence report")
    fields = list(rows[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
