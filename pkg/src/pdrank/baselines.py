"""Comparison baselines and verification oracles.

Baselines: Borda count (win ratios) and the Bradley-Terry maximum-likelihood
fit via minorization-maximization updates.  Oracles: exhaustive minimizer of
the 0-1 disagreement count (small M only) and a projected-gradient solver for
the weighted subproblem, used as an independent reference for the splitting
solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import ComparisonDataset, scores_to_ranking, signed_matvec, signed_rmatvec
from .pdhg import subproblem_cost
from .prox import _sigmoid

BRUTE_FORCE_MAX_ITEMS = 8
_BT_PSEUDO_COUNT = 0.1


def borda(dataset: ComparisonDataset) -> tuple[np.ndarray, np.ndarray]:
    """Win-ratio scores: multiplicity-weighted wins over appearances.

    Items never observed score 0.5.  Returns (scores, ranking).
    """
    if dataset.num_entries == 0:
        raise ValueError("dataset has no comparisons")
    m = dataset.num_items
    counts = dataset.counts.astype(float)
    winners = np.where(dataset.labels == 1, dataset.items_i, dataset.items_j)
    losers = np.where(dataset.labels == 1, dataset.items_j, dataset.items_i)
    wins = np.bincount(winners, weights=counts, minlength=m)
    apps = wins + np.bincount(losers, weights=counts, minlength=m)
    scores = np.full(m, 0.5)
    seen = apps > 0
    scores[seen] = wins[seen] / apps[seen]
    return scores, scores_to_ranking(scores)


@dataclass(frozen=True)
class BTScores:
    """Fitted Bradley-Terry strengths, normalized to product one.

    ``regularized`` flags the pseudo-count fallback used for degenerate data
    (disconnected comparison graph, or an item with only wins or only losses).
    """

    strengths: np.ndarray
    regularized: bool
    log_likelihood: float
    iterations: int


def _win_matrix(dataset: ComparisonDataset) -> np.ndarray:
    m = dataset.num_items
    w = np.zeros((m, m))
    i, j = dataset.items_i, dataset.items_j
    winners = np.where(dataset.labels == 1, i, j)
    losers = np.where(dataset.labels == 1, j, i)
    np.add.at(w, (winners, losers), dataset.counts.astype(float))
    return w


def _graph_connected(dataset: ComparisonDataset) -> bool:
    m = dataset.num_items
    adj: list[list[int]] = [[] for _ in range(m)]
    for i, j in zip(dataset.items_i, dataset.items_j):
        adj[int(i)].append(int(j))
        adj[int(j)].append(int(i))
    seen = np.zeros(m, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for nb in adj[u]:
            if not seen[nb]:
                seen[nb] = True
                stack.append(nb)
    return bool(seen.all())


def _bt_log_likelihood(strengths: np.ndarray, wins: np.ndarray) -> float:
    m = strengths.size
    si = strengths[:, None]
    sj = strengths[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.log(si) - np.log(si + sj)
    logp[np.arange(m), np.arange(m)] = 0.0
    return float((wins * logp).sum())


def bt_fit(dataset: ComparisonDataset, tol: float = 1e-8,
           max_iters: int = 1000) -> tuple[BTScores, np.ndarray]:
    """Bradley-Terry MLE by MM updates; stops on relative log-likelihood change.

    Degenerate data triggers a pseudo-count of 0.1 added to both directions
    of every item pair, flagged on the result.
    """
    if dataset.num_entries == 0:
        raise ValueError("dataset has no comparisons")
    m = dataset.num_items
    wins = _win_matrix(dataset)
    won = wins.sum(axis=1)
    lost = wins.sum(axis=0)
    observed = (won + lost) > 0
    degenerate = (m > 1 and not _graph_connected(dataset)) or bool(
        np.any(observed & ((won == 0) | (lost == 0))))
    if degenerate:
        wins = wins + _BT_PSEUDO_COUNT
        np.fill_diagonal(wins, 0.0)
    totals = wins + wins.T  # n_ij: comparisons between i and j
    won = wins.sum(axis=1)
    strengths = np.ones(m)
    ll = _bt_log_likelihood(strengths, wins)
    iters = 0
    for iters in range(1, max_iters + 1):
        denom = (totals / (strengths[:, None] + strengths[None, :])).sum(axis=1)
        strengths = won / denom
        strengths /= np.exp(np.mean(np.log(strengths)))
        ll_new = _bt_log_likelihood(strengths, wins)
        if abs(ll_new - ll) <= tol * (1.0 + abs(ll)):
            ll = ll_new
            break
        ll = ll_new
    result = BTScores(strengths=strengths, regularized=degenerate,
                      log_likelihood=ll, iterations=iters)
    return result, scores_to_ranking(strengths)


def zero_one_cost(order: np.ndarray, dataset: ComparisonDataset) -> int:
    """Multiplicity-weighted count of entries whose label the ordering violates."""
    order = np.asarray(order, dtype=np.int64)
    pos = np.empty(dataset.num_items, dtype=np.int64)
    pos[order] = np.arange(dataset.num_items)
    above = pos[dataset.items_i] < pos[dataset.items_j]
    violated = above != (dataset.labels == 1)
    return int(dataset.counts[violated].sum())


def brute_force_01(dataset: ComparisonDataset) -> tuple[np.ndarray, int]:
    """Exact 0-1 minimizer by enumerating all M! orderings (M <= 8).

    Ties between optimal orderings resolve to the lexicographically first
    permutation.  Returns (ordering best-first, optimal violation count).
    """
    m = dataset.num_items
    if m > BRUTE_FORCE_MAX_ITEMS:
        raise ValueError(f"brute force capped at M={BRUTE_FORCE_MAX_ITEMS}, got {m}")
    if dataset.num_entries == 0:
        raise ValueError("dataset has no comparisons")
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    pos = np.argsort(perms, axis=1)
    violations = np.zeros(len(perms), dtype=np.int64)
    for i, j, y, c in zip(dataset.items_i, dataset.items_j,
                          dataset.labels, dataset.counts):
        above = pos[:, i] < pos[:, j]
        violations += np.where(above != (y == 1), int(c), 0)
    best = int(np.argmin(violations))  # first minimum = lexicographic tie-break
    return perms[best].copy(), int(violations[best])


def projected_gradient_subproblem(dataset: ComparisonDataset, weights: np.ndarray,
                                  gamma: float, tol: float = 1e-6,
                                  max_iters: int = 50000,
                                  x0: np.ndarray | None = None) -> np.ndarray:
    """Independent subproblem reference: projected gradient with backtracking.

    Gradient descent on the weighted softplus cost plus ridge, projected onto
    the zero-mean hyperplane each step, until the projected-gradient norm
    drops below ``tol``.  Deliberately shares no machinery with the splitting
    solver beyond the cost definition.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (dataset.num_entries,):
        raise ValueError("weights length must equal the number of dataset entries")
    w_eff = weights * dataset.counts
    x = np.zeros(dataset.num_items) if x0 is None else np.asarray(x0, float).copy()
    x -= x.mean()
    fx = subproblem_cost(x, dataset, weights, gamma)
    step = 1.0
    for _ in range(max_iters):
        margins = signed_matvec(dataset, x)
        grad = -signed_rmatvec(dataset, w_eff * _sigmoid(1.0 - margins)) + 2.0 * gamma * x
        grad -= grad.mean()
        gnorm2 = float(np.dot(grad, grad))
        if np.sqrt(gnorm2) <= tol:
            return x
        step = min(step * 2.0, 1e8)
        while True:
            cand = x - step * grad
            f_cand = subproblem_cost(cand, dataset, weights, gamma)
            if f_cand <= fx - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                raise RuntimeError("line search failed (non-descent direction?)")
        x, fx = cand, f_cand
    raise RuntimeError(f"projected gradient did not reach tol={tol} "
                       f"within {max_iters} iterations")
