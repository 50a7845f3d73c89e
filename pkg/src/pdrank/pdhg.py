"""Primal-dual splitting solver for one weighted convex subproblem.

Minimizes, over zero-mean x,

    sum_n w_n * count_n * softplus(1 - a_n^T x) + gamma * ||x||^2

by alternating the two proximal steps

    p = prox_ridge_centered(x - tau * A^T v)
    q = dual_softplus_prox(v + sigma * A (2p - x))
    (x, v) += relaxation * ((p, q) - (x, v))

where A has one row a_n per unique dataset entry.  Products with A never
materialize a matrix: they are two-nonzero gather/scatter passes, so the
per-iteration cost is O(N + M).  Convergence requires
tau * sigma <= 1 / ||A||^2; the contract is asserted before iterating.

The stopping rule follows the relative-cost criterion: stop once the cost
change between consecutive evaluated iterates falls below ``eps_in`` times
the first observed change.  Cost is evaluated every iteration at desk scale
and every 10th iteration once the dataset exceeds a million observations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import ComparisonDataset, signed_matvec
from .prox import (ROOT_TOL, _gap_root_serial, prox_ridge_centered,
                   spectral_norm)

_COST_THIN_THRESHOLD = 1_000_000
_DIVERGENCE_FACTOR = 10.0


class DivergenceError(RuntimeError):
    """Cost blow-up detected: the step-size contract was violated."""


@dataclass(frozen=True)
class PdhgConfig:
    """Step sizes and stopping parameters for one subproblem solve.

    With ``tau``/``sigma`` unset, both default to 0.99 / (1.01 * ||A||),
    which satisfies the step-size product bound with margin.  ``relaxation``
    must lie in (0, 2); 1.0 disables over-relaxation.
    """

    tau: float | None = None
    sigma: float | None = None
    relaxation: float = 1.0
    eps_in: float = 0.01
    max_iters: int = 20000

    def __post_init__(self):
        if (self.tau is None) != (self.sigma is None):
            raise ValueError("set both tau and sigma, or neither")
        if self.tau is not None and (self.tau <= 0 or self.sigma <= 0):
            raise ValueError("step sizes must be positive")
        if not 0.0 < self.relaxation < 2.0:
            raise ValueError("relaxation must lie in (0, 2)")
        if self.eps_in <= 0:
            raise ValueError("eps_in must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class PdhgTrace:
    """Evaluated cost trajectory of one solve (index 0 is the start point).

    ``final_dual`` is resume state: feeding it back as ``dual0`` warm-starts
    a related solve.
    """

    iterations: np.ndarray
    costs: np.ndarray
    elapsed_s: np.ndarray
    n_iters: int
    converged: bool
    final_dual: np.ndarray | None = None

    def rows(self):
        """(iteration, cost, wall_time_s) rows for CSV export."""
        for it, c, t in zip(self.iterations, self.costs, self.elapsed_s):
            yield int(it), float(c), float(t)


def _softplus(t: np.ndarray) -> np.ndarray:
    # log(1 + e^t) = max(t, 0) + log(1 + e^{-|t|}), overflow-safe; np.log on
    # 1+z (z in (0,1]) is vectorized where log1p is not, and the sub-ulp
    # tail loss is irrelevant to cost sums
    out = np.abs(t)
    neg = np.exp(-out)
    neg += 1.0
    np.log(neg, out=neg)
    np.maximum(t, 0.0, out=out)
    out += neg
    return out


def subproblem_cost(x: np.ndarray, dataset: ComparisonDataset,
                    weights: np.ndarray, gamma: float) -> float:
    """Weighted surrogate cost: sum_n w_n*count_n*softplus(1 - a_n^T x) + gamma*||x||^2."""
    x = np.asarray(x, dtype=float)
    margins = signed_matvec(dataset, x)
    np.subtract(1.0, margins, out=margins)
    terms = _softplus(margins)
    return float(np.dot(weights * dataset.counts, terms) + gamma * np.dot(x, x))


def _resolve_steps(cfg: PdhgConfig, operator_norm: float) -> tuple[float, float]:
    if cfg.tau is None:
        step = 0.99 / (1.01 * operator_norm) if operator_norm > 0 else 1.0
        return step, step
    if cfg.tau * cfg.sigma * operator_norm**2 > 1.0 + 1e-9:
        raise ValueError(
            f"step sizes violate tau*sigma <= 1/||A||^2 "
            f"(tau*sigma*||A||^2 = {cfg.tau * cfg.sigma * operator_norm**2:.6g})")
    return cfg.tau, cfg.sigma


def pdhg_solve(dataset: ComparisonDataset, weights: np.ndarray, gamma: float,
               cfg: PdhgConfig | None = None, x0: np.ndarray | None = None,
               operator_norm: float | None = None,
               dual0: np.ndarray | None = None,
               ) -> tuple[np.ndarray, PdhgTrace]:
    """Solve one weighted subproblem; returns (scores, trace).

    ``weights`` has one entry per unique dataset entry; multiplicity is
    applied internally.  ``x0`` defaults to the zero vector and is centered
    on entry.  ``operator_norm`` lets callers reuse a precomputed estimate;
    ``dual0`` resumes from a previous solve's dual state (any start is
    admissible, the subproblem minimizer is unique).  Raises
    :class:`DivergenceError` if the cost grows past 10x its running minimum
    and above its initial value.
    """
    cfg = cfg or PdhgConfig()
    if dataset.num_entries == 0:
        raise ValueError("dataset has no comparisons")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (dataset.num_entries,):
        raise ValueError("weights length must equal the number of dataset entries")
    if np.any(weights <= 0):
        raise ValueError("weights must be strictly positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")

    norm_est = spectral_norm(dataset) if operator_norm is None else float(operator_norm)
    tau, sigma = _resolve_steps(cfg, norm_est)
    lam = cfg.relaxation
    w_eff = weights * dataset.counts

    if x0 is None:
        x = np.zeros(dataset.num_items)
    else:
        x = np.asarray(x0, dtype=float).copy()
        if x.shape != (dataset.num_items,):
            raise ValueError("x0 length must equal num_items")
        if not np.all(np.isfinite(x)):
            raise ValueError("x0 must be finite")
        x -= x.mean()
    if dual0 is None:
        v = np.zeros(dataset.num_entries)
    else:
        v = np.asarray(dual0, dtype=float).copy()
        if v.shape != (dataset.num_entries,) or not np.all(np.isfinite(v)):
            raise ValueError("dual0 must be a finite vector of entry length")

    stride = 10 if dataset.total_comparisons > _COST_THIN_THRESHOLD else 1
    start = time.perf_counter()

    # Per-solve workspace: the loop below never allocates entry-sized arrays
    # (fresh megabyte allocations fault in pages and evict cache lines, which
    # dominates wall time at large N).
    n_entries = dataset.num_entries
    ii, jj = dataset.items_i, dataset.items_j
    yf = dataset.labels.astype(float)
    wc = w_eff  # weight * count, used by the cost
    wt = w_eff / sigma  # dual prox w-tilde
    rwt = sigma / w_eff
    d = np.empty(n_entries)  # root gaps, carried across iterations
    din = np.empty(n_entries)  # dual prox input
    din_prev = np.empty(n_entries)
    a0 = np.empty(n_entries)  # tanh half-argument of the sigmoid
    sb, rb, tb, gb = (np.empty(n_entries) for _ in range(4))
    m = dataset.num_items

    def margins_into(z: np.ndarray, out: np.ndarray) -> np.ndarray:
        # indices are validated at dataset construction; clip mode skips the
        # per-element bounds check without changing any result
        np.take(z, ii, out=out, mode="clip")
        np.take(z, jj, out=tb, mode="clip")
        out -= tb
        out *= yf
        return out

    def cost_at(z: np.ndarray) -> float:
        margins_into(z, gb)
        np.subtract(1.0, gb, out=gb)
        np.abs(gb, out=sb)
        np.negative(sb, out=sb)
        np.exp(sb, out=sb)
        np.add(sb, 1.0, out=sb)
        np.log(sb, out=sb)
        np.maximum(gb, 0.0, out=gb)
        np.add(gb, sb, out=gb)
        return float(np.dot(wc, gb) + gamma * np.dot(z, z))

    def sigmoid_of_gap() -> None:
        # sb = sigmoid(1 - din/sigma - d) via tanh on a0 - d/2
        np.multiply(d, -0.5, out=sb)
        np.add(sb, a0, out=sb)
        np.tanh(sb, out=sb)
        np.add(sb, 1.0, out=sb)
        np.multiply(sb, 0.5, out=sb)

    cost = cost_at(x)
    eval_iters = [0]
    costs = [cost]
    times = [0.0]
    cost_prev = cost
    cost_min = cost
    cost_init = cost
    first_change: float | None = None
    flat_streak = 0
    converged = False
    n_iters = 0
    have_gap = False
    relaxed = lam != 1.0

    for it in range(1, cfg.max_iters + 1):
        # p = prox_{tau f}(x - tau * A^T v)
        np.multiply(yf, v, out=tb)
        atv = np.bincount(ii, weights=tb, minlength=m)
        atv -= np.bincount(jj, weights=tb, minlength=m)
        p = prox_ridge_centered(x - tau * atv, gamma, tau)
        # dual prox input: v + sigma * A(2p - x)
        margins_into(2.0 * p - x, gb)
        np.multiply(gb, sigma, out=din)
        din += v
        np.multiply(din, -0.5 / sigma, out=a0)
        a0 += 0.5
        if not have_gap:
            d[:] = _gap_root_serial(din / sigma, wt, ROOT_TOL)
            have_gap = True
        else:
            # first-order seed: d(gap)/d(prox point) = -frac/(rwt + frac)
            np.multiply(d, rwt, out=sb)
            np.subtract(1.0, sb, out=tb)
            tb *= sb
            np.add(tb, rwt, out=rb)
            tb /= rb
            tb *= 1.0 / sigma
            np.subtract(din, din_prev, out=rb)
            rb *= tb
            d -= rb
            np.clip(d, 0.0, wt, out=d)
            swept_again = False
            while True:  # clamped Newton sweeps until certified
                for _ in range(2):
                    sigmoid_of_gap()
                    np.multiply(d, rwt, out=rb)
                    rb -= sb
                    np.subtract(1.0, sb, out=tb)
                    tb *= sb
                    tb += rwt
                    rb /= tb
                    d -= rb
                    np.clip(d, 0.0, wt, out=d)
                sigmoid_of_gap()  # certify |residual| <= tol
                np.multiply(d, rwt, out=rb)
                rb -= sb
                np.abs(rb, out=tb)
                bad = np.flatnonzero(tb > ROOT_TOL)
                if bad.size == 0:
                    break
                if not swept_again and bad.size > n_entries // 8:
                    # early iterations move far from the seed: cheaper to
                    # sweep everyone again than to bracket a large subset
                    swept_again = True
                    continue
                d[bad] = _gap_root_serial(din[bad] / sigma, wt[bad], ROOT_TOL,
                                          d0=d[bad])
                break
        din, din_prev = din_prev, din
        # x/v updates; q = -sigma * d by the Moreau identity
        if relaxed:
            x += lam * (p - x)
            np.multiply(d, -sigma, out=sb)
            sb -= v
            sb *= lam
            v += sb
        else:
            x = p
            np.multiply(d, -sigma, out=v)
        n_iters = it
        if it % stride != 0 and it != cfg.max_iters:
            continue
        cost = cost_at(x)
        eval_iters.append(it)
        costs.append(cost)
        times.append(time.perf_counter() - start)
        if not np.isfinite(cost):
            raise DivergenceError("subproblem cost became non-finite")
        cost_min = min(cost_min, cost)
        if cost > _DIVERGENCE_FACTOR * cost_min and cost > cost_init:
            raise DivergenceError(
                f"cost grew to {cost:.6g} from minimum {cost_min:.6g}; "
                "step sizes violate the convergence contract")
        change = abs(cost - cost_prev)
        cost_prev = cost
        if first_change is None:
            # a cold start (x0 = 0, v = 0) leaves the primal unchanged for one
            # step, so the normalizer is the first nonzero change
            if change > 0.0:
                first_change = change
            else:
                flat_streak += 1
                if flat_streak >= 50:
                    converged = True
                    break
        elif change < cfg.eps_in * first_change:
            converged = True
            break

    trace = PdhgTrace(iterations=np.array(eval_iters, dtype=np.int64),
                      costs=np.array(costs), elapsed_s=np.array(times),
                      n_iters=n_iters, converged=converged, final_dual=v.copy())
    return x, trace
