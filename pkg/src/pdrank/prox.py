"""Proximal kernels and the operator-norm estimate for the splitting solver.

Two operators are needed:

* ``prox_ridge_centered`` -- prox of the ridge term plus the zero-mean
  (anchor) constraint: shrink by 1/(1 + 2*gamma*tau), then subtract the mean.

* ``dual_softplus_prox`` -- prox of the convex conjugate of the separable
  weighted cost sum_n w_n * softplus(1 - t_n), evaluated through the Moreau
  identity.  Each component reduces to the scalar root equation

      -sigmoid(1 - u) + (u - x0) / w = 0,

  whose root lies strictly inside (x0, x0 + w) because the sigmoid term is
  in (-1, 0).  The root is found by safeguarded Newton with a bisection
  fallback; the solve is parameterized by the gap d = u - x0 so tiny weights
  do not lose precision to cancellation.

All kernels are pure, componentwise where applicable, and deterministic.
"""

from __future__ import annotations

import numpy as np

from .data import ComparisonDataset, signed_matvec, signed_rmatvec

ROOT_TOL = 1e-12
_ROOT_MAX_ITERS = 200


def _sigmoid(t: np.ndarray) -> np.ndarray:
    # stable logistic: exp only ever sees nonpositive arguments
    t = np.asarray(t, dtype=float)
    z = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0, z) / (1.0 + z)


def _sigmoid_inplace(t: np.ndarray) -> np.ndarray:
    # logistic via tanh in one ufunc pass; agrees with _sigmoid to 1 ulp
    t *= 0.5
    np.tanh(t, out=t)
    t += 1.0
    t *= 0.5
    return t


def prox_ridge_centered(x: np.ndarray, gamma: float, tau: float = 1.0) -> np.ndarray:
    """Prox of tau * (gamma*||u||^2 + zero-mean indicator) at x.

    Shrinks by 1/(1 + 2*gamma*tau) and projects onto the zero-mean
    hyperplane; the output has zero mean to machine precision.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if tau <= 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains NaN or infinite entries")
    xp = x / (1.0 + 2.0 * gamma * tau)
    return xp - xp.mean()


def _gap_root(x0: np.ndarray, w: np.ndarray, tol: float,
              d0: np.ndarray | None = None) -> np.ndarray:
    """Front end: fast clamped-Newton sweeps for warm-started lanes, with the
    safeguarded bracketed solver as the backstop for whatever remains.

    Cold calls (no seed) go straight to the safeguarded path.  Warm calls
    run three plain Newton sweeps clamped to [0, w] -- near the root Newton
    contracts, so seeded lanes land within tolerance -- then a single
    residual check routes stragglers (far seeds, oscillation-prone flat
    tails) into the safeguarded path.  Results are per-lane deterministic
    either way.
    """
    if d0 is None:
        return _gap_root_serial(x0, w, tol, None)
    n = x0.size
    rw = 1.0 / w
    a0 = np.empty(n)  # half-argument (1 - x0)/2 for the tanh sigmoid
    np.subtract(1.0, x0, out=a0)
    a0 *= 0.5
    d = np.clip(d0, 0.0, w)
    s, r, t = np.empty(n), np.empty(n), np.empty(n)
    for sweep in range(4):
        # s = sigmoid(1 - x0 - d) = 0.5*(1 + tanh(a0 - d/2))
        np.multiply(d, -0.5, out=s)
        s += a0
        np.tanh(s, out=s)
        s += 1.0
        s *= 0.5
        np.multiply(d, rw, out=r)
        r -= s  # residual
        if sweep == 3:
            break
        # Newton: d -= r / (1/w + s*(1-s)), clamped back into [0, w]
        np.subtract(1.0, s, out=t)
        t *= s
        t += rw
        r /= t
        d -= r
        np.clip(d, 0.0, w, out=d)
    np.abs(r, out=t)
    bad = np.flatnonzero(t > tol)
    if bad.size == 0:
        return d
    d[bad] = _gap_root_serial(x0[bad], w[bad], tol, d0=d[bad])
    return d


def _gap_root_serial(x0: np.ndarray, w: np.ndarray, tol: float,
                     d0: np.ndarray | None = None) -> np.ndarray:
    """Solve d/w - sigmoid(1 - x0 - d) = 0 for d in (0, w), elementwise.

    d is the gap u - x0 of the scalar prox root.  The residual is strictly
    increasing in d, negative at 0 and positive at w, so the bracket is
    guaranteed.  A Newton step is accepted only if it stays inside the
    bracket and moves at most half its width (large weights make the
    residual flat on both sides of the root, where bare Newton oscillates);
    otherwise the iterate bisects.  ``d0`` seeds lanes with a previous root
    (out-of-bracket seeds fall back to the default start).

    Hot path notes: masked numpy ops cost an order of magnitude more than
    plain passes here, so bracket and fallback selections are arithmetic
    blends with 0/1 factors, buffers are preallocated, and finished lanes
    are shed once only a quarter remain.
    """
    n = x0.size
    out = np.empty(n)
    if d0 is not None:
        ok = (d0 > 0.0) & (d0 < w)
        if ok.all():
            np.copyto(out, d0)
        else:
            np.subtract(1.0, x0, out=out)
            _sigmoid_inplace(out)
            out *= w
            np.copyto(out, d0, where=ok)
    else:
        # first fixed-point iterate, strictly interior
        np.subtract(1.0, x0, out=out)
        _sigmoid_inplace(out)
        out *= w
    idx: np.ndarray | None = None  # None while every lane is active
    xa, wa = x0, w
    rwa = None  # 1/w, built lazily
    da = out.copy()
    lo = np.zeros(n)
    hi = w.copy()
    sbuf, rbuf, tbuf, cbuf, bbuf = (np.empty(n) for _ in range(5))
    for _ in range(_ROOT_MAX_ITERS):
        k = da.size
        s, r, t, c, blend = sbuf[:k], rbuf[:k], tbuf[:k], cbuf[:k], bbuf[:k]
        np.subtract(1.0, xa, out=s)
        s -= da
        _sigmoid_inplace(s)
        np.divide(da, wa, out=r)
        r -= s
        np.abs(r, out=t)
        undone = t > tol
        n_undone = int(undone.sum())
        if n_undone == 0:
            if idx is None:
                np.copyto(out, da)
            else:
                out[idx] = da
            return out
        if n_undone <= k // 2:  # shed finished lanes
            if idx is None:
                idx = np.arange(n)
            keep = np.flatnonzero(undone)
            done = np.flatnonzero(~undone)
            out[idx[done]] = da[done]
            idx, xa, wa, da, lo, hi = (a[keep] for a in
                                       (idx, xa, wa, da, lo, hi))
            r, s = r[keep], s[keep]
            rwa = 1.0 / wa
            k = da.size
            t, c, blend = tbuf[:k], cbuf[:k], bbuf[:k]
        # bracket updates as arithmetic blends: lo += (da-lo)*[r<0], etc.
        np.subtract(da, lo, out=t)
        t *= r < 0.0
        lo += t
        np.subtract(da, hi, out=t)
        t *= r > 0.0
        hi += t
        # Newton step: r / (1/w + s*(1-s)), written into r
        np.subtract(1.0, s, out=t)
        t *= s
        if rwa is None:
            rwa = 1.0 / wa
        t += rwa
        r /= t
        np.subtract(da, r, out=c)
        # fallback to the midpoint where the step leaves the trust region
        np.subtract(hi, lo, out=t)
        t *= 0.5
        np.abs(r, out=blend)
        bad = (c <= lo) | (c >= hi) | (blend > t) | ~np.isfinite(c)
        np.add(lo, hi, out=t)
        t *= 0.5
        t -= c
        t *= bad
        c += t
        np.copyto(da, c)
    raise RuntimeError("scalar prox root solve did not converge "
                       "(kernel bug: the bracketed residual must vanish)")


def softplus_prox(x0, weight, tol: float = ROOT_TOL):
    """Prox of u -> weight * softplus(1 - u) at x0 (scalar or elementwise).

    Returns the root u of -sigmoid(1 - u) + (u - x0)/weight = 0, which lies
    in (x0, x0 + weight); |residual| <= tol on exit.
    """
    x0a = np.asarray(x0, dtype=float)
    wa = np.broadcast_to(np.asarray(weight, dtype=float), x0a.shape).copy()
    if np.any(wa <= 0):
        raise ValueError("weight must be strictly positive")
    if not np.all(np.isfinite(x0a)):
        raise ValueError("prox point must be finite")
    d = _gap_root(np.atleast_1d(x0a), np.atleast_1d(wa), tol)
    u = np.atleast_1d(x0a) + d
    if np.isscalar(x0) or x0a.ndim == 0:
        return float(u[0])
    return u


def dual_softplus_prox(v: np.ndarray, weights: np.ndarray, sigma: float,
                       tol: float = ROOT_TOL,
                       gap_init: np.ndarray | None = None) -> np.ndarray:
    """Prox of sigma * g* at v, where g(t) = sum_n w_n * softplus(1 - t_n).

    Uses the Moreau identity prox_{sigma g*}(v) = v - sigma * prox_{g/sigma}(v/sigma);
    each component is the scalar root above with x0 = v_n/sigma, w = w_n/sigma.
    Weights must be strictly positive (multiplicity already folded in).
    ``gap_init`` optionally seeds the root solve with gaps recovered from a
    previous call (the output equals ``-sigma * gap``).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    v = np.asarray(v, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.shape != v.shape:
        raise ValueError("weights must match the dual vector length")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    d = _gap_root(v / sigma, w / sigma, tol, d0=gap_init)
    return -sigma * d


def spectral_norm(dataset: ComparisonDataset, tol: float = 1e-6,
                  max_iters: int = 200) -> float:
    """Operator norm of the signed comparison matrix, counting multiplicity.

    Power iteration on the multiplicity-weighted Gram matrix
    sum_n count_n * a_n a_n^T until the relative eigenvalue change drops
    below ``tol``.  The result is an estimate; consumers apply their own
    safety margin when deriving step sizes.
    """
    if dataset.num_entries == 0:
        raise ValueError("dataset has no comparisons")
    counts = dataset.counts.astype(float)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dataset.num_items)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = signed_rmatvec(dataset, counts * signed_matvec(dataset, v))
        lam_new = float(np.linalg.norm(w))
        if lam_new == 0.0:
            return 0.0
        v = w / lam_new
        if abs(lam_new - lam) <= tol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(lam))
