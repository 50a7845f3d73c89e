"""Synthetic comparison generators: toggle-noise and Bradley-Terry protocols.

Both generators draw pairs uniformly at random with replacement from all
m(m-1)/2 unordered pairs and are fully deterministic given (config, seed).
Randomness comes from numpy's ``default_rng`` (PCG64); every draw order is
fixed, so identical configs produce byte-identical datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ComparisonDataset, _aggregate, scores_to_ranking


@dataclass(frozen=True)
class GroundTruth:
    """True latent scores and the ranking they induce."""

    true_scores: np.ndarray
    true_ranking: np.ndarray

    @classmethod
    def from_scores(cls, scores: np.ndarray) -> "GroundTruth":
        s = np.asarray(scores, dtype=float)
        return cls(true_scores=s, true_ranking=scores_to_ranking(s))


@dataclass(frozen=True)
class ToggleNoiseConfig:
    """Score-independent label-flip model.

    ``delta`` is the flip probability, either a single value for every
    comparison or a per-comparison vector of length N.  Exactly one of
    ``num_comparisons`` and ``standard_trials`` must be given; one standard
    trial equals m(m-1)/2 comparisons.
    """

    num_items: int
    delta: float | np.ndarray = 0.1
    num_comparisons: int | None = None
    standard_trials: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_items < 2:
            raise ValueError("need at least 2 items")
        if (self.num_comparisons is None) == (self.standard_trials is None):
            raise ValueError("give exactly one of num_comparisons/standard_trials")
        n = self.resolved_n
        if n < 1:
            raise ValueError("need at least 1 comparison")
        d = np.asarray(self.delta, dtype=float)
        if d.ndim not in (0, 1):
            raise ValueError("delta must be a scalar or a per-comparison vector")
        if d.ndim == 1 and d.size != n:
            raise ValueError(f"delta vector length {d.size} != N={n}")
        if np.any(d < 0) or np.any(d >= 0.5):
            raise ValueError("delta must lie in [0, 0.5)")

    @property
    def resolved_n(self) -> int:
        if self.num_comparisons is not None:
            return int(self.num_comparisons)
        return standard_trials_to_n(self.num_items, self.standard_trials)


@dataclass(frozen=True)
class BTGenConfig:
    """Bradley-Terry generator: noise level is driven by the latent scores.

    Latent strengths are drawn uniformly in [score_low, score_high]; pair
    (i, j) is labeled +1 with probability s_i / (s_i + s_j).  A degenerate
    range (low == high) makes every label a fair coin flip.
    """

    num_items: int
    score_low: float = 1.0
    score_high: float = 5.0
    num_comparisons: int | None = None
    standard_trials: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_items < 2:
            raise ValueError("need at least 2 items")
        if not self.score_low <= self.score_high:
            raise ValueError("score_low must not exceed score_high")
        if self.score_low <= 0:
            raise ValueError("latent scores must be positive")
        if (self.num_comparisons is None) == (self.standard_trials is None):
            raise ValueError("give exactly one of num_comparisons/standard_trials")
        if self.resolved_n < 1:
            raise ValueError("need at least 1 comparison")

    @property
    def resolved_n(self) -> int:
        if self.num_comparisons is not None:
            return int(self.num_comparisons)
        return standard_trials_to_n(self.num_items, self.standard_trials)


def standard_trials_to_n(m: int, trials: float) -> int:
    """Comparison count for ``trials`` standard trials: round(t * m(m-1)/2)."""
    if m < 2:
        raise ValueError("need at least 2 items")
    if trials < 0:
        raise ValueError("standard trials must be nonnegative")
    return int(round(trials * m * (m - 1) / 2))


def _pairs_from_linear(m: int, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode linear indices into (i, j) with i < j, enumerated i-major."""
    k = np.asarray(k, dtype=np.int64)
    b = 2 * m - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * k)) / 2.0).astype(np.int64)
    # fix float rounding at offset boundaries
    offset = i * (2 * m - i - 1) // 2
    too_high = offset > k
    i = np.where(too_high, i - 1, i)
    offset = i * (2 * m - i - 1) // 2
    too_low = k - offset >= (m - 1 - i)
    i = np.where(too_low, i + 1, i)
    offset = i * (2 * m - i - 1) // 2
    j = k - offset + i + 1
    return i, j


def sample_pairs(m: int, n: int, seed) -> np.ndarray:
    """Draw n unordered pairs uniformly with replacement; shape (n, 2), i < j.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if m < 2:
        raise ValueError("need at least 2 items")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = rng.integers(0, m * (m - 1) // 2, size=int(n))
    i, j = _pairs_from_linear(m, k)
    return np.column_stack([i, j])


def generate_toggle(cfg: ToggleNoiseConfig) -> tuple[ComparisonDataset, GroundTruth]:
    """Toggle-noise data: true scores are a random permutation of 1..M and the
    true label of each sampled pair is flipped independently with probability
    delta."""
    rng = np.random.default_rng(cfg.seed)
    m, n = cfg.num_items, cfg.resolved_n
    true_scores = (rng.permutation(m) + 1).astype(float)
    pairs = sample_pairs(m, n, rng)
    i, j = pairs[:, 0], pairs[:, 1]
    true_sign = np.where(true_scores[i] > true_scores[j], 1, -1)
    flip = rng.random(n) < np.asarray(cfg.delta, dtype=float)
    labels = np.where(flip, -true_sign, true_sign)
    dataset = _aggregate(i, j, labels, np.ones(n, dtype=np.int64), m)
    return dataset, GroundTruth.from_scores(true_scores)


def generate_bt(cfg: BTGenConfig) -> tuple[ComparisonDataset, GroundTruth]:
    """Bradley-Terry data: label +1 with probability s_i / (s_i + s_j)."""
    rng = np.random.default_rng(cfg.seed)
    m, n = cfg.num_items, cfg.resolved_n
    strengths = rng.uniform(cfg.score_low, cfg.score_high, size=m)
    pairs = sample_pairs(m, n, rng)
    i, j = pairs[:, 0], pairs[:, 1]
    p_win = strengths[i] / (strengths[i] + strengths[j])
    labels = np.where(rng.random(n) < p_win, 1, -1)
    dataset = _aggregate(i, j, labels, np.ones(n, dtype=np.int64), m)
    return dataset, GroundTruth.from_scores(strengths)
