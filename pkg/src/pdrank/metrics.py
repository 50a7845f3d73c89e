"""Ranking and label metrics.

Kendall tau is computed between two full rankings (ties already resolved by
the deterministic tie-break upstream), so concordant plus discordant pairs
always total m(m-1)/2 and tau = (P - Q) / (P + Q).  Discordant pairs are
counted as inversions with a merge sort, O(m log m).
"""

from __future__ import annotations

import numpy as np

from .data import ComparisonDataset


def _check_permutation(r: np.ndarray, name: str) -> np.ndarray:
    r = np.asarray(r, dtype=np.int64)
    if r.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    m = r.size
    if m and (r.min() < 0 or r.max() >= m or
              np.bincount(r, minlength=m).max() > 1):
        raise ValueError(f"{name} is not a permutation of 0..{m - 1}")
    return r


def _count_inversions(seq: list[int]) -> int:
    n = len(seq)
    if n < 2:
        return 0
    mid = n // 2
    left, right = seq[:mid], seq[mid:]
    inv = _count_inversions(left) + _count_inversions(right)
    merged = []
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            j += 1
            inv += len(left) - i
    merged.extend(left[i:])
    merged.extend(right[j:])
    seq[:] = merged
    return inv


def kendall_tau(r_true: np.ndarray, r_pred: np.ndarray) -> float:
    """(P - Q) / (P + Q) over all item pairs of two full rankings."""
    a = _check_permutation(r_true, "r_true")
    b = _check_permutation(r_pred, "r_pred")
    if a.size != b.size:
        raise ValueError(f"ranking lengths differ: {a.size} vs {b.size}")
    m = a.size
    if m < 2:
        raise ValueError("kendall tau needs at least 2 items")
    pos_pred = np.empty(m, dtype=np.int64)
    pos_pred[b] = np.arange(m)
    seq = pos_pred[a].tolist()
    discordant = _count_inversions(seq)
    total = m * (m - 1) // 2
    return (total - 2 * discordant) / total


def label_accuracy(scores: np.ndarray, dataset: ComparisonDataset,
                   true_scores: np.ndarray) -> float:
    """Multiplicity-weighted fraction of observations whose noise-free label
    matches sign(scores[i] - scores[j]); a zero score difference counts as a
    mismatch."""
    if dataset.num_entries == 0:
        raise ValueError("dataset has no comparisons")
    x = np.asarray(scores, dtype=float)
    t = np.asarray(true_scores, dtype=float)
    if x.shape != (dataset.num_items,) or t.shape != (dataset.num_items,):
        raise ValueError("scores must have one entry per item")
    pred_gap = x[dataset.items_i] - x[dataset.items_j]
    true_gap = t[dataset.items_i] - t[dataset.items_j]
    match = ((pred_gap > 0) & (true_gap > 0)) | ((pred_gap < 0) & (true_gap < 0))
    return float(dataset.counts[match].sum() / dataset.counts.sum())
