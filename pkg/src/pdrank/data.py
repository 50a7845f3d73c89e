"""Domain types for pairwise-comparison data and the signed-row transform.

A dataset holds M items and a compressed list of signed comparisons.  Each
entry is an ordered judgment on an unordered pair: indices ``(i, j)`` with
``i < j`` and a label ``y`` in ``{-1, +1}``, where ``y = +1`` asserts item
``i`` ranks above item ``j``.  Coherent repeats of the same judgment are
merged into one entry with a count; opposite-sign observations of the same
pair stay separate so each can carry its own confidence weight.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Comparison data violates the ingestion contract."""


CSV_COLUMNS = ("item_i", "item_j", "label", "count")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ComparisonDataset:
    """M items plus signed pairwise comparisons in structure-of-arrays form.

    Arrays are read-only after construction; instances are safe to share
    across concurrent readers.  Canonical (compressed) datasets come from
    :func:`compress` or :func:`load_csv`; constructing directly does not
    enforce entry uniqueness.
    """

    num_items: int
    items_i: np.ndarray
    items_j: np.ndarray
    labels: np.ndarray
    counts: np.ndarray
    item_names: tuple[str, ...] | None = None

    def __post_init__(self):
        m = self.num_items
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise DataError(f"num_items must be a positive integer, got {m!r}")
        i = np.asarray(self.items_i, dtype=np.int64)
        j = np.asarray(self.items_j, dtype=np.int64)
        y = np.asarray(self.labels, dtype=np.int64)
        c = np.asarray(self.counts, dtype=np.int64)
        if not (i.ndim == j.ndim == y.ndim == c.ndim == 1):
            raise DataError("entry arrays must be one-dimensional")
        if not (i.shape == j.shape == y.shape == c.shape):
            raise DataError("entry arrays must have equal length")
        if i.size:
            if i.min() < 0 or i.max() >= m or j.min() < 0 or j.max() >= m:
                raise DataError("item index out of range")
            if np.any(i == j):
                raise DataError("self-comparison (i == j) is not allowed")
            if not np.all(np.abs(y) == 1):
                raise DataError("labels must be -1 or +1")
            if c.min() < 1:
                raise DataError("counts must be positive")
        if self.item_names is not None and len(self.item_names) != m:
            raise DataError("item_names length must equal num_items")
        object.__setattr__(self, "num_items", int(m))
        object.__setattr__(self, "items_i", _readonly(i))
        object.__setattr__(self, "items_j", _readonly(j))
        object.__setattr__(self, "labels", _readonly(y))
        object.__setattr__(self, "counts", _readonly(c))

    @property
    def num_entries(self) -> int:
        """Number of unique (pair, sign) entries."""
        return int(self.items_i.size)

    @property
    def total_comparisons(self) -> int:
        """Total number of raw observations N (sum of counts)."""
        return int(self.counts.sum())

    def name_of(self, index: int) -> str:
        if self.item_names is not None:
            return self.item_names[index]
        return str(index)


def _aggregate(
    i: np.ndarray,
    j: np.ndarray,
    y: np.ndarray,
    counts: np.ndarray,
    num_items: int,
    item_names: tuple[str, ...] | None = None,
) -> ComparisonDataset:
    """Canonicalize (i < j) and merge coherent duplicates, summing counts."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    swap = i > j
    ii = np.where(swap, j, i)
    jj = np.where(swap, i, j)
    yy = np.where(swap, -y, y)
    if ii.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return ComparisonDataset(num_items, empty, empty.copy(), empty.copy(),
                                 empty.copy(), item_names)
    order = np.lexsort((yy, jj, ii))
    ii, jj, yy, counts = ii[order], jj[order], yy[order], counts[order]
    new = np.empty(ii.size, dtype=bool)
    new[0] = True
    new[1:] = (ii[1:] != ii[:-1]) | (jj[1:] != jj[:-1]) | (yy[1:] != yy[:-1])
    starts = np.flatnonzero(new)
    merged_counts = np.add.reduceat(counts, starts)
    return ComparisonDataset(num_items, ii[starts], jj[starts], yy[starts],
                             merged_counts, item_names)


def compress(raw, num_items: int,
             item_names: tuple[str, ...] | None = None) -> ComparisonDataset:
    """Build a canonical dataset from raw ``(i, j, y)`` observations.

    Accepts 3-tuples or 4-tuples ``(i, j, y, count)``.  Coherent observations
    of the same pair merge into one entry with summed multiplicity; opposite
    signs stay distinct.  Ties (``y == 0``) and invalid indices are rejected
    with the offending row number.
    """
    ilist: list[int] = []
    jlist: list[int] = []
    ylist: list[int] = []
    clist: list[int] = []
    for row, entry in enumerate(raw):
        if len(entry) == 3:
            i, j, y = entry
            count = 1
        elif len(entry) == 4:
            i, j, y, count = entry
        else:
            raise DataError(f"row {row}: expected (i, j, y[, count]), got {entry!r}")
        i, j, y, count = int(i), int(j), int(y), int(count)
        if y == 0:
            raise DataError(f"row {row}: tie label (y = 0) is not accepted")
        if y not in (-1, 1):
            raise DataError(f"row {row}: label must be -1 or +1, got {y}")
        if not (0 <= i < num_items and 0 <= j < num_items):
            raise DataError(f"row {row}: item index out of range for M={num_items}")
        if i == j:
            raise DataError(f"row {row}: self-comparison {i} vs {j}")
        if count < 1:
            raise DataError(f"row {row}: count must be positive, got {count}")
        ilist.append(i)
        jlist.append(j)
        ylist.append(y)
        clist.append(count)
    return _aggregate(np.array(ilist, dtype=np.int64),
                      np.array(jlist, dtype=np.int64),
                      np.array(ylist, dtype=np.int64),
                      np.array(clist, dtype=np.int64),
                      num_items, item_names)


def signed_row(i: int, j: int, label: int, num_items: int) -> np.ndarray:
    """Dense signed comparison row: +y at position i, -y at position j."""
    if label not in (-1, 1):
        raise DataError(f"label must be -1 or +1, got {label}")
    if not (0 <= i < num_items and 0 <= j < num_items) or i == j:
        raise DataError(f"invalid pair ({i}, {j}) for M={num_items}")
    row = np.zeros(num_items)
    row[i] = float(label)
    row[j] = -float(label)
    return row


def signed_matvec(dataset: ComparisonDataset, x: np.ndarray) -> np.ndarray:
    """Per-entry signed score gaps: y_n * (x[i_n] - x[j_n])."""
    return dataset.labels * (x[dataset.items_i] - x[dataset.items_j])


def signed_rmatvec(dataset: ComparisonDataset, v: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`signed_matvec`: scatter v_n onto the item axis."""
    yv = dataset.labels * v
    out = np.bincount(dataset.items_i, weights=yv, minlength=dataset.num_items)
    out -= np.bincount(dataset.items_j, weights=yv, minlength=dataset.num_items)
    return out


def scores_to_ranking(scores: np.ndarray) -> np.ndarray:
    """Item indices sorted best-first; exact ties broken by ascending index."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1:
        raise ValueError("scores must be a one-dimensional vector")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores contain NaN or infinite entries")
    return np.lexsort((np.arange(s.size), -s)).astype(np.int64)


def load_csv(path) -> ComparisonDataset:
    """Read a comparison CSV (``item_i,item_j,label[,count]``, header mandatory).

    Item identifiers are arbitrary strings mapped to dense 0-based indices in
    order of first appearance; the mapping is kept on the dataset as
    ``item_names``.  Label 1 means item_i ranks above item_j.  Ties (label 0)
    are rejected.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [cell.strip() for cell in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file (header mandatory)") from None
        if tuple(header) not in (CSV_COLUMNS[:3], CSV_COLUMNS):
            raise DataError(
                f"{path}: header must be item_i,item_j,label[,count], got {header}")
        has_count = len(header) == 4
        names: dict[str, int] = {}
        ilist: list[int] = []
        jlist: list[int] = []
        ylist: list[int] = []
        clist: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} columns, "
                                f"got {len(row)}")
            a, b = row[0].strip(), row[1].strip()
            try:
                y = int(row[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: label must be an integer, "
                                f"got {row[2]!r}") from None
            if y == 0:
                raise DataError(f"{path}:{lineno}: tie label (0) is not accepted")
            if y not in (-1, 1):
                raise DataError(f"{path}:{lineno}: label must be 1 or -1, got {y}")
            if a == b:
                raise DataError(f"{path}:{lineno}: item compared against itself "
                                f"({a!r})")
            count = 1
            if has_count:
                try:
                    count = int(row[3])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: count must be an integer, "
                                    f"got {row[3]!r}") from None
                if count < 1:
                    raise DataError(f"{path}:{lineno}: count must be positive")
            for name in (a, b):
                if name not in names:
                    names[name] = len(names)
            ilist.append(names[a])
            jlist.append(names[b])
            ylist.append(y)
            clist.append(count)
    if not ilist:
        raise DataError(f"{path}: no comparison rows")
    return _aggregate(np.array(ilist, dtype=np.int64),
                      np.array(jlist, dtype=np.int64),
                      np.array(ylist, dtype=np.int64),
                      np.array(clist, dtype=np.int64),
                      num_items=len(names),
                      item_names=tuple(names))


def write_csv(dataset: ComparisonDataset, path) -> None:
    """Write a dataset in the ingestion CSV format (always with a count column)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i, j, y, c in zip(dataset.items_i, dataset.items_j,
                              dataset.labels, dataset.counts):
            writer.writerow([dataset.name_of(int(i)), dataset.name_of(int(j)),
                             int(y), int(c)])
