"""Agreement between safety metrics.

Real-valued outputs are turned into three-class labels over all unordered
pairs of states, ``sign(m(s_i) - m(s_j))``, and two metrics agree on a pair
when their labels match.  The pair labels are never materialised: the
agreement counts come from one lexicographic sort plus an inversion count,
O(N log N) overall.

Boolean outputs are compared element by element.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spec import BOOL_INCIDENT, BOOL_STATE, DATASET, HIGHER_RISKIER, LOWER_RISKIER, MetricOutput

MODES = ("aid", "precision", "recall")


@dataclass(frozen=True)
class ConcordanceCounts:
    """Partition of the N(N-1)/2 unordered pairs by how two series order them."""

    n0: int
    concordant: int
    discordant: int
    tie_first: int   # tied in the first series only
    tie_second: int  # tied in the second series only
    tie_both: int

    def __post_init__(self):
        parts = (self.concordant + self.discordant + self.tie_first
                 + self.tie_second + self.tie_both)
        if parts != self.n0:
            raise ValueError(f"pair categories sum to {parts}, expected {self.n0}")


def dense_rank(values) -> np.ndarray:
    """Integer ranks with equal values sharing a rank; +/-inf are ordinary values."""
    values = np.asarray(values, dtype=float)
    if np.isnan(values).any():
        raise ValueError("metric series contains NaN; map sentinels to +/-inf first")
    return np.unique(values, return_inverse=True)[1].reshape(-1).astype(np.int64)


def _tied_pairs(keys: np.ndarray) -> int:
    counts = np.unique(keys, return_counts=True)[1].astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def count_inversions(seq) -> int:
    """Number of pairs i < j with seq[i] > seq[j] for non-negative integers.

    Works one bit at a time from the most significant end: at each level the
    sequence is stably grouped by the bits above, and a pair is an inversion
    exactly at the highest bit where its two values differ.  Each level is a
    stable zeros-before-ones partition inside every group, done in linear time
    with prefix sums, so the whole count is O(N log max).
    """
    seq = np.asarray(seq)
    n = seq.size
    if n < 2:
        return 0
    if seq.min() < 0:
        raise ValueError("count_inversions expects non-negative integers")
    seq = seq.astype(np.int32 if n < 2**31 and seq.max() < 2**31 else np.int64)
    idx = np.arange(n, dtype=seq.dtype)
    head = np.empty(n, dtype=bool)
    head[0] = True
    total = 0
    for b in range(int(seq.max()).bit_length() - 1, -1, -1):
        key = seq >> b
        bit = key & 1
        prefix = key >> 1
        np.not_equal(prefix[1:], prefix[:-1], out=head[1:])
        starts = np.flatnonzero(head)
        sizes = np.diff(np.append(starts, n))
        ones_before = np.cumsum(bit, dtype=np.int64) - bit
        zero = bit == 0
        base = ones_before[starts]
        zeros = sizes - (ones_before[starts + sizes - 1] + bit[starts + sizes - 1] - base)
        # every zero jumps over the ones that precede it inside its group
        total += int(ones_before[zero].sum()) - int((zeros * base).sum())
        pos = np.where(zero, idx - ones_before + np.repeat(base, sizes),
                       ones_before + np.repeat(starts + zeros - base, sizes))
        nxt = np.empty_like(seq)
        nxt[pos] = seq
        seq = nxt
    return total


def _counts_from_ranks(x: np.ndarray, y: np.ndarray) -> ConcordanceCounts:
    n = x.size
    n0 = n * (n - 1) // 2
    if n == 0:
        return ConcordanceCounts(0, 0, 0, 0, 0, 0)
    order = np.argsort(x * (int(y.max()) + 1) + y, kind="stable")
    discordant = count_inversions(y[order])
    t_x = _tied_pairs(x)
    t_y = _tied_pairs(y)
    t_xy = _tied_pairs(x * (int(y.max()) + 1) + y)
    return ConcordanceCounts(
        n0=n0,
        concordant=n0 - discordant - t_x - t_y + t_xy,
        discordant=discordant,
        tie_first=t_x - t_xy,
        tie_second=t_y - t_xy,
        tie_both=t_xy,
    )


def sign_transform(m1, m2) -> ConcordanceCounts:
    """Exact pair-label agreement counts between two real-valued series."""
    m1, m2 = np.asarray(m1, dtype=float), np.asarray(m2, dtype=float)
    if m1.shape != m2.shape or m1.ndim != 1:
        raise ValueError(f"series length mismatch: {m1.shape} vs {m2.shape}")
    return _counts_from_ranks(dense_rank(m1), dense_rank(m2))


def pair_labels(values) -> np.ndarray:
    """Materialise the three-class label of every unordered pair (i < j).

    Quadratic in size; meant for small series and cross-checks.
    """
    r = dense_rank(values)
    i, j = np.triu_indices(r.size, k=1)
    return np.sign(r[i] - r[j]).astype(np.int8)


def aid_pairwise(counts: ConcordanceCounts) -> float:
    """Fraction of pairs on which both series give the same label (including both tied)."""
    if counts.n0 == 0:
        raise ValueError("agreement needs at least two elements")
    return (counts.concordant + counts.tie_both) / counts.n0


def _labels(c1, c2):
    c1, c2 = np.asarray(c1), np.asarray(c2)
    if c1.shape != c2.shape:
        raise ValueError(f"label series length mismatch: {c1.shape} vs {c2.shape}")
    if c1.size == 0:
        raise ValueError("empty label series")
    return c1, c2


def aid_elementwise(c1, c2) -> float:
    c1, c2 = _labels(c1, c2)
    return int(np.count_nonzero(c1 == c2)) / c1.size


def precision(c1, c2, cls=True) -> float:
    """Share of the elements that ``c1`` puts in ``cls`` on which ``c2`` agrees."""
    c1, c2 = _labels(c1, c2)
    predicted = c1 == cls
    n = int(np.count_nonzero(predicted))
    if n == 0:
        raise ValueError(f"empty class {cls!r} in the first series")
    return int(np.count_nonzero(predicted & (c2 == cls))) / n


def recall(c1, c2, cls=True) -> float:
    """Share of the elements that ``c2`` puts in ``cls`` which ``c1`` also does."""
    c1, c2 = _labels(c1, c2)
    actual = c2 == cls
    n = int(np.count_nonzero(actual))
    if n == 0:
        raise ValueError(f"empty class {cls!r} in the second series")
    return int(np.count_nonzero(actual & (c1 == cls))) / n


def micro_precision(c1, c2) -> float:
    """Precision pooled over all classes: total true positives over total predictions."""
    c1, c2 = _labels(c1, c2)
    tp = fp = 0
    for cls in np.unique(np.concatenate([c1.ravel(), c2.ravel()])):
        predicted = c1 == cls
        hits = int(np.count_nonzero(predicted & (c2 == cls)))
        tp += hits
        fp += int(np.count_nonzero(predicted)) - hits
    return tp / (tp + fp)


def oriented(values, orientation: str) -> np.ndarray:
    """Flip risk-increasing outputs so that smaller always means riskier."""
    values = np.asarray(values, dtype=float)
    if orientation == LOWER_RISKIER:
        return values
    if orientation == HIGHER_RISKIER:
        return -values
    raise ValueError(f"unknown orientation {orientation!r}")


@dataclass(frozen=True)
class AgreementMatrix:
    labels: tuple[str, ...]
    values: np.ndarray
    mode: str
    form: str

    def display(self, decimals: int = 2) -> np.ndarray:
        return display_values(self.values, decimals)

    def mean_offdiagonal(self) -> np.ndarray:
        """Per-row mean over the other metrics, ignoring undefined cells."""
        v = self.values.copy()
        np.fill_diagonal(v, np.nan)
        return np.nanmean(v, axis=1)


def display_values(values, decimals: int = 2) -> np.ndarray:
    """Presentation rounding: above 0.99 shows as 1, below 0.01 as 0."""
    v = np.asarray(values, dtype=float)
    shown = np.round(v, decimals)
    shown = np.where(v > 0.99, 1.0, shown)
    return np.where(v < 0.01, 0.0, shown)


def _is_bool_form(form: str) -> bool:
    return form in (BOOL_STATE, BOOL_INCIDENT)


def agreement_matrix(outputs: Sequence[MetricOutput], mode: str = "aid",
                     jobs: int = 1) -> AgreementMatrix:
    """Pairwise agreement between metric outputs of one comparable form.

    ``aid`` and the real-valued ``precision``/``recall`` (micro-averaged over
    the three pair classes, which reduces to AID) are symmetric.  Boolean
    ``precision``/``recall`` use True (safe) as the positive class, row metric
    as the classifier under test, and are generally asymmetric.  Undefined
    cells (no positives) are NaN; the diagonal is 1.
    """
    if mode not in MODES:
        raise ValueError(f"unknown agreement mode {mode!r}; use one of {MODES}")
    outputs = list(outputs)
    if not outputs:
        raise ValueError("no metric outputs to compare")
    forms = {o.form for o in outputs}
    if len(forms) != 1:
        raise ValueError(f"incomparable output forms: {sorted(forms)}")
    form = forms.pop()
    if form == DATASET:
        raise ValueError("dataset-level summaries are not comparable element-wise")
    sizes = {len(o.values) for o in outputs}
    if len(sizes) != 1:
        raise ValueError(f"outputs cover different numbers of elements: {sorted(sizes)}")

    k = len(outputs)
    boolean = _is_bool_form(form)
    if boolean:
        data = [np.asarray(o.values, dtype=bool) for o in outputs]
    else:
        data = [dense_rank(oriented(o.values, o.orientation)) for o in outputs]

    def cell(ij):
        i, j = ij
        try:
            if not boolean:
                return aid_pairwise(_counts_from_ranks(data[i], data[j]))
            if mode == "aid":
                return aid_elementwise(data[i], data[j])
            if mode == "precision":
                return precision(data[i], data[j], True)
            return recall(data[i], data[j], True)
        except ValueError:
            return float("nan")

    symmetric = not boolean or mode == "aid"
    cells = [(i, j) for i in range(k) for j in range(k)
             if i != j and (not symmetric or i < j)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(cell, cells))
    else:
        results = [cell(c) for c in cells]

    values = np.eye(k)
    for (i, j), v in zip(cells, results):
        values[i, j] = v
        if symmetric:
            values[j, i] = v
    return AgreementMatrix(tuple(o.variant for o in outputs), values, mode, form)
