"""Joint cumulant estimation up to order six.

Plug-in estimator: center every series at its sample mean, then combine
central moments through the set-partition expansion

    cum(x_1, ..., x_k) = sum over partitions (B_1..B_h) of
                         (-1)^(h-1) (h-1)! prod_B E[prod_{t in B} x_t].

After centering, any partition containing a singleton block vanishes, so the
tables below only keep partitions whose blocks all have size >= 2 (41 of the
203 set partitions at k = 6).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InputError

MAX_ORDER = 6
MIN_ORDER = 2


def _set_partitions(items: tuple) -> list[list[tuple]]:
    if len(items) == 1:
        return [[items]]
    first, rest = items[0], items[1:]
    out = []
    for part in _set_partitions(rest):
        for i in range(len(part)):
            out.append(part[:i] + [(first,) + part[i]] + part[i + 1:])
        out.append([(first,)] + part)
    return out


@lru_cache(maxsize=None)
def partition_table(k: int) -> tuple[tuple[float, tuple[tuple[int, ...], ...]], ...]:
    """(coefficient, blocks) for all partitions of 0..k-1 with blocks >= 2."""
    table = []
    for part in _set_partitions(tuple(range(k))):
        if any(len(block) < 2 for block in part):
            continue
        h = len(part)
        coef = (-1.0) ** (h - 1) * _factorial(h - 1)
        table.append((coef, tuple(sorted(tuple(sorted(b)) for b in part))))
    return tuple(table)


def _factorial(n: int) -> float:
    out = 1.0
    for i in range(2, n + 1):
        out *= i
    return out


def joint_cumulant(columns: list[np.ndarray]) -> float:
    """Plug-in joint cumulant of k series (k = len(columns), 2..6)."""
    k = len(columns)
    if not MIN_ORDER <= k <= MAX_ORDER:
        raise InputError(f"cumulant order must be in {MIN_ORDER}..{MAX_ORDER}, got {k}")
    n = columns[0].shape[0]
    if n < k + 1:
        raise InputError(f"need at least {k + 1} samples for an order-{k} cumulant")
    centered = [c - c.mean() for c in columns]
    total = 0.0
    for coef, blocks in partition_table(k):
        term = coef
        for block in blocks:
            prod = centered[block[0]].copy()
            for t in block[1:]:
                prod *= centered[t]
            term *= prod.mean()
        total += term
    return float(total)


def pair_cumulant_table(x: np.ndarray, y: np.ndarray,
                        max_order: int = MAX_ORDER) -> dict[tuple[int, int], float]:
    """All cumulants cum(x^(k-r), y^r) for 2 <= k <= max_order, 0 <= r <= k.

    Keys are (k, r) with r the multiplicity of y. One pass over the data
    builds the central cross-moment table; the partition sums are O(1).
    """
    xc = x - x.mean()
    yc = y - y.mean()
    xpow = [np.ones_like(xc), xc]
    ypow = [np.ones_like(yc), yc]
    for _ in range(max_order - 1):
        xpow.append(xpow[-1] * xc)
        ypow.append(ypow[-1] * yc)
    m = np.zeros((max_order + 1, max_order + 1))
    for a in range(max_order + 1):
        for b in range(max_order + 1 - a):
            if a + b < 2:
                m[a, b] = 0.0 if a + b == 1 else 1.0
            else:
                m[a, b] = float((xpow[a] * ypow[b]).mean())
    out: dict[tuple[int, int], float] = {}
    for k in range(MIN_ORDER, max_order + 1):
        for r in range(k + 1):
            total = 0.0
            # positions 0..k-r-1 carry x, the rest carry y
            for coef, blocks in partition_table(k):
                term = coef
                for block in blocks:
                    ny = sum(1 for t in block if t >= k - r)
                    term *= m[len(block) - ny, ny]
                total += term
            out[(k, r)] = total
    return out


def _tables_from_moments(m: np.ndarray, max_order: int) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    for k in range(MIN_ORDER, max_order + 1):
        for r in range(k + 1):
            total = 0.0
            for coef, blocks in partition_table(k):
                term = coef
                for block in blocks:
                    ny = sum(1 for t in block if t >= k - r)
                    term *= m[len(block) - ny, ny]
                total += term
            out[(k, r)] = total
    return out


def jackknife_pair_tables(x: np.ndarray, y: np.ndarray, blocks: int,
                          max_order: int = MAX_ORDER) -> list[dict[tuple[int, int], float]]:
    """Delete-one-block cumulant tables over contiguous row blocks.

    All replicates share the full-sample centering (the mean's own jackknife
    variation is second order), so a replicate's moments come from block
    partial sums in O(1) per entry.
    """
    n = x.shape[0]
    blocks = max(2, min(blocks, n // 10)) if n >= 20 else 2
    xc = x - x.mean()
    yc = y - y.mean()
    xpow = [np.ones_like(xc), xc]
    ypow = [np.ones_like(yc), yc]
    for _ in range(max_order - 1):
        xpow.append(xpow[-1] * xc)
        ypow.append(ypow[-1] * yc)
    edges = np.linspace(0, n, blocks + 1, dtype=int)
    total = np.zeros((max_order + 1, max_order + 1))
    per_block = np.zeros((blocks, max_order + 1, max_order + 1))
    for a in range(max_order + 1):
        for b in range(max_order + 1 - a):
            prod = xpow[a] * ypow[b]
            total[a, b] = prod.sum()
            for i in range(blocks):
                per_block[i, a, b] = prod[edges[i]:edges[i + 1]].sum()
    out = []
    for i in range(blocks):
        size = n - (edges[i + 1] - edges[i])
        m = (total - per_block[i]) / size
        m[0, 0] = 1.0
        out.append(_tables_from_moments(m, max_order))
    return out


def population_pair_table(wx: np.ndarray, wy: np.ndarray, kappa: np.ndarray,
                          max_order: int = MAX_ORDER) -> dict[tuple[int, int], float]:
    """Exact pair cumulants of two linear mixes of independent sources.

    wx, wy are coefficient vectors over the source basis; kappa[k] holds the
    per-source cumulants of order k (rows 0, 1 unused).
    """
    out: dict[tuple[int, int], float] = {}
    for k in range(MIN_ORDER, max_order + 1):
        for r in range(k + 1):
            out[(k, r)] = float(np.sum(wx ** (k - r) * wy ** r * kappa[k]))
    return out


class CumulantEstimator:
    """Cumulants of the columns of one sample matrix, cached by index tuple."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise InputError("expected an n x p matrix")
        self.values = values
        self.n, self.p = values.shape
        self._centered = values - values.mean(axis=0, keepdims=True)
        self._cache: dict[tuple[int, ...], float] = {}

    def cumulant(self, indices: tuple[int, ...]) -> float:
        k = len(indices)
        if not MIN_ORDER <= k <= MAX_ORDER:
            raise InputError(f"cumulant order must be in {MIN_ORDER}..{MAX_ORDER}")
        for i in indices:
            if not 0 <= i < self.p:
                raise InputError(f"column {i} out of range")
        key = tuple(sorted(indices))
        if key not in self._cache:
            self._cache[key] = joint_cumulant([self.values[:, i] for i in key])
        return self._cache[key]
