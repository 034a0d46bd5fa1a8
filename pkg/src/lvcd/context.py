"""Series algebra over a sample matrix or over the exact population law.

Every stage of the discovery pipeline consumes this interface only, so the
same stage code runs on observational data (plug-in cumulants, HSIC) and on
the population oracle (closed-form cumulants, exact dependence). A Series is
a named vector: sample contexts store its n values, population contexts its
coefficients over the disturbance basis.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .config import Config
from .cumulants import (MAX_ORDER, jackknife_pair_tables, joint_cumulant,
                        pair_cumulant_table, population_pair_table)
from .errors import InputError
from .hsic import HsicResult, hsic_test
from .model import (ModelSpec, SampleMatrix, disturbance_cumulant_table,
                    mixing_matrix)


@dataclass(frozen=True)
class Series:
    """A named observed series or derived statistic; label is its provenance."""

    label: str
    data: np.ndarray


def _pair_key(a: Series, b: Series) -> tuple[str, str]:
    return (a.label, b.label) if a.label <= b.label else (b.label, a.label)


class BaseContext:
    """Shared caching layer; subclasses provide the estimators."""

    names: tuple[str, ...]

    def __init__(self):
        self._pair_cache: dict[tuple[str, str], dict[tuple[int, int], float]] = {}
        self._dep_cache: dict[tuple[str, str], bool] = {}
        self._series_by_label: dict[str, Series] = {}

    # -- series -------------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.names)

    def base(self, i: int) -> Series:
        raise NotImplementedError

    def _register(self, s: Series) -> Series:
        self._series_by_label[s.label] = s
        return s

    def linear_comb(self, terms: list[tuple[float, Series]], label: str) -> Series:
        data = None
        for coef, s in terms:
            data = coef * s.data if data is None else data + coef * s.data
        return self._register(Series(label, data))

    # -- cumulants ------------------------------------------------------------
    def pair_table(self, x: Series, y: Series) -> dict[tuple[int, int], float]:
        """Cumulants cum(x^(k-r), y^r) keyed by (k, r), orders 2..6."""
        key = _pair_key(x, y)
        if key not in self._pair_cache:
            a = x if x.label == key[0] else y
            b = y if a is x else x
            self._pair_cache[key] = self._compute_pair_table(a, b)
        table = self._pair_cache[key]
        if x.label == key[0]:
            return table
        return {(k, r): table[(k, k - r)] for (k, r) in table}

    def cum(self, series: tuple[Series, ...]) -> float:
        raise NotImplementedError

    def variance(self, x: Series) -> float:
        return self.pair_table(x, x)[(2, 0)]

    def covariance(self, x: Series, y: Series) -> float:
        return self.pair_table(x, y)[(2, 1)]

    # -- dependence -----------------------------------------------------------
    def dependent(self, x: Series, y: Series) -> bool:
        key = _pair_key(x, y)
        if key not in self._dep_cache:
            self._dep_cache[key] = self._test_dependent(x, y)
        return self._dep_cache[key]

    def _compute_pair_table(self, x: Series, y: Series) -> dict:
        raise NotImplementedError

    def _test_dependent(self, x: Series, y: Series) -> bool:
        raise NotImplementedError

    def pair_table_replicates(self, x: Series, y: Series,
                              blocks: int) -> list[dict[tuple[int, int], float]]:
        """Delete-one-block jackknife replicates of pair_table; empty when
        the context is exact (population) and estimates carry no noise."""
        return []

    def pair_table_halves(self, x: Series, y: Series) -> list[tuple[dict, dict]]:
        """(train, test) half-sample table pairs for cross-fitted residuals;
        empty when the context is exact."""
        return []


class SampleContext(BaseContext):
    """Estimators over an observational sample.

    Columns are standardized to unit sample variance up front (every
    decision in the pipeline is scale-equivariant, and thresholds are
    calibrated for this scale); scale(i) returns the removed factor so
    coefficient estimates can be mapped back to the raw units. One seeded
    row subsample is drawn per context and reused by every HSIC call, so
    all pairwise decisions in a run see the same rows.
    """

    is_population = False

    def __init__(self, sample: SampleMatrix, cfg: Config):
        super().__init__()
        if sample.n < cfg.min_n:
            raise InputError(f"need at least {cfg.min_n} rows, got {sample.n}")
        self.sample = sample
        self.cfg = cfg
        self.names = sample.names
        self.n = sample.n
        sds = sample.values.std(axis=0)
        sds[sds == 0.0] = 1.0
        self._sds = sds
        self._values = sample.values / sds
        if self.n > cfg.hsic_subsample:
            rng = np.random.default_rng(cfg.seed)
            rows = rng.choice(self.n, size=cfg.hsic_subsample, replace=False)
            self._hsic_rows = np.sort(rows)
        else:
            self._hsic_rows = None
        self.hsic_log: list[tuple[str, str, HsicResult]] = []
        self._replicate_cache: dict = {}

    def base(self, i: int) -> Series:
        return self._register(Series(self.names[i], self._values[:, i]))

    def scale(self, i: int) -> float:
        return float(self._sds[i])

    def cum(self, series: tuple[Series, ...]) -> float:
        return joint_cumulant([s.data for s in series])

    def _compute_pair_table(self, x: Series, y: Series) -> dict:
        return pair_cumulant_table(x.data, y.data, MAX_ORDER)

    def pair_table_replicates(self, x: Series, y: Series,
                              blocks: int) -> list[dict[tuple[int, int], float]]:
        key = (_pair_key(x, y), blocks)
        if key not in self._replicate_cache:
            a = x if x.label <= y.label else y
            b = y if a is x else x
            self._replicate_cache[key] = jackknife_pair_tables(
                a.data, b.data, blocks)
        tables = self._replicate_cache[key]
        if x.label <= y.label:
            return tables
        return [{(k, r): t[(k, k - r)] for (k, r) in t} for t in tables]

    def pair_table_halves(self, x: Series, y: Series) -> list[tuple[dict, dict]]:
        key = ("halves", _pair_key(x, y))
        if key not in self._replicate_cache:
            a = x if x.label <= y.label else y
            b = y if a is x else x
            t_even = pair_cumulant_table(a.data[0::2], b.data[0::2])
            t_odd = pair_cumulant_table(a.data[1::2], b.data[1::2])
            self._replicate_cache[key] = [(t_even, t_odd), (t_odd, t_even)]
        pairs = self._replicate_cache[key]
        if x.label <= y.label:
            return pairs
        flip = lambda t: {(k, r): t[(k, k - r)] for (k, r) in t}
        return [(flip(tr), flip(te)) for tr, te in pairs]

    def hsic(self, x: Series, y: Series) -> HsicResult:
        xs, ys = x.data, y.data
        if self._hsic_rows is not None:
            xs, ys = xs[self._hsic_rows], ys[self._hsic_rows]
        n_used = xs.shape[0]
        perms = self.cfg.hsic_permutations if n_used < self.cfg.hsic_perm_below_n else 0
        seed = (self.cfg.seed * 0x9E3779B1
                + zlib.crc32("|".join(sorted((x.label, y.label))).encode())) % (2 ** 63)
        res = hsic_test(xs, ys, self.cfg.alpha_ind, seed=seed, permutations=perms)
        self.hsic_log.append((x.label, y.label, res))
        return res

    def _test_dependent(self, x: Series, y: Series) -> bool:
        return not self.hsic(x, y).independent


class PopulationContext(BaseContext):
    """Exact distribution of linear mixes of independent disturbances.

    Built either from a ModelSpec or directly from a mixing matrix plus a
    per-source cumulant table (rows 2..6). Dependence between two series is
    shared support of their coefficient vectors, which matches faithfulness
    for generic coefficients.
    """

    is_population = True

    def __init__(self, mixing: np.ndarray, kappa: np.ndarray,
                 names: tuple[str, ...] | None = None, support_tol: float = 1e-9):
        super().__init__()
        self.mixing = np.asarray(mixing, dtype=float)
        self.kappa = np.asarray(kappa, dtype=float)
        if self.kappa.shape[0] != MAX_ORDER + 1 or self.kappa.shape[1] != self.mixing.shape[1]:
            raise InputError("cumulant table must be (7, n_sources)")
        self.names = names if names is not None else tuple(
            f"X{i + 1}" for i in range(self.mixing.shape[0]))
        self.support_tol = support_tol

    @staticmethod
    def from_model(model: ModelSpec) -> "PopulationContext":
        return PopulationContext(mixing_matrix(model),
                                 disturbance_cumulant_table(model),
                                 names=model.names)

    def base(self, i: int) -> Series:
        return self._register(Series(self.names[i], self.mixing[i].copy()))

    def scale(self, i: int) -> float:
        return 1.0

    def cum(self, series: tuple[Series, ...]) -> float:
        k = len(series)
        prod = np.ones(self.mixing.shape[1])
        for s in series:
            prod = prod * s.data
        return float(np.sum(prod * self.kappa[k]))

    def _compute_pair_table(self, x: Series, y: Series) -> dict:
        return population_pair_table(x.data, y.data, self.kappa, MAX_ORDER)

    def _support(self, x: Series) -> np.ndarray:
        scale = max(1.0, float(np.abs(x.data).max()))
        return np.abs(x.data) > self.support_tol * scale

    def _test_dependent(self, x: Series, y: Series) -> bool:
        return bool(np.any(self._support(x) & self._support(y)))
