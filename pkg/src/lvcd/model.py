"""Ground-truth model representation, validation, simulation, oracles.

The model is the linear acyclic system

    L = A L + eps        (q latent variables)
    X = Lambda L + B X + e   (p observed variables)

with mutually independent non-Gaussian disturbances. Reduced form:

    effects_ll = (I - A)^-1
    effects_oo = (I - B)^-1
    effects_ol = (I - B)^-1 Lambda (I - A)^-1

and X = M u with M = [effects_ol, effects_oo], u = (eps, e).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .cumulants import MAX_ORDER, MIN_ORDER
from .errors import InputError

FAMILIES = ("shifted_lognormal", "uniform_centered", "custom_moments")


@dataclass(frozen=True)
class DisturbanceSpec:
    """One disturbance term: a zero-mean non-Gaussian distribution.

    shifted_lognormal(mu, sigma)  lognormal shifted to zero mean
    uniform_centered(a, b)        uniform on [a, b] shifted to zero mean
                                  (odd cumulants vanish; fails assumption A5,
                                  kept as a negative-control family)
    custom_moments                explicit cumulants, orders 2..6; no sampler
    """

    family: str
    params: tuple[float, ...] = ()
    custom_cumulants: tuple[float, ...] = ()  # orders 2..6 for custom_moments

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown disturbance family {self.family!r}")
        if self.family == "custom_moments" and len(self.custom_cumulants) != 5:
            raise InputError("custom_moments needs cumulants of orders 2..6")

    def cumulant(self, k: int) -> float:
        """Exact cumulant of order k (2..6); order-1 is zero by construction."""
        if k == 1:
            return 0.0
        if not MIN_ORDER <= k <= MAX_ORDER:
            raise InputError(f"order must be in {MIN_ORDER}..{MAX_ORDER}")
        if self.family == "shifted_lognormal":
            mu, sigma = self.params
            return _lognormal_cumulant(mu, sigma, k)
        if self.family == "uniform_centered":
            a, b = self.params
            width = b - a
            bernoulli = {2: 1.0 / 6, 3: 0.0, 4: -1.0 / 30, 5: 0.0, 6: 1.0 / 42}
            return bernoulli[k] / k * width ** k
        return self.custom_cumulants[k - 2]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.family == "shifted_lognormal":
            mu, sigma = self.params
            return rng.lognormal(mu, sigma, size=n) - np.exp(mu + sigma ** 2 / 2.0)
        if self.family == "uniform_centered":
            a, b = self.params
            return rng.uniform(a, b, size=n) - (a + b) / 2.0
        raise InputError("custom_moments disturbances cannot be sampled")

    def to_dict(self) -> dict:
        out = {"family": self.family, "params": list(self.params)}
        if self.family == "custom_moments":
            out["cumulants"] = list(self.custom_cumulants)
        return out

    @staticmethod
    def from_dict(d: dict) -> "DisturbanceSpec":
        return DisturbanceSpec(
            family=d["family"],
            params=tuple(d.get("params", ())),
            custom_cumulants=tuple(d.get("cumulants", ())),
        )


def default_disturbance() -> DisturbanceSpec:
    """Lognormal(-1.1, 0.8) shifted to zero mean."""
    return DisturbanceSpec("shifted_lognormal", (-1.1, 0.8))


def _lognormal_cumulant(mu: float, sigma: float, k: int) -> float:
    # cumulants from raw moments m_j = exp(j mu + j^2 sigma^2 / 2); shifting
    # to zero mean only changes the first cumulant.
    m = [1.0] + [float(np.exp(j * mu + j * j * sigma * sigma / 2.0)) for j in range(1, k + 1)]
    kappa = [0.0] * (k + 1)
    kappa[1] = m[1]
    for n in range(2, k + 1):
        acc = m[n]
        for j in range(1, n):
            acc -= _binom(n - 1, j - 1) * kappa[j] * m[n - j]
        kappa[n] = acc
    return kappa[k]


def _binom(n: int, k: int) -> float:
    out = 1.0
    for i in range(k):
        out = out * (n - i) / (i + 1)
    return out


# ---------------------------------------------------------------------------
# model spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Ground-truth model: coefficient matrices plus disturbance laws.

    A[j, i]      coefficient of latent i on latent j
    Lambda[j, i] coefficient of latent i on observed j
    B[j, i]      coefficient of observed i on observed j
    """

    A: np.ndarray
    Lambda: np.ndarray
    B: np.ndarray
    latent_disturbances: tuple[DisturbanceSpec, ...]
    observed_disturbances: tuple[DisturbanceSpec, ...]
    names: tuple[str, ...] = ()
    latent_names: tuple[str, ...] = ()

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        lam = np.asarray(self.Lambda, dtype=float)
        B = np.asarray(self.B, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Lambda", lam)
        object.__setattr__(self, "B", B)
        q, p = A.shape[0], B.shape[0]
        if A.shape != (q, q) or B.shape != (p, p) or lam.shape != (p, q):
            raise InputError("dimension mismatch between A, Lambda, B")
        if len(self.latent_disturbances) != q or len(self.observed_disturbances) != p:
            raise InputError("one disturbance spec required per variable")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"X{i + 1}" for i in range(p)))
        if not self.latent_names:
            object.__setattr__(self, "latent_names", tuple(f"L{i + 1}" for i in range(q)))
        if len(self.names) != p or len(set(self.names)) != p:
            raise InputError("observed names must be unique and match p")

    @property
    def q(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[0]

    def latent_parent_of(self, j: int) -> int:
        """Column of the unique nonzero entry in row j of Lambda (A1)."""
        nz = np.flatnonzero(self.Lambda[j])
        if len(nz) != 1:
            raise InputError(f"observed {j} has {len(nz)} latent parents, expected 1")
        return int(nz[0])

    def true_clusters(self) -> list[frozenset[int]]:
        groups: dict[int, set[int]] = {}
        for j in range(self.p):
            groups.setdefault(self.latent_parent_of(j), set()).add(j)
        return [frozenset(groups[i]) for i in sorted(groups)]

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "p": self.p,
            "names": list(self.names),
            "latent_names": list(self.latent_names),
            "A": self.A.tolist(),
            "Lambda": self.Lambda.tolist(),
            "B": self.B.tolist(),
            "latent_disturbances": [d.to_dict() for d in self.latent_disturbances],
            "observed_disturbances": [d.to_dict() for d in self.observed_disturbances],
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        return ModelSpec(
            A=np.asarray(d["A"], dtype=float),
            Lambda=np.asarray(d["Lambda"], dtype=float),
            B=np.asarray(d["B"], dtype=float),
            latent_disturbances=tuple(DisturbanceSpec.from_dict(x) for x in d["latent_disturbances"]),
            observed_disturbances=tuple(DisturbanceSpec.from_dict(x) for x in d["observed_disturbances"]),
            names=tuple(d.get("names", ())),
            latent_names=tuple(d.get("latent_names", ())),
        )

    @staticmethod
    def load(path: str) -> "ModelSpec":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return ModelSpec.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"cannot load model from {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationEntry:
    code: str
    ok: bool
    detail: str = ""


@dataclass
class ValidationReport:
    entries: list[ValidationEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> list[ValidationEntry]:
        return [e for e in self.entries if not e.ok]


def _topological_order(adj: np.ndarray) -> list[int] | None:
    """Order of a DAG given adj[j, i] != 0 meaning i -> j; None if cyclic."""
    n = adj.shape[0]
    indeg = [int(np.count_nonzero(adj[j])) for j in range(n)]
    ready = [i for i in range(n) if indeg[i] == 0]
    order = []
    while ready:
        v = ready.pop()
        order.append(v)
        for j in range(n):
            if adj[j, v] != 0:
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(j)
    return order if len(order) == n else None


def validate(model: ModelSpec, zero_tol: float = 1e-9,
             cumulant_tol: float = 1e-8) -> ValidationReport:
    """Check acyclicity and assumptions A1-A5 plus the scale normalization.

    Dimension errors raise; assumption violations come back as structured
    entries so callers can report all of them at once.
    """
    rep = ValidationReport()
    ok_a = _topological_order(model.A) is not None
    rep.entries.append(ValidationEntry("acyclic_latent", ok_a, "" if ok_a else "A has a cycle"))
    ok_b = _topological_order(model.B) is not None
    rep.entries.append(ValidationEntry("acyclic_observed", ok_b, "" if ok_b else "B has a cycle"))
    if not (ok_a and ok_b):
        return rep

    # A1: one latent parent per observed variable
    bad = [j for j in range(model.p) if np.count_nonzero(model.Lambda[j]) != 1]
    rep.entries.append(ValidationEntry(
        "A1", not bad, "" if not bad else f"rows with != 1 latent parent: {bad}"))

    # A2: every latent has >= 2 children, at least one observed
    bad2 = []
    for i in range(model.q):
        n_obs = int(np.count_nonzero(model.Lambda[:, i]))
        n_lat = int(np.count_nonzero(model.A[:, i]))
        if n_obs < 1 or n_obs + n_lat < 2:
            bad2.append(i)
    rep.entries.append(ValidationEntry(
        "A2", not bad2, "" if not bad2 else f"latents with too few children: {bad2}"))

    # A3: observed edges only inside clusters
    bad3 = []
    if not bad:
        parents = [model.latent_parent_of(j) for j in range(model.p)]
        for j in range(model.p):
            for i in range(model.p):
                if model.B[j, i] != 0 and parents[j] != parents[i]:
                    bad3.append((i, j))
    rep.entries.append(ValidationEntry(
        "A3", not bad3, "" if not bad3 else f"cross-cluster edges: {bad3}"))

    # A4: faithfulness spot check on total effects of connected pairs
    bad4 = []
    eff = total_effects(model)
    reach_ll = _reachability(model.A)
    reach_oo = _reachability(model.B)
    for j in range(model.q):
        for i in range(model.q):
            if i != j and reach_ll[j, i] and abs(eff.effects_ll[j, i]) <= zero_tol:
                bad4.append(("L", i, j))
    for j in range(model.p):
        for i in range(model.p):
            if i != j and reach_oo[j, i] and abs(eff.effects_oo[j, i]) <= zero_tol:
                bad4.append(("X", i, j))
    rep.entries.append(ValidationEntry(
        "A4", not bad4, "" if not bad4 else f"vanishing total effects: {bad4}"))

    # A5: nonzero higher cumulants for every disturbance
    bad5 = []
    for tag, specs in (("eps", model.latent_disturbances), ("e", model.observed_disturbances)):
        for idx, d in enumerate(specs):
            for k in range(3, MAX_ORDER + 1):
                if abs(d.cumulant(k)) <= cumulant_tol:
                    bad5.append((tag, idx, k))
    rep.entries.append(ValidationEntry(
        "A5", not bad5, "" if not bad5 else f"vanishing cumulants: {bad5}"))

    # scale normalization: each latent has an ancestor-free observed child
    # with coefficient 1
    badn = []
    if not bad:
        parents = [model.latent_parent_of(j) for j in range(model.p)]
        for i in range(model.q):
            children = [j for j in range(model.p) if parents[j] == i]
            free = [j for j in children
                    if not any(reach_oo[j, m] for m in children if m != j)]
            if not any(abs(model.Lambda[j, i] - 1.0) <= zero_tol for j in free):
                badn.append(i)
    rep.entries.append(ValidationEntry(
        "NORM", not badn,
        "" if not badn else f"latents without a unit-coefficient top child: {badn}"))
    return rep


def _reachability(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    reach = (adj != 0)
    for mid in range(n):
        reach = reach | (reach[:, mid:mid + 1] & reach[mid:mid + 1, :])
    return reach


# ---------------------------------------------------------------------------
# reduced form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TotalEffects:
    effects_ll: np.ndarray  # (I - A)^-1
    effects_ol: np.ndarray  # (I - B)^-1 Lambda (I - A)^-1
    effects_oo: np.ndarray  # (I - B)^-1


def _unitriangular_inverse(coef: np.ndarray) -> np.ndarray:
    """(I - coef)^-1 via triangular solves in a topological order."""
    n = coef.shape[0]
    order = _topological_order(coef)
    if order is None:
        raise InputError("coefficient matrix is cyclic; (I - C) is not unitriangular")
    perm = np.asarray(order)
    lower = np.eye(n) - coef[np.ix_(perm, perm)]
    inv_perm = solve_triangular(lower, np.eye(n), lower=True, unit_diagonal=True)
    out = np.empty((n, n))
    out[np.ix_(perm, perm)] = inv_perm
    return out


def total_effects(model: ModelSpec) -> TotalEffects:
    ell = _unitriangular_inverse(model.A)
    oo = _unitriangular_inverse(model.B)
    ol = oo @ model.Lambda @ ell
    return TotalEffects(effects_ll=ell, effects_ol=ol, effects_oo=oo)


def mixing_matrix(model: ModelSpec) -> np.ndarray:
    """p x (q + p) matrix M with X = M u, u = (eps, e)."""
    eff = total_effects(model)
    return np.hstack([eff.effects_ol, eff.effects_oo])


def disturbance_cumulant_table(model: ModelSpec) -> np.ndarray:
    """kappa[k, c] = order-k cumulant of basis disturbance c (rows 0..6)."""
    specs = list(model.latent_disturbances) + list(model.observed_disturbances)
    table = np.zeros((MAX_ORDER + 1, len(specs)))
    for c, d in enumerate(specs):
        for k in range(MIN_ORDER, MAX_ORDER + 1):
            table[k, c] = d.cumulant(k)
    return table


def population_cumulant(model: ModelSpec, indices: tuple[int, ...]) -> float:
    """Exact joint cumulant of observed variables with the given indices."""
    k = len(indices)
    if not MIN_ORDER <= k <= MAX_ORDER:
        raise InputError(f"order must be in {MIN_ORDER}..{MAX_ORDER}")
    M = mixing_matrix(model)
    kappa = disturbance_cumulant_table(model)
    prod = np.ones(M.shape[1])
    for i in indices:
        prod = prod * M[i]
    return float(np.sum(prod * kappa[k]))


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleMatrix:
    """n x p observational data with column names."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] < 1:
            raise InputError("sample matrix must be n x p with n >= 1")
        if values.shape[1] != len(self.names):
            raise InputError("number of names must match number of columns")
        if len(set(self.names)) != len(self.names):
            raise InputError("column names must be unique")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InputError(f"non-finite value at row {bad[0]}, column {bad[1]}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def select(self, names: list[str]) -> "SampleMatrix":
        idx = [self.names.index(n) for n in names]
        return SampleMatrix(tuple(names), self.values[:, idx])

    def save_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(self.names) + "\n")
            for row in self.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @staticmethod
    def load_csv(path: str) -> "SampleMatrix":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        if not lines:
            raise InputError(f"{path}: empty file")
        names = tuple(s.strip() for s in lines[0].split(","))
        rows = []
        for r, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            cells = line.split(",")
            if len(cells) != len(names):
                raise InputError(f"{path}:{r}: expected {len(names)} cells, got {len(cells)}")
            row = []
            for c, cell in enumerate(cells):
                try:
                    v = float(cell)
                except ValueError as exc:
                    raise InputError(f"{path}:{r}: column {names[c]!r}: "
                                     f"not a number: {cell!r}") from exc
                if not np.isfinite(v):
                    raise InputError(f"{path}:{r}: column {names[c]!r}: non-finite value")
                row.append(v)
            rows.append(row)
        if not rows:
            raise InputError(f"{path}: no data rows")
        return SampleMatrix(names, np.asarray(rows))


def simulate(model: ModelSpec, n: int, seed: int) -> SampleMatrix:
    """Draw n i.i.d. rows; deterministic per seed."""
    if n < 1:
        raise InputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    draws = [d.sample(rng, n) for d in model.latent_disturbances]
    draws += [d.sample(rng, n) for d in model.observed_disturbances]
    u = np.column_stack(draws)
    X = u @ mixing_matrix(model).T
    return SampleMatrix(model.names, X)
