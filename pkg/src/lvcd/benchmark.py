"""Benchmark harness: seeded grid over models, sample sizes, repetitions."""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

from .builtin import get_skeleton, random_model_instance
from .config import Config
from .model import simulate
from .pipeline import Metrics, discover, evaluate

# relative singular-value thresholds used per model in the reference runs
DEFAULT_TAU_S = {"a": 0.001, "b": 0.001, "c": 0.001,
                 "d": 0.005, "e": 0.005, "f": 0.005}

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Deterministic 63-bit seed from a tuple of integers."""
    h = 0x243F6A8885A308D3
    for p in parts:
        h = splitmix64((h ^ (p & _MASK)) & _MASK)
    return h >> 1


@dataclass(frozen=True)
class CellSpec:
    model: str
    model_index: int
    n: int
    rep: int
    cfg: Config


@dataclass
class CellResult:
    model: str
    n: int
    rep: int
    metrics: Metrics | None
    error: str = ""


@dataclass
class BenchmarkRow:
    model: str
    n: int
    reps: int
    n_cl: int = 0
    n_ls: int = 0
    n_os: int = 0
    n_cs: int = 0
    n_failed: int = 0
    pre_ll: float | None = None
    rec_ll: float | None = None
    f1_ll: float | None = None
    pre_oo: float | None = None
    rec_oo: float | None = None
    f1_oo: float | None = None


@dataclass
class BenchmarkReport:
    rows: list[BenchmarkRow]
    cells: list[CellResult] = field(default_factory=list)

    def to_csv(self) -> str:
        cols = ["model", "n", "reps", "N_cl", "N_ls", "N_os", "N_cs", "n_failed",
                "PRE_ll", "REC_ll", "F1_ll", "PRE_oo", "REC_oo", "F1_oo"]
        lines = [",".join(cols)]
        for r in self.rows:
            vals = [r.model, str(r.n), str(r.reps), str(r.n_cl), str(r.n_ls),
                    str(r.n_os), str(r.n_cs), str(r.n_failed)]
            for v in (r.pre_ll, r.rec_ll, r.f1_ll, r.pre_oo, r.rec_oo, r.f1_oo):
                vals.append("" if v is None else f"{v:.4f}")
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        header = (f"{'model':>6} {'n':>7} {'reps':>5} {'N_cl':>5} {'N_ls':>5} "
                  f"{'N_os':>5} {'N_cs':>5} {'fail':>5} {'F1_ll':>7} {'F1_oo':>7}")
        lines = [header, "-" * len(header)]
        for r in self.rows:
            f1l = "-" if r.f1_ll is None else f"{r.f1_ll:.3f}"
            f1o = "-" if r.f1_oo is None else f"{r.f1_oo:.3f}"
            lines.append(f"{r.model:>6} {r.n:>7} {r.reps:>5} {r.n_cl:>5} "
                         f"{r.n_ls:>5} {r.n_os:>5} {r.n_cs:>5} {r.n_failed:>5} "
                         f"{f1l:>7} {f1o:>7}")
        return "\n".join(lines) + "\n"


def run_cell(spec: CellSpec) -> CellResult:
    try:
        skeleton = get_skeleton(spec.model)
        model_seed = derive_seed(spec.cfg.seed, spec.model_index, spec.n, spec.rep, 1)
        data_seed = derive_seed(spec.cfg.seed, spec.model_index, spec.n, spec.rep, 2)
        disc_seed = derive_seed(spec.cfg.seed, spec.model_index, spec.n, spec.rep, 3)
        truth = random_model_instance(skeleton, model_seed)
        data = simulate(truth, spec.n, data_seed)
        result = discover(data, spec.cfg.replace(seed=disc_seed))
        return CellResult(spec.model, spec.n, spec.rep,
                          evaluate(result, truth))
    except Exception as exc:  # cell failures never abort the grid
        return CellResult(spec.model, spec.n, spec.rep, None,
                          error=f"{type(exc).__name__}: {exc}")


def run_benchmark(models: list[str], ns: list[int], reps: int, cfg: Config,
                  workers: int = 1,
                  tau_s_by_model: dict[str, float] | None = None) -> BenchmarkReport:
    """Grid run with per-cell derived seeds; byte-identical output for any
    worker count because results are reduced in grid order."""
    overrides = dict(DEFAULT_TAU_S)
    if tau_s_by_model:
        overrides.update(tau_s_by_model)
    specs: list[CellSpec] = []
    for m_idx, model in enumerate(models):
        cell_cfg = cfg.replace(tau_s=overrides.get(model, cfg.tau_s))
        for n in ns:
            for rep in range(reps):
                specs.append(CellSpec(model, m_idx, n, rep, cell_cfg))

    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run_cell, specs, chunksize=1))
    else:
        cells = [run_cell(s) for s in specs]

    rows: list[BenchmarkRow] = []
    idx = 0
    for model in models:
        for n in ns:
            chunk = cells[idx: idx + reps]
            idx += reps
            row = BenchmarkRow(model=model, n=n, reps=reps)
            ll_acc: list[tuple[float, float, float]] = []
            oo_acc: list[tuple[float, float, float]] = []
            for cell in chunk:
                if cell.metrics is None:
                    row.n_failed += 1
                    continue
                m = cell.metrics
                row.n_cl += m.cl_exact
                row.n_ls += m.ls_exact
                row.n_os += m.os_exact
                row.n_cs += m.cs_exact
                if m.pre_ll is not None:
                    ll_acc.append((m.pre_ll, m.rec_ll, m.f1_ll))
                    oo_acc.append((m.pre_oo, m.rec_oo, m.f1_oo))
            if ll_acc:
                row.pre_ll = sum(v[0] for v in ll_acc) / len(ll_acc)
                row.rec_ll = sum(v[1] for v in ll_acc) / len(ll_acc)
                row.f1_ll = sum(v[2] for v in ll_acc) / len(ll_acc)
                row.pre_oo = sum(v[0] for v in oo_acc) / len(oo_acc)
                row.rec_oo = sum(v[1] for v in oo_acc) / len(oo_acc)
                row.f1_oo = sum(v[2] for v in oo_acc) / len(oo_acc)
            rows.append(row)
    return BenchmarkReport(rows=rows, cells=cells)
