"""Run configuration: every threshold and algorithmic switch in one place."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import InputError

VARIANTS = ("a7", "rank")


@dataclass(frozen=True)
class Config:
    """Thresholds and switches for a discovery run.

    alpha_ind        significance level of the HSIC independence tests
    tau_s            relative singular-value cutoff for numeric rank
    tau_o            threshold of the sixth-cumulant single-confounder criterion
    tau_m1           cumulant-match variance threshold for initial sources
    tau_m2           cumulant-match variance threshold for later sources
    ell_max          upper bound on confounders tested per pair
    k_match          cumulant order used for source matching
    hsic_subsample   rows used by HSIC when n exceeds it
    variant          "a7" (sixth-cumulant criterion) or "rank" (rank-based)
    seed             run seed; drives subsampling and permutation nulls
    """

    alpha_ind: float = 0.05
    tau_s: float = 0.001
    tau_o: float = 0.001
    tau_m1: float = 0.001
    tau_m2: float = 0.01
    ell_max: int = 2
    k_match: int = 3
    hsic_subsample: int = 2000
    variant: str = "a7"
    seed: int = 0
    # smallest standardized total effect accepted as a directed path, the
    # fit-asymmetry factor required when only one orientation fires, and
    # the factor over the best orientation fit within which the smallest
    # shared-source count is kept
    tau_dir: float = 0.1
    fit_margin: float = 2.0
    fit_escalation: float = 4.0
    stability_margin: float = 6.0
    # numeric guards
    abs_sv_floor: float = 1e-12
    imag_tol: float = 0.05
    vander_cond_max: float = 1e8
    cov_floor: float = 1e-10
    cum_floor: float = 1e-12
    # sampling-noise allowance: thresholds on noisy cumulant statistics are
    # widened by jackknife_z standard errors (block jackknife); zero keeps
    # the bare thresholds (the population/oracle setting)
    jackknife_z: float = 3.0
    jackknife_blocks: int = 24
    # HSIC null computation
    hsic_permutations: int = 300
    hsic_perm_below_n: int = 200
    min_n: int = 25

    def __post_init__(self):
        for name in ("alpha_ind", "tau_s", "tau_o", "tau_m1", "tau_m2"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be > 0")
        if self.tau_m1 > self.tau_m2:
            raise InputError("tau_m1 must be <= tau_m2")
        if self.ell_max < 1:
            raise InputError("ell_max must be >= 1")
        if not 2 <= self.k_match <= 6:
            raise InputError("k_match must be in 2..6")
        if self.variant not in VARIANTS:
            raise InputError(f"variant must be one of {VARIANTS}")
        if self.hsic_subsample < 20:
            raise InputError("hsic_subsample must be >= 20")

    def replace(self, **kw) -> "Config":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def oracle_config(seed: int = 0) -> Config:
    """Thresholds for runs on exact population quantities.

    With closed-form cumulants the only nonzero magnitudes to reject are
    floating-point dust, so the decision thresholds shrink to numeric
    guards; sample defaults would misread structurally tiny but genuine
    singular-value ratios.
    """
    return Config(tau_s=1e-10, tau_o=1e-9, tau_m1=1e-9, tau_m2=1e-9,
                  tau_dir=1e-6, imag_tol=1e-6, jackknife_z=0.0, seed=seed)


def load_config_file(path: str) -> Config:
    """Parse a flat key=value config file ('#' starts a comment)."""
    values: dict = {}
    fields = {f.name: f.type for f in dataclasses.fields(Config)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in fields:
                raise InputError(f"{path}:{lineno}: unknown config key {key!r}")
            if key == "variant":
                values[key] = val
            elif key in ("ell_max", "k_match", "hsic_subsample", "seed",
                         "hsic_permutations", "hsic_perm_below_n", "min_n",
                         "jackknife_blocks"):
                values[key] = int(val)
            else:
                values[key] = float(val)
    return Config(**values)


def dump_config_file(cfg: Config, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in cfg.to_dict().items():
            fh.write(f"{key} = {val}\n")
