"""Dependence partitioning, the Triad residual, and de-confounding statistics."""

from __future__ import annotations

import numpy as np

from .config import Config
from .context import BaseContext, Series
from .errors import DegenerateTriadError

__all__ = [
    "dependence_components",
    "triad_residual",
    "triad_holds",
    "effect_ratio",
    "remove_sources",
]


def dependence_components(ctx: BaseContext, ids: list[int]) -> list[list[int]]:
    """Connected components of the pairwise-dependence graph over columns."""
    series = {i: ctx.base(i) for i in ids}
    parent = {i: i for i in ids}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for pos, i in enumerate(ids):
        for j in ids[pos + 1:]:
            if ctx.dependent(series[i], series[j]):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in ids:
        groups.setdefault(find(i), []).append(i)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def triad_residual(ctx: BaseContext, i: int, j: int, k: int, cfg: Config) -> Series:
    """X_i minus the Cov(X_i,X_k)/Cov(X_j,X_k) multiple of X_j.

    If {X_i, X_j} share their latent parents, this residual carries no trace
    of them and is independent of any outside X_k.
    """
    xi, xj, xk = ctx.base(i), ctx.base(j), ctx.base(k)
    denom = ctx.covariance(xj, xk)
    floor = cfg.cov_floor * np.sqrt(max(ctx.variance(xj) * ctx.variance(xk), 0.0))
    if abs(denom) <= max(floor, 1e-300):
        raise DegenerateTriadError(f"Cov({ctx.names[j]},{ctx.names[k]}) below floor")
    ratio = ctx.covariance(xi, xk) / denom
    label = f"triad({ctx.names[i]},{ctx.names[j]}|{ctx.names[k]})"
    return ctx.linear_comb([(1.0, xi), (-ratio, xj)], label)


def triad_holds(ctx: BaseContext, i: int, j: int, others: list[int],
                cfg: Config, diagnostics: list | None = None) -> bool:
    """True iff the triad residual of (i, j) is independent of every other.

    Variables independent of both i and j cannot carry shared content, so
    they are skipped (their denominator covariance is exactly zero anyway).
    A degenerate denominator against a dependent partner counts as failure.
    """
    xi, xj = ctx.base(i), ctx.base(j)
    for k in others:
        xk = ctx.base(k)
        if not ctx.dependent(xi, xk) and not ctx.dependent(xj, xk):
            continue
        try:
            resid = triad_residual(ctx, i, j, k, cfg)
        except DegenerateTriadError as exc:
            if diagnostics is not None:
                diagnostics.append(f"triad({i},{j}|{k}): {exc}")
            return False
        if ctx.dependent(resid, xk):
            return False
    return True


def effect_ratio(ctx: BaseContext, x: Series, h: Series, cfg: Config) -> float:
    """Fourth-cumulant ratio cum(x,x,h,h)/cum(x,h,h,h); zero for independent pairs.

    For h carrying a single shared source, the ratio equals the total effect
    of that source on x under h's normalization.
    """
    if not ctx.dependent(x, h):
        return 0.0
    table = ctx.pair_table(x, h)
    num = table[(4, 2)]
    den = table[(4, 3)]
    scale = max(abs(num), abs(den), 1.0)
    if abs(den) <= cfg.cum_floor * scale:
        raise DegenerateTriadError(
            f"fourth-cumulant denominator below floor for ({x.label}, {h.label})")
    return num / den


def remove_sources(ctx: BaseContext, base: Series, priors: list[Series],
                   cfg: Config) -> Series:
    """Subtract each prior source statistic, weighted by its effect ratio.

    With priors ordered by identification, the result replaces the removed
    sources' driving disturbances with observation-noise content only.
    """
    if not priors:
        return base
    terms: list[tuple[float, Series]] = [(1.0, base)]
    for h in priors:
        rho = effect_ratio(ctx, base, h, cfg)
        if rho != 0.0:
            terms.append((-rho, h))
    label = f"resid({base.label}|{','.join(h.label for h in priors)})"
    return ctx.linear_comb(terms, label)
