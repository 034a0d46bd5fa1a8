"""Pairwise identification primitives built on joint cumulants.

For a dependent pair (x, y) write both as mixes of their shared independent
sources plus own noise:

    x = sum_h a_h S_h + v_x,    y = sum_h b_h S_h + beta v_x + v_y,

where beta is the total effect of x on y (zero if none). Stacking cumulants
cum(x^(k-r), y^r) into the matrices below turns the number of shared sources
and the presence of beta into a numeric rank, and the effects {beta, b_h/a_h}
into roots of a determinant polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .context import BaseContext, Series
from .errors import (DegeneratePolynomialError, IdentificationError,
                     IllConditionedSystemError, InputError, LatentBoundError,
                     NoisyRootsError, UndeterminedTestError)

DIRECTION_NONE = "none"
DIRECTION_X_TO_Y = "x_to_y"
DIRECTION_Y_TO_X = "y_to_x"


def matrix_rows(k1: int, k2: int) -> list[tuple[int, int]]:
    """Row index pairs (d, s): order k1+d, with s heavy indices in the prefix."""
    return [(d, s) for d in range(k2 - k1 + 1) for s in range(d + 1)]


def choose_orders(ell: int) -> tuple[int, int] | None:
    """(k1, k2) for testing ell shared sources: k1 = ell + 2, k2 the smallest
    order granting at least k1 rows; None when order six is not enough."""
    k1 = ell + 2
    for k2 in range(k1 + 1, 7):
        if len(matrix_rows(k1, k2)) >= k1:
            return k1, k2
    return None


def structural_ell_max() -> int:
    """Largest shared-source count testable with order <= 6 cumulants."""
    ell = 0
    while choose_orders(ell + 1) is not None:
        ell += 1
    return ell


def _stack(table: dict[tuple[int, int], float], k1: int, k2: int) -> np.ndarray:
    rows = matrix_rows(k1, k2)
    out = np.empty((len(rows), k1))
    for r_idx, (d, s) in enumerate(rows):
        for t in range(k1):
            out[r_idx, t] = table[(k1 + d, s + t)]
    return out


def cumulant_matrix(ctx: BaseContext, x: Series, y: Series,
                    k1: int, k2: int) -> np.ndarray:
    """The direction-probe matrix for the hypothesis "x causes y".

    Entry (row (d, s), column t) is the cumulant of order k1 + d with s + t
    copies of x and the rest y; rows are enumerated d = 0..k2-k1, s = 0..d,
    columns t = 0..k1-1. With ell shared sources its generic rank is
    min(ell + 1, m), rising to min(ell + 2, m) exactly when x has a nonzero
    total effect on y, where m = min(#rows, k1).
    """
    if not 2 <= k1 < k2 <= 6:
        raise InputError("need 2 <= k1 < k2 <= 6")
    return _stack(ctx.pair_table(y, x), k1, k2)


def numeric_rank(matrix: np.ndarray, tau_s: float, abs_floor: float = 1e-12) -> int:
    """Count singular values with sigma_r / sigma_1 > tau_s; all-zero gives 0."""
    svals = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if svals.size == 0 or svals[0] <= abs_floor:
        return 0
    return int(np.sum(svals / svals[0] > tau_s))


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Scale rows to unit norm (zero rows kept); rank is unchanged, but the
    singular value ratios stop depending on the cumulant order of each row."""
    matrix = np.asarray(matrix, dtype=float)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


@dataclass(frozen=True)
class ConfounderCount:
    """Shared-source count and causal direction for one pair."""

    ell: int
    direction: str  # "none", "x_to_y", "y_to_x"
    rank_xy: int
    rank_yx: int
    k1: int
    k2: int
    effect_xy: float | None = None  # smallest-magnitude root, x onto y
    effect_yx: float | None = None


def _vander_residual(nodes: np.ndarray, table: dict) -> float:
    vander = np.vander(nodes, N=5, increasing=True).T
    rhs = np.array([table[(5, r)] for r in range(5)])
    sol, *_ = np.linalg.lstsq(vander, rhs, rcond=None)
    scale = max(float(np.linalg.norm(rhs)), 1e-12)
    return float(np.linalg.norm(vander @ sol - rhs)) / scale


@dataclass(frozen=True)
class OrientationProbe:
    """Root diagnostics of one pair orientation a -> b at a trial count.

    effect      |smallest essential root|: the total-effect estimate of a on b
    fit         residual of refitting the roots on fifth-order cumulant rows;
                vanishes only for consistent orientations
    cross_fit   half-sample version: nodes from one half scored on the other,
                immune to adaptive overfitting; drives count selection
    effect_se   block-jackknife standard error of the effect estimate
    root_se     worst per-root jackknife standard error: the causal
                orientation of a directed pair has structural, stable roots
                while the reverse orientation's polynomial is a noise
                direction of a full-rank matrix
    """

    effect: float
    fit: float
    cross_fit: float
    effect_se: float
    root_se: float


def _effect_and_fit(ctx: BaseContext, a: Series, b: Series, ell: int,
                    cfg: Config) -> OrientationProbe | None:
    label = f"({a.label}, {b.label})"
    table = ctx.pair_table(a, b)
    try:
        roots = roots_from_table(table, ell, cfg, label)
    except IdentificationError:
        return None
    fit = _vander_residual(roots, table)
    # the total-effect estimate ignores redundant roots: a structural node
    # (the zero of an absent path included) degrades the fit when dropped,
    # while an overfitted node does not
    essential = roots
    if roots.shape[0] > 1:
        keep = []
        for idx in range(roots.shape[0]):
            rest = np.delete(roots, idx)
            if _vander_residual(rest, table) > max(2.0 * fit, 1e-10):
                keep.append(roots[idx])
        if keep:
            essential = np.asarray(keep)
    beta = float(np.min(np.abs(essential)))
    loose = cfg.replace(imag_tol=max(cfg.imag_tol, 0.5))
    halves = ctx.pair_table_halves(a, b)
    if halves:
        cross_fits = []
        for train, test in halves:
            try:
                nodes = roots_from_table(train, ell, loose, label)
            except IdentificationError:
                continue
            cross_fits.append(_vander_residual(nodes, test))
        cross = float(np.mean(cross_fits)) if cross_fits else np.inf
    else:
        cross = fit
    effect_se = 0.0
    root_se = 0.0
    replicates = (ctx.pair_table_replicates(a, b, cfg.jackknife_blocks)
                  if cfg.jackknife_z > 0 else [])
    if replicates:
        beta_draws = []
        root_draws = []
        for t in replicates:
            try:
                rep_roots = roots_from_table(t, ell, loose, label)
            except IdentificationError:
                continue
            beta_draws.append(float(np.min(np.abs(rep_roots))))
            if rep_roots.shape[0] == roots.shape[0]:
                root_draws.append(np.sort(rep_roots))

        def jack_se(arr: np.ndarray) -> np.ndarray:
            n_reps = arr.shape[0]
            return np.sqrt((n_reps - 1) / n_reps
                           * np.sum((arr - arr.mean(axis=0)) ** 2, axis=0))

        effect_se = (float(jack_se(np.asarray(beta_draws)[:, None])[0])
                     if len(beta_draws) >= 2 else np.inf)
        # replicate root extraction failing on most blocks is itself
        # instability, so the orientation reads as maximally unstable
        root_se = (float(jack_se(np.asarray(root_draws)).max())
                   if len(root_draws) >= max(2, len(replicates) // 2)
                   else np.inf)
    return OrientationProbe(effect=beta, fit=fit, cross_fit=cross,
                            effect_se=effect_se, root_se=root_se)


def confounders_and_direction(ctx: BaseContext, x: Series, y: Series,
                              cfg: Config) -> ConfounderCount:
    """Shared-source count and direction for a dependent pair.

    Count selection combines the rank law with root-polynomial consistency.
    At the true count the probe matrix of the non-ancestral orientation
    generically has rank ell + 1 while the ancestral orientation reaches
    ell + 2, so min(rank_xy, rank_yx) = ell + 1; and the recovered effect
    nodes reproduce the higher-order cumulants, so the orientation fit
    vanishes. Among rank-eligible counts the smallest one whose fit is
    within fit_escalation of the best fit wins, which keeps the exact
    population behavior and stops a noisy rank from settling on too few
    sources.

    The direction comes from the root polynomials: each orientation's
    smallest-magnitude root estimates the corresponding total effect, which
    is zero in both orientations iff no directed path exists. Magnitudes
    are thresholded at tau_dir; when both orientations clear it (the
    reverse polynomial of a directed pair has no zero root either), the
    orientation with the consistent overdetermined cumulant fit wins.
    """
    scan = []
    for ell in range(cfg.ell_max + 1):
        orders = choose_orders(ell)
        if orders is None:
            break
        k1, k2 = orders
        rank_xy = numeric_rank(cumulant_matrix(ctx, x, y, k1, k2),
                               cfg.tau_s, cfg.abs_sv_floor)
        rank_yx = numeric_rank(cumulant_matrix(ctx, y, x, k1, k2),
                               cfg.tau_s, cfg.abs_sv_floor)
        rank_ok = min(rank_xy, rank_yx) == ell + 1
        onto_y = _effect_and_fit(ctx, x, y, ell, cfg)
        onto_x = _effect_and_fit(ctx, y, x, ell, cfg)
        fits = [side.cross_fit for side in (onto_y, onto_x) if side is not None]
        min_fit = min(fits) if fits else np.inf
        scan.append((ell, rank_ok, min_fit, rank_xy, rank_yx, k1, k2,
                     onto_y, onto_x))
    if not scan:
        raise LatentBoundError(
            f"no testable shared-source count for ({x.label}, {y.label})")
    best_fit = min(row[2] for row in scan)
    if not np.isfinite(best_fit):
        raise LatentBoundError(
            f"no shared-source count <= {cfg.ell_max} fits pair "
            f"({x.label}, {y.label})")
    if not any(row[1] for row in scan) and cfg.jackknife_z == 0:
        # exact inputs enforce the rank law strictly; sampled inputs fall
        # back to consistency-based selection when noisy ranks misfire
        raise LatentBoundError(
            f"no shared-source count <= {cfg.ell_max} fits pair "
            f"({x.label}, {y.label})")
    cutoff = max(1e-9, cfg.fit_escalation * best_fit)
    admissible = [row for row in scan if row[2] <= cutoff]
    chosen = next((row for row in admissible if row[1]), admissible[0])
    ell, _, _, rank_xy, rank_yx, k1, k2, onto_y, onto_x = chosen

    # Direction, first by fit asymmetry at the admissible counts: below the
    # true count both orientations misfit comparably, above it one extra
    # node represents either orientation exactly, and at the true count
    # only the causal orientation is consistent. When fits cannot decide,
    # root stability takes over: at the true count the causal orientation's
    # roots are structural while the reverse polynomial is a noise
    # direction of a full-rank matrix, so its roots wander across blocks.
    direction = DIRECTION_NONE
    best_row, best_ratio = None, 1.0
    for row in admissible:
        oy, ox = row[7], row[8]
        if oy is None or ox is None:
            continue
        hi, lo = max(oy.fit, ox.fit), min(oy.fit, ox.fit)
        if hi <= 1e-9:
            continue  # both orientations exact: no directional information
        ratio = hi / max(lo, 1e-12)
        if ratio > best_ratio:
            best_ratio = ratio
            best_row = row
    def decide(winner: OrientationProbe, loser: OrientationProbe | None,
               tag: str) -> str:
        # a directed pair has no zero root in either orientation, so both
        # effect estimates must clear the floor (unusable reverse roots,
        # e.g. complex ones, already indicate a direction); the winner
        # additionally clears its own noise allowance
        if winner.effect <= cfg.tau_dir + cfg.jackknife_z * winner.effect_se:
            return DIRECTION_NONE
        if loser is not None and loser.effect <= cfg.tau_dir:
            return DIRECTION_NONE
        return tag

    if best_row is not None and best_ratio >= cfg.fit_margin:
        oy, ox = best_row[7], best_row[8]
        if oy.fit <= ox.fit:
            direction = decide(oy, ox, DIRECTION_X_TO_Y)
        else:
            direction = decide(ox, oy, DIRECTION_Y_TO_X)
    if direction == DIRECTION_NONE:
        best_row, best_ratio = None, 1.0
        for row in scan:
            oy, ox = row[7], row[8]
            if oy is None or ox is None:
                continue
            lo = min(oy.root_se, ox.root_se)
            hi = max(oy.root_se, ox.root_se)
            if not 0.0 < lo <= 0.15:
                continue  # needs one genuinely stable orientation
            ratio = hi / lo
            if ratio > best_ratio:
                best_ratio = ratio
                best_row = row
        if best_row is not None and best_ratio >= cfg.stability_margin:
            oy, ox = best_row[7], best_row[8]
            if oy.root_se <= ox.root_se:
                direction = decide(oy, ox, DIRECTION_X_TO_Y)
            else:
                direction = decide(ox, oy, DIRECTION_Y_TO_X)
    return ConfounderCount(
        ell, direction, rank_xy, rank_yx, k1, k2,
        effect_xy=None if onto_y is None else onto_y.effect,
        effect_yx=None if onto_x is None else onto_x.effect)


def roots_from_table(table: dict[tuple[int, int], float], ell: int,
                     cfg: Config, label: str = "") -> np.ndarray:
    """Real roots {beta, b_1/a_1, ..., b_ell/a_ell}: every effect onto y.

    The stacked matrix whose columns count y has ell + 2 columns but rank
    ell + 1, and prepending the symbolic row (1, alpha, ..., alpha^(ell+1))
    makes any minor determinant through that row a polynomial vanishing at
    the total effect of x on y and at the per-source effects on y (unit
    normalization in x). Equivalently the polynomial's coefficient vector
    spans the matrix null space; taking the smallest right singular vector
    of the row-normalized stack uses every row at once, which also survives
    the row degeneracies that equal disturbance laws create. Returned
    ascending.
    """
    orders = choose_orders(ell)
    if orders is None:
        raise InputError(f"ell = {ell} needs cumulants beyond order 6")
    k1, k2 = orders
    data = _stack(table, k1, k2)
    norms = np.linalg.norm(data, axis=1, keepdims=True)
    keep = norms[:, 0] > 0
    if int(keep.sum()) < ell + 1:
        raise DegeneratePolynomialError(f"vanishing cumulant rows for {label}")
    data = data[keep] / norms[keep]
    _, svals, vt = np.linalg.svd(data)
    if svals[ell] <= 1e3 * cfg.abs_sv_floor:
        raise DegeneratePolynomialError(f"rank below {ell + 1} for {label}")
    coefs = vt[-1]
    if abs(coefs[-1]) <= 1e-9:
        raise DegeneratePolynomialError(f"degenerate root polynomial for {label}")
    roots = np.roots(coefs[::-1])
    roots = _polish(coefs, roots)
    out = []
    for r in roots:
        if abs(r.imag) > cfg.imag_tol * (1.0 + abs(r.real)):
            raise NoisyRootsError(f"complex roots for {label}: {roots}")
        out.append(r.real)
    return np.sort(np.asarray(out))


def total_effect_roots(ctx: BaseContext, x: Series, y: Series, ell: int,
                       cfg: Config) -> np.ndarray:
    """Roots of the pair polynomial: see roots_from_table."""
    return roots_from_table(ctx.pair_table(x, y), ell, cfg,
                            f"({x.label}, {y.label})")


def _polish(coefs: np.ndarray, roots: np.ndarray, steps: int = 2) -> np.ndarray:
    deriv = coefs[1:] * np.arange(1, len(coefs))
    out = roots.astype(complex)
    for _ in range(steps):
        val = np.polyval(coefs[::-1], out)
        dval = np.polyval(deriv[::-1], out)
        ok = np.abs(dval) > 1e-12
        out[ok] = out[ok] - val[ok] / dval[ok]
    return out


@dataclass(frozen=True)
class LatentCumulantSolution:
    """Order-k cumulants recovered from one pair.

    own      cumulant of x's own disturbance
    shared   cumulants of the shared sources, normalized to coefficient one
             in x, aligned with the node order used in the solve
    ambiguous  True when the root-to-role assignment is not identified and
             the candidate shared values are all solution components
    """

    own: float
    shared: tuple[float, ...]
    ambiguous: bool


def solution_from_table(table: dict[tuple[int, int], float], nodes: np.ndarray,
                        k: int, cfg: Config, label: str = "",
                        ambiguous: bool = False) -> LatentCumulantSolution:
    nodes = np.asarray(nodes, dtype=float)
    m = nodes.shape[0]
    if k < m:
        raise InputError(f"order {k} too small for {m - 1} shared sources")
    vander = np.vander(nodes, N=m, increasing=True).T
    cond = np.linalg.cond(vander)
    if not np.isfinite(cond) or cond > cfg.vander_cond_max:
        raise IllConditionedSystemError(
            f"Vandermonde condition {cond:.3g} exceeds cap for {label}")
    rhs = np.array([table[(k, r)] for r in range(m)])
    sol = np.linalg.solve(vander, rhs)
    return LatentCumulantSolution(own=float(sol[0]),
                                  shared=tuple(float(v) for v in sol[1:]),
                                  ambiguous=ambiguous)


def latent_cumulants(ctx: BaseContext, x: Series, y: Series,
                     nodes: np.ndarray, k: int, cfg: Config,
                     ambiguous: bool = False) -> LatentCumulantSolution:
    """Solve the Vandermonde system tying pair cumulants to source cumulants.

    nodes[0] is the total effect of x on y; nodes[1:] are the per-source
    effects on y. Row r of the square system is cum(x^(k-r), y^r) for
    r = 0..len(nodes)-1, which requires k >= len(nodes).
    """
    return solution_from_table(ctx.pair_table(x, y), nodes, k, cfg,
                               f"({x.label}, {y.label})", ambiguous)


def _criterion_from_table(table: dict, cum_floor: float, label: str) -> float:
    c33 = table[(6, 3)]
    c42 = table[(6, 2)]
    c24 = table[(6, 4)]
    den = max(c33 * c33, abs(c42 * c24))
    if den <= cum_floor ** 2:
        raise UndeterminedTestError(
            f"sixth-cumulant criterion undetermined for {label}")
    return (c33 * c33 - c42 * c24) / den


def sixth_order_criterion(ctx: BaseContext, x: Series, y: Series,
                          cfg: Config) -> float:
    """Relative defect of the single-confounder sixth-cumulant identity.

    Zero exactly when the pair shares one source and neither affects the
    other; bounded away from zero otherwise.
    """
    return abs(_criterion_from_table(ctx.pair_table(x, y), cfg.cum_floor,
                                     f"({x.label}, {y.label})"))


def criterion_noise_scale(ctx: BaseContext, x: Series, y: Series,
                          cfg: Config) -> float:
    """Block-jackknife standard error of the signed criterion; zero on
    exact (population) contexts."""
    tables = ctx.pair_table_replicates(x, y, cfg.jackknife_blocks)
    if not tables:
        return 0.0
    label = f"({x.label}, {y.label})"
    reps = np.array([_criterion_from_table(t, cfg.cum_floor, label)
                     for t in tables])
    b = reps.shape[0]
    return float(np.sqrt((b - 1) / b * np.sum((reps - reps.mean()) ** 2)))


def single_confounder_test(ctx: BaseContext, x: Series, y: Series,
                           cfg: Config) -> bool:
    """One shared source and no directed path between x and y?

    variant "a7" thresholds the sixth-cumulant identity at tau_o plus a
    jackknife allowance for its own sampling noise (the allowance is zero
    on exact inputs, recovering the bare threshold); variant "rank" asks
    the rank probes for exactly one source and no direction.
    """
    count = confounders_and_direction(ctx, x, y, cfg)
    structural = count.ell == 1 and count.direction == DIRECTION_NONE
    if cfg.variant != "a7":
        return structural
    # On exact inputs the criterion vanishes precisely on the pairs the
    # count probe accepts (the two conditions are equivalent), so the
    # conjunction changes nothing there; on samples the noisy criterion
    # keeps only veto power and the count probe carries the discrimination.
    crit = sixth_order_criterion(ctx, x, y, cfg)
    allowance = cfg.jackknife_z * criterion_noise_scale(ctx, x, y, cfg) \
        if cfg.jackknife_z > 0 else 0.0
    return structural and crit < cfg.tau_o + allowance
