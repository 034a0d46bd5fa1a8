"""Stage II: latent source recursion, cluster merging, latent ancestry.

Within each dependent component of cluster representatives, a candidate
latent is a source when every dependent partner shares exactly one source
with it and the recovered third-order source cumulants agree across all
partners. Accepted sources are removed from their descendants through the
effect-ratio residual and the search recurses on the dependence components
of what remains. Mutually dependent sources found at the same depth are the
same latent, so their clusters merge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .context import BaseContext, Series
from .errors import (IdentificationError, IllConditionedSystemError,
                     InternalInvariantError)
from .identify import (roots_from_table, single_confounder_test,
                       solution_from_table)
from .independence import remove_sources
from .stage1 import ClusterSet, ObservedAncestry, Stage1Result, cluster_representative


@dataclass
class SourceCandidateScore:
    """Diagnostic record for one source-candidate evaluation."""

    latent_id: int
    level: int
    cumulant_values: list[float] = field(default_factory=list)
    s2: float | None = None
    s2_alt: float | None = None
    eligible: bool = True
    accepted: bool = False
    note: str = ""


@dataclass
class LatentAncestry:
    ancestors: dict[int, set[int]]
    order: list[int]  # topological: every ancestor precedes its descendants

    def closure(self) -> None:
        changed = True
        while changed:
            changed = False
            for j, anc in self.ancestors.items():
                extra = set()
                for a in anc:
                    extra |= self.ancestors.get(a, set())
                extra -= anc
                extra.discard(j)
                if extra:
                    anc |= extra
                    changed = True


@dataclass
class Stage2Result:
    clusters: ClusterSet
    ancestry: LatentAncestry
    source_series: dict[int, Series]  # de-confounded statistic per source
    candidate_log: list[SourceCandidateScore]
    diagnostics: list[str]


def _variance(values: list[float]) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.mean((arr - arr.mean()) ** 2)) if arr.size else 0.0


def cumulant_match_score(values: list[float]) -> float:
    """Mean squared deviation from the mean; zero means identical values."""
    return _variance(values)


class _OrderingState:
    def __init__(self, ctx: BaseContext, stage1: Stage1Result, cfg: Config):
        self.ctx = ctx
        self.cfg = cfg
        self.obs_ancestry = stage1.ancestry
        self.dependent = stage1.dependent
        self.members: dict[int, set[int]] = {
            cid: set(block) for cid, block in enumerate(stage1.clusters.members)}
        self.reps: dict[int, int] = {
            cid: rep for cid, rep in enumerate(stage1.clusters.representatives)}
        self.anc: dict[int, set[int]] = {cid: set() for cid in self.members}
        self.order: list[int] = []
        self.source_series: dict[int, Series] = {}
        self.log: list[SourceCandidateScore] = []
        self.diagnostics: list[str] = []
        self.n_initial = len(self.members)

    # -- helpers -------------------------------------------------------------
    def rep_series(self, cid: int) -> Series:
        return self.ctx.base(self.reps[cid])

    def _refresh_representative(self, cid: int) -> None:
        block = frozenset(self.members[cid])
        try:
            self.reps[cid] = cluster_representative(block, self.obs_ancestry,
                                                    self.diagnostics)
        except IdentificationError as exc:
            self.diagnostics.append(f"cluster {cid}: {exc}")
            self.reps[cid] = min(block)

    def _absorb(self, survivor: int, other: int) -> None:
        self.members[survivor] |= self.members.pop(other)
        self.anc[survivor] |= self.anc.pop(other)
        del self.reps[other]
        self._refresh_representative(survivor)

    # -- candidate evaluation --------------------------------------------------
    def _shared_value(self, table: dict, ell: int, mode: str,
                      label: str) -> list[float]:
        """Recovered order-k source cumulants from one pair table.

        mode "cross": one shared source and no directed path. The zero node
        is structural, and the source's effect node equals the fourth-order
        cumulant ratio of the pair, which is far steadier than a root
        estimate because its numerator and denominator share their extreme
        draws. The source cumulant then solves the remaining rows by least
        squares.

        mode "edge0"/"edge": the within-cluster partner with a directed
        path from the representative at the first / later levels; root
        roles are not identified, so both shared components come back as
        candidates.
        """
        cfg = self.cfg
        if mode == "cross":
            denom = table[(4, 1)]
            if abs(denom) <= cfg.cum_floor:
                raise IllConditionedSystemError(f"vanishing effect ratio for {label}")
            node = table[(4, 2)] / denom
            if abs(node) <= cfg.cum_floor:
                raise IllConditionedSystemError(f"vanishing source node for {label}")
            k = cfg.k_match
            num = sum(node ** r * table[(k, r)] for r in range(1, k))
            den = sum(node ** (2 * r) for r in range(1, k))
            return [num / den]
        roots = roots_from_table(table, ell, cfg, label)
        if mode == "edge0":
            sol = solution_from_table(table, roots, cfg.k_match, cfg, label,
                                      ambiguous=True)
            return [sol.own, sol.shared[0]]
        order = np.argsort(np.abs(roots))
        nodes = np.array([roots[order[0]], *sorted(roots[order[1:]])])
        sol = solution_from_table(table, nodes, cfg.k_match, cfg, label,
                                  ambiguous=(mode == "edge"))
        return list(sol.shared)

    def _value_args(self, has_edge: bool, level: int) -> tuple[int, str]:
        if not has_edge:
            return 1, "cross"
        return (1, "edge0") if level == 0 else (2, "edge")

    def _partner_value(self, series: Series, partner: Series,
                       ell: int = 1, mode: str = "cross") -> tuple[list[float], float | None]:
        """(candidate values, jackknife variance of the first value)."""
        label = f"({series.label}, {partner.label})"
        table = self.ctx.pair_table(series, partner)
        values = self._shared_value(table, ell, mode, label)
        if mode != "cross":
            # candidate order may swap across replicates; no stable variance
            return values, None
        replicates = self.ctx.pair_table_replicates(series, partner,
                                                    self.cfg.jackknife_blocks)
        if not replicates:
            return values, None
        draws = []
        for t in replicates:
            try:
                draws.append(self._shared_value(t, ell, mode, label)[0])
            except IdentificationError:
                continue
        if len(draws) < max(2, len(replicates) // 2):
            return values, None
        arr = np.asarray(draws)
        b = arr.shape[0]
        return values, float((b - 1) / b * np.sum((arr - arr.mean()) ** 2))

    def check_source(self, cid: int, comp: list[int], priors: list[Series],
                     level: int) -> tuple[bool, Series | None]:
        score = SourceCandidateScore(latent_id=cid, level=level)
        self.log.append(score)
        rep = self.reps[cid]
        series = remove_sources(self.ctx, self.ctx.base(rep), priors, self.cfg)
        others = [c for c in comp if c != cid]
        cluster_rest = sorted(self.members[cid] - {rep})
        x_prime = cluster_rest[0] if cluster_rest else None

        if x_prime is None and len(others) == 1:
            score.accepted = True
            score.note = "trivial: lone partner and single-member cluster"
            return True, series
        if len(others) + (0 if x_prime is None else 1) < 2:
            score.note = "not enough partners"
            return False, series

        dep_partners = [c for c in others
                        if self.ctx.dependent(series, self.rep_series(c))]
        tau = self.cfg.tau_m1 if level == 0 else self.cfg.tau_m2
        # values are reported on the raw scale of the representative column
        # (the de-confounded statistic of raw columns is exactly the raw
        # standard deviation times the standardized one), which is the scale
        # the match thresholds are calibrated for
        scale3 = self.ctx.scale(rep) ** self.cfg.k_match
        try:
            for c in dep_partners:
                if not single_confounder_test(self.ctx, series,
                                              self.rep_series(c), self.cfg):
                    score.eligible = False
                    score.note = f"single-confounder test failed against {c}"
                    return False, series
            values: list[float] = []
            noise_vars: list[float] = []
            for c in dep_partners:
                vals, var = self._partner_value(series, self.rep_series(c))
                values.append(vals[0] * scale3)
                if var is not None:
                    noise_vars.append(var * scale3 ** 2)
            score.cumulant_values = list(values)
            options: list[float] = []
            if x_prime is not None:
                has_edge = rep in self.obs_ancestry.ancestors.get(x_prime, set())
                ell, mode = self._value_args(has_edge, level)
                options, _ = self._partner_value(series, self.ctx.base(x_prime),
                                                 ell, mode)
                options = [opt * scale3 for opt in options]
            if len(options) <= 1:
                score.s2 = cumulant_match_score(values + options)
            else:
                scores = sorted(cumulant_match_score(values + [opt])
                                for opt in options)
                score.s2, score.s2_alt = scores[0], scores[-1]
        except IdentificationError as exc:
            score.eligible = False
            score.note = f"numeric failure: {exc}"
            return False, series
        # widen the match threshold by the expected spread that estimation
        # noise alone would produce among perfectly matching values; the
        # allowance is capped so real mismatches cannot hide behind an
        # inflated noise estimate
        m = len(values) + (1 if options else 0)
        floor = 0.0
        if noise_vars and m > 1 and self.cfg.jackknife_z > 0:
            floor = (self.cfg.jackknife_z * (1.0 - 1.0 / m)
                     * float(np.median(noise_vars)))
            floor = min(floor, 10.0 * tau)
        score.accepted = score.s2 < tau + floor
        return score.accepted, series

    # -- recursion ------------------------------------------------------------
    def find_sources(self, comp: list[int], priors: list[Series], level: int) -> None:
        if level > self.n_initial:
            raise InternalInvariantError("source recursion exceeded cluster count")
        comp = [cid for cid in comp if cid in self.members]
        if not comp:
            return
        if len(comp) == 1 and not priors:
            cid = comp[0]
            self.order.append(cid)
            self.source_series[cid] = self.rep_series(cid)
            return

        accepted: list[int] = []
        cand_series: dict[int, Series] = {}
        for cid in sorted(comp):
            if cid in self.order:
                continue
            ok, series = self.check_source(cid, comp, priors, level)
            cand_series[cid] = series
            if ok:
                accepted.append(cid)
        if not accepted:
            if level == 0:
                self.diagnostics.append(
                    f"no source found for component {sorted(comp)}; "
                    f"latent relations within it left unresolved")
            return

        # mutually dependent sources are one latent: merge their clusters
        group = {cid: cid for cid in accepted}

        def find(a: int) -> int:
            while group[a] != a:
                group[a] = group[group[a]]
                a = group[a]
            return a

        for pos, a in enumerate(accepted):
            for b in accepted[pos + 1:]:
                if self.ctx.dependent(cand_series[a], self.rep_series(b)):
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        keep, drop = ((ra, rb) if self.reps[ra] <= self.reps[rb]
                                      else (rb, ra))
                        group[drop] = keep
        survivors = sorted({find(a) for a in accepted},
                           key=lambda cid: self.reps[cid])
        for a in accepted:
            root = find(a)
            if root != a:
                self._absorb(root, a)

        remaining = [cid for cid in comp if cid in self.members
                     and cid not in survivors]
        for s in survivors:
            series = remove_sources(self.ctx, self.rep_series(s), priors, self.cfg)
            self.order.append(s)
            self.source_series[s] = series
            sub = [cid for cid in remaining if cid in self.members
                   and self.ctx.dependent(self.rep_series(cid), series)]
            for cid in sub:
                self.anc[cid].add(s)
            self.find_sources(sub, priors + [series], level + 1)


def estimate_latent_ancestry(ctx: BaseContext, stage1: Stage1Result,
                             cfg: Config) -> Stage2Result:
    state = _OrderingState(ctx, stage1, cfg)

    # dependence components over representatives, using stage-1 decisions
    comp_map: dict[int, int] = {}
    cids = sorted(state.members)
    for cid in cids:
        comp_map[cid] = cid
    for i, a in enumerate(cids):
        for b in cids[i + 1:]:
            if state.dependent[state.reps[a], state.reps[b]]:
                ra = comp_map[a]
                for cid, r in comp_map.items():
                    if r == comp_map[b]:
                        comp_map[cid] = ra
    components: dict[int, list[int]] = {}
    for cid in cids:
        components.setdefault(comp_map[cid], []).append(cid)

    for root in sorted(components):
        state.find_sources(sorted(components[root]), [], 0)

    # clusters never identified as sources close out the topological order
    leftovers = sorted((cid for cid in state.members if cid not in state.order),
                       key=lambda cid: (len(state.anc[cid]), state.reps[cid]))
    order = state.order + leftovers

    ancestry = LatentAncestry(
        ancestors={cid: set(state.anc[cid]) for cid in state.members},
        order=order)
    ancestry.closure()
    clusters = ClusterSet(
        members=[frozenset(state.members[cid]) for cid in order],
        latent_ids=list(order),
        representatives=[state.reps[cid] for cid in order])
    return Stage2Result(clusters=clusters, ancestry=ancestry,
                        source_series=state.source_series,
                        candidate_log=state.log,
                        diagnostics=state.diagnostics)
