"""Stage I: over-segmented clusters and observed ancestral relations.

Every dependent pair is merged when either (a) its triad residual is
independent of all other variables, or (b) the rank probes detect a directed
total effect (an ancestral relation; under the no-cross-cluster-edge
assumption this also implies shared latent parents). Overlapping pair
clusters are merged to a fixpoint through union-find.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .context import BaseContext
from .errors import CyclicEvidenceError, IdentificationError
from .identify import DIRECTION_X_TO_Y, DIRECTION_Y_TO_X, confounders_and_direction
from .independence import triad_holds


@dataclass
class ObservedAncestry:
    """Observed-variable ancestor sets, kept transitively closed."""

    ancestors: dict[int, set[int]]

    def closure(self) -> None:
        changed = True
        while changed:
            changed = False
            for j, anc in self.ancestors.items():
                extra = set()
                for a in anc:
                    extra |= self.ancestors[a]
                extra -= anc
                extra.discard(j)
                if extra:
                    anc |= extra
                    changed = True

    def pairs(self) -> set[tuple[int, int]]:
        return {(a, j) for j, anc in self.ancestors.items() for a in anc}


@dataclass
class ClusterSet:
    """Partition of the observed variables with one latent id per block."""

    members: list[frozenset[int]]
    latent_ids: list[int]
    representatives: list[int]

    def cluster_of(self, col: int) -> int:
        for idx, block in enumerate(self.members):
            if col in block:
                return idx
        raise KeyError(col)


@dataclass
class Stage1Result:
    clusters: ClusterSet
    ancestry: ObservedAncestry
    dependent: np.ndarray  # p x p boolean, symmetric
    diagnostics: list[str] = field(default_factory=list)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def cluster_representative(cluster: frozenset[int],
                           ancestry: ObservedAncestry,
                           diagnostics: list[str] | None = None) -> int:
    """The member without ancestors inside the cluster; ties take the lowest
    column index (with a diagnostic). All-members-have-ancestors is cyclic
    evidence and raises."""
    free = sorted(c for c in cluster
                  if not (ancestry.ancestors.get(c, set()) & cluster))
    if not free:
        raise CyclicEvidenceError(f"no ancestor-free member in {sorted(cluster)}")
    if len(free) > 1 and len(cluster) > 1 and diagnostics is not None:
        diagnostics.append(
            f"representative tie in {sorted(cluster)}: picked {free[0]}")
    return free[0]


def estimate_clusters(ctx: BaseContext, cfg: Config) -> Stage1Result:
    p = ctx.n_vars
    diagnostics: list[str] = []
    base = [ctx.base(i) for i in range(p)]
    dep = np.zeros((p, p), dtype=bool)
    for i in range(p):
        for j in range(i + 1, p):
            dep[i, j] = dep[j, i] = ctx.dependent(base[i], base[j])

    uf = _UnionFind(p)
    ancestry = ObservedAncestry({i: set() for i in range(p)})
    for i in range(p):
        for j in range(i + 1, p):
            if not dep[i, j]:
                continue
            directed = False
            try:
                count = confounders_and_direction(ctx, base[i], base[j], cfg)
            except IdentificationError as exc:
                diagnostics.append(f"pair ({i},{j}): {exc}")
                count = None
            if count is not None and count.direction == DIRECTION_X_TO_Y:
                ancestry.ancestors[j].add(i)
                uf.union(i, j)
                directed = True
            elif count is not None and count.direction == DIRECTION_Y_TO_X:
                ancestry.ancestors[i].add(j)
                uf.union(i, j)
                directed = True
            if not directed:
                others = [k for k in range(p) if k != i and k != j]
                if triad_holds(ctx, i, j, others, cfg, diagnostics):
                    uf.union(i, j)

    ancestry.closure()
    groups: dict[int, set[int]] = {}
    for i in range(p):
        groups.setdefault(uf.find(i), set()).add(i)
    members = [frozenset(groups[r]) for r in sorted(groups)]
    reps = []
    for block in members:
        try:
            reps.append(cluster_representative(block, ancestry, diagnostics))
        except CyclicEvidenceError as exc:
            diagnostics.append(f"cyclic evidence: {exc}; picked least-ancestored member")
            reps.append(min(block, key=lambda c: (len(ancestry.ancestors[c] & block), c)))
    clusters = ClusterSet(members=members,
                          latent_ids=list(range(len(members))),
                          representatives=reps)
    return Stage1Result(clusters=clusters, ancestry=ancestry,
                        dependent=dep, diagnostics=diagnostics)
