"""Stage III: prune the latent ancestral closure to the exact edge set.

For each latent, walk its ancestors from nearest to farthest in the causal
order. The running residual starts at the latent's representative column;
each ancestor whose de-confounded statistic stays dependent on the residual
contributes an edge whose coefficient is the effect ratio, and that
contribution is peeled off before testing the next ancestor. Independence
means the edge is absent (the coefficient is never thresholded).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .context import BaseContext, Series
from .errors import IdentificationError
from .independence import effect_ratio
from .stage2 import Stage2Result


@dataclass
class LatentAdjacency:
    """adj[i, j] is True iff latent j (in order position j) points at latent i."""

    order: list[int]
    adj: np.ndarray
    coeff: np.ndarray
    diagnostics: list[str] = field(default_factory=list)

    def edges(self) -> list[tuple[int, int, float]]:
        out = []
        for i in range(self.adj.shape[0]):
            for j in range(self.adj.shape[1]):
                if self.adj[i, j]:
                    out.append((self.order[j], self.order[i], float(self.coeff[i, j])))
        return out


def estimate_latent_coefficient(ctx: BaseContext, residual: Series,
                                source_stat: Series, cfg: Config) -> float:
    """Zero when independent, else the effect ratio (the edge coefficient)."""
    if not ctx.dependent(residual, source_stat):
        return 0.0
    return effect_ratio(ctx, residual, source_stat, cfg)


def estimate_latent_structure(ctx: BaseContext, stage2: Stage2Result,
                              cfg: Config) -> LatentAdjacency:
    order = stage2.ancestry.order
    pos = {cid: idx for idx, cid in enumerate(order)}
    q = len(order)
    adj = np.zeros((q, q), dtype=bool)
    coeff = np.zeros((q, q))
    diagnostics: list[str] = []
    reps = dict(zip(stage2.clusters.latent_ids, stage2.clusters.representatives))

    for cid in order:
        target = pos[cid]
        ancestors = sorted(stage2.ancestry.ancestors.get(cid, set()),
                           key=lambda a: -pos[a])  # nearest in the order first
        if not ancestors:
            continue
        residual = ctx.base(reps[cid])
        peeled: list[str] = []
        for a in ancestors:
            stat = stage2.source_series.get(a)
            if stat is None:
                diagnostics.append(
                    f"latent {a} has no source statistic; edge to {cid} skipped")
                continue
            try:
                c = estimate_latent_coefficient(ctx, residual, stat, cfg)
            except IdentificationError as exc:
                diagnostics.append(f"edge {a}->{cid}: {exc}")
                continue
            if c != 0.0:
                adj[target, pos[a]] = True
                # map back from standardized to raw units for reporting
                coeff[target, pos[a]] = c * ctx.scale(reps[cid]) / ctx.scale(reps[a])
                peeled.append(str(a))
                residual = ctx.linear_comb(
                    [(1.0, residual), (-c, ctx.base(reps[a]))],
                    f"peeled({ctx.names[reps[cid]]}|{','.join(peeled)})")
    return LatentAdjacency(order=list(order), adj=adj, coeff=coeff,
                           diagnostics=diagnostics)
