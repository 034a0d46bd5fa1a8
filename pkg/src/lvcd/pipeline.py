"""End-to-end discovery, evaluation against ground truth, and result IO."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .config import Config, oracle_config
from .context import BaseContext, PopulationContext, SampleContext
from .errors import InputError
from .model import ModelSpec, SampleMatrix, total_effects
from .stage1 import estimate_clusters
from .stage2 import estimate_latent_ancestry
from .stage3 import estimate_latent_structure


@dataclass
class DiscoveryResult:
    """Full output of one discovery run.

    Clusters are listed in the topological order of their latent parents and
    labeled L1, L2, ... in that order. The adjacency matrix rows/columns
    follow the same order: adj[i, j] is the edge L(j+1) -> L(i+1).
    """

    names: tuple[str, ...]
    clusters: list[frozenset[int]]
    latent_labels: list[str]
    latent_adj: np.ndarray
    latent_coeff: np.ndarray
    latent_ancestors: list[set[int]]  # positions into the latent order
    observed_ancestors: dict[int, set[int]]
    diagnostics: dict[str, list]
    config: Config
    runtime_ms: float = 0.0

    # -- canonical forms used by evaluation and serialization ----------------
    def cluster_names(self) -> list[list[str]]:
        return [sorted(self.names[i] for i in block) for block in self.clusters]

    def latent_edges(self) -> list[tuple[str, str, float]]:
        out = []
        q = len(self.latent_labels)
        for i in range(q):
            for j in range(q):
                if self.latent_adj[i, j]:
                    out.append((self.latent_labels[j], self.latent_labels[i],
                                float(self.latent_coeff[i, j])))
        return sorted(out)

    def observed_pairs(self) -> set[tuple[int, int]]:
        return {(a, d) for d, anc in self.observed_ancestors.items() for a in anc}

    def to_json_dict(self) -> dict:
        return {
            "clusters": self.cluster_names(),
            "latent_edges": [[p, c, w] for (p, c, w) in self.latent_edges()],
            "latent_ancestry": {
                self.latent_labels[i]: sorted(self.latent_labels[a]
                                              for a in self.latent_ancestors[i])
                for i in range(len(self.latent_labels))},
            "observed_ancestry": {
                self.names[d]: sorted(self.names[a] for a in anc)
                for d, anc in sorted(self.observed_ancestors.items()) if anc},
            "diagnostics": self.diagnostics,
            "config": self.config.to_dict(),
        }


def export_json(result: DiscoveryResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(result.to_json_dict(), fh, indent=2)
        fh.write("\n")


def result_json_text(result: DiscoveryResult) -> str:
    return json.dumps(result.to_json_dict(), indent=2) + "\n"


def discover_context(ctx: BaseContext, cfg: Config) -> DiscoveryResult:
    """Run the three stages on any context (sample or population)."""
    started = time.perf_counter()
    st1 = estimate_clusters(ctx, cfg)
    st2 = estimate_latent_ancestry(ctx, st1, cfg)
    st3 = estimate_latent_structure(ctx, st2, cfg)

    order = st2.ancestry.order
    pos = {cid: idx for idx, cid in enumerate(order)}
    labels = [f"L{idx + 1}" for idx in range(len(order))]
    latent_ancestors = [
        {pos[a] for a in st2.ancestry.ancestors.get(cid, set())} for cid in order]
    observed_anc = {i: set(st1.ancestry.ancestors.get(i, set()))
                    for i in range(ctx.n_vars)}
    diagnostics = {
        "stage1": list(st1.diagnostics),
        "stage2": list(st2.diagnostics),
        "stage3": list(st3.diagnostics),
        "candidates": [
            {"latent": labels[pos[s.latent_id]] if s.latent_id in pos else str(s.latent_id),
             "level": s.level,
             "values": [float(v) for v in s.cumulant_values],
             "s2": s.s2, "s2_alt": s.s2_alt,
             "eligible": s.eligible, "accepted": s.accepted,
             "note": s.note}
            for s in st2.candidate_log],
    }
    runtime_ms = (time.perf_counter() - started) * 1000.0
    return DiscoveryResult(
        names=tuple(ctx.names),
        clusters=list(st2.clusters.members),
        latent_labels=labels,
        latent_adj=st3.adj,
        latent_coeff=st3.coeff,
        latent_ancestors=latent_ancestors,
        observed_ancestors=observed_anc,
        diagnostics=diagnostics,
        config=cfg,
        runtime_ms=runtime_ms,
    )


def discover(data: SampleMatrix, cfg: Config | None = None) -> DiscoveryResult:
    """Discover the latent structure behind an observational sample."""
    cfg = cfg if cfg is not None else Config()
    if data.p < 2:
        raise InputError("need at least two observed variables")
    return discover_context(SampleContext(data, cfg), cfg)


def discover_population(model: ModelSpec, cfg: Config | None = None) -> DiscoveryResult:
    """Run the pipeline on exact population quantities instead of estimates."""
    cfg = cfg if cfg is not None else oracle_config()
    return discover_context(PopulationContext.from_model(model), cfg)


# ---------------------------------------------------------------------------
# evaluation against ground truth
# ---------------------------------------------------------------------------

@dataclass
class Metrics:
    cl_exact: bool
    ls_exact: bool
    os_exact: bool
    cs_exact: bool
    pre_ll: float | None = None
    rec_ll: float | None = None
    f1_ll: float | None = None
    pre_oo: float | None = None
    rec_oo: float | None = None
    f1_oo: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "cl_exact", "ls_exact", "os_exact", "cs_exact",
            "pre_ll", "rec_ll", "f1_ll", "pre_oo", "rec_oo", "f1_oo")}


def _prf(est: set, true: set) -> tuple[float, float, float]:
    tp = len(est & true)
    pre = tp / len(est) if est else (1.0 if not true else 0.0)
    rec = tp / len(true) if true else 1.0
    f1 = 0.0 if pre + rec == 0 else 2 * pre * rec / (pre + rec)
    return pre, rec, f1


def true_structures(model: ModelSpec) -> tuple[list[frozenset[int]],
                                               set[tuple[int, int]],
                                               set[tuple[int, int]]]:
    """(clusters, latent edge pairs, observed ancestral pairs) of the truth.

    Latent edges are (parent, child) indices into the model's latent order;
    observed pairs are (ancestor, descendant) column indices.
    """
    clusters = model.true_clusters()
    ll_edges = {(i, j) for j in range(model.q) for i in range(model.q)
                if model.A[j, i] != 0}
    eff = total_effects(model)
    oo_pairs = {(i, j) for j in range(model.p) for i in range(model.p)
                if i != j and abs(eff.effects_oo[j, i]) > 1e-12}
    return clusters, ll_edges, oo_pairs


def evaluate(result: DiscoveryResult, truth: ModelSpec) -> Metrics:
    """Compare a discovery result with ground truth.

    Cluster equality is up to latent relabeling; edge sets are compared under
    the latent matching induced by the clusters, so edge metrics only exist
    when the clusters are exactly right.
    """
    if len(result.names) != truth.p:
        raise InputError("result and truth disagree on the observed count")
    true_clusters, true_ll, true_oo = true_structures(truth)

    est_sorted = sorted(result.clusters, key=lambda b: sorted(b))
    true_sorted = sorted(true_clusters, key=lambda b: sorted(b))
    cl_exact = est_sorted == true_sorted

    est_pairs = result.observed_pairs()
    os_exact = est_pairs == true_oo

    ls_exact = False
    pre_ll = rec_ll = f1_ll = pre_oo = rec_oo = f1_oo = None
    if cl_exact:
        # match estimated latents to true ones through their clusters
        true_latent_of: dict[frozenset[int], int] = {}
        for idx, block in enumerate(true_clusters):
            true_latent_of[block] = truth.latent_parent_of(next(iter(block)))
        mapping = [true_latent_of[block] for block in result.clusters]
        est_ll = set()
        q = len(result.latent_labels)
        for i in range(q):
            for j in range(q):
                if result.latent_adj[i, j]:
                    est_ll.add((mapping[j], mapping[i]))
        ls_exact = est_ll == true_ll
        pre_ll, rec_ll, f1_ll = _prf(est_ll, true_ll)
        pre_oo, rec_oo, f1_oo = _prf(est_pairs, true_oo)
    return Metrics(cl_exact=cl_exact, ls_exact=ls_exact, os_exact=os_exact,
                   cs_exact=ls_exact and os_exact,
                   pre_ll=pre_ll, rec_ll=rec_ll, f1_ll=f1_ll,
                   pre_oo=pre_oo, rec_oo=rec_oo, f1_oo=f1_oo)
