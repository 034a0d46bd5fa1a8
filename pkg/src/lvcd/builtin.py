"""Built-in benchmark graph skeletons and random coefficient draws."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .model import DisturbanceSpec, ModelSpec, default_disturbance, validate


@dataclass(frozen=True)
class GraphSkeleton:
    """Structure of a model: which coefficients are free, which are fixed to 1.

    Edges are (parent, child) index pairs. unit_children[i] names the observed
    child of latent i whose loading is pinned to 1 (the scale convention).
    """

    name: str
    q: int
    p: int
    latent_edges: tuple[tuple[int, int], ...] = ()
    loading_edges: tuple[tuple[int, int], ...] = ()  # (latent, observed)
    observed_edges: tuple[tuple[int, int], ...] = ()
    unit_children: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.unit_children) != self.q:
            raise InputError("one unit child required per latent")
        for (i, j) in self.loading_edges:
            if not (0 <= i < self.q and 0 <= j < self.p):
                raise InputError(f"loading edge out of range: {(i, j)}")
        seen = {}
        for (i, j) in self.loading_edges:
            if j in seen:
                raise InputError(f"observed {j} has two latent parents")
            seen[j] = i
        for i, j in enumerate(self.unit_children):
            if seen.get(j) != i:
                raise InputError(f"unit child {j} is not a child of latent {i}")


def random_model_instance(skeleton: GraphSkeleton, seed: int,
                          disturbance: DisturbanceSpec | None = None) -> ModelSpec:
    """Draw coefficients: Lambda/A from U(1.1, 1.5), B from U(0.5, 0.9).

    The pinned loading of each latent stays exactly 1. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    dist = disturbance if disturbance is not None else default_disturbance()
    A = np.zeros((skeleton.q, skeleton.q))
    lam = np.zeros((skeleton.p, skeleton.q))
    B = np.zeros((skeleton.p, skeleton.p))
    for (i, j) in skeleton.latent_edges:
        A[j, i] = rng.uniform(1.1, 1.5)
    for (i, j) in skeleton.loading_edges:
        lam[j, i] = 1.0 if skeleton.unit_children[i] == j else rng.uniform(1.1, 1.5)
    for (i, j) in skeleton.observed_edges:
        B[j, i] = rng.uniform(0.5, 0.9)
    model = ModelSpec(
        A=A, Lambda=lam, B=B,
        latent_disturbances=tuple(dist for _ in range(skeleton.q)),
        observed_disturbances=tuple(dist for _ in range(skeleton.p)),
    )
    report = validate(model)
    if not report.ok:
        raise InputError(f"skeleton {skeleton.name!r} violates assumptions: "
                         f"{[e.code for e in report.failures()]}")
    return model


def _sk(name, q, p, latent_edges, loading_edges, observed_edges, unit_children):
    return GraphSkeleton(name=name, q=q, p=p,
                         latent_edges=tuple(latent_edges),
                         loading_edges=tuple(loading_edges),
                         observed_edges=tuple(observed_edges),
                         unit_children=tuple(unit_children))


def builtin_models() -> dict[str, GraphSkeleton]:
    """The six benchmark skeletons plus the worked-example and case-study graphs.

    Keys "a".."f" are the simulation models; "impure1"/"impure2" the two
    impure-children examples; "star3"/"chain3" the two de-confounding
    examples; "poldem" the Political Democracy marginal graph.
    """
    out: dict[str, GraphSkeleton] = {}
    out["a"] = _sk("a", 1, 3, [], [(0, 0), (0, 1), (0, 2)], [(1, 2)], [0])
    out["b"] = _sk("b", 1, 3, [], [(0, 0), (0, 1), (0, 2)], [(0, 1), (1, 2)], [0])
    out["c"] = _sk("c", 2, 3, [(0, 1)],
                   [(0, 0), (1, 1), (1, 2)], [(1, 2)], [0, 1])
    out["d"] = _sk("d", 2, 4, [(0, 1)],
                   [(0, 0), (1, 1), (1, 2), (1, 3)], [(2, 3)], [0, 1])
    out["e"] = _sk("e", 3, 4, [(0, 1), (1, 2)],
                   [(0, 0), (1, 1), (2, 2), (2, 3)], [(2, 3)], [0, 1, 2])
    out["f"] = _sk("f", 3, 4, [(0, 1), (1, 2), (0, 2)],
                   [(0, 0), (1, 1), (2, 2), (2, 3)], [(2, 3)], [0, 1, 2])
    # chain with one impure cluster of three
    out["impure1"] = _sk("impure1", 3, 5, [(0, 1), (1, 2)],
                         [(0, 0), (1, 1), (2, 2), (2, 3), (2, 4)],
                         [(2, 4)], [0, 1, 2])
    # chain with a complete graph on the last cluster
    out["impure2"] = _sk("impure2", 3, 6, [(0, 1), (1, 2)],
                         [(0, 0), (1, 1), (2, 2), (2, 3), (2, 4), (2, 5)],
                         [(3, 4), (3, 5), (4, 5)], [0, 1, 2])
    # one source latent with two pure two-child latents
    out["star3"] = _sk("star3", 3, 5, [(0, 1), (0, 2)],
                       [(0, 0), (1, 1), (2, 2), (2, 3), (1, 4)],
                       [], [0, 1, 2])
    # chain of three latents, one impure pair at the end
    out["chain3"] = _sk("chain3", 3, 5, [(0, 1), (1, 2)],
                        [(0, 0), (1, 1), (2, 2), (1, 3), (2, 4)],
                        [(2, 4)], [0, 1, 2])
    # Political Democracy marginal graph: latent triangle, three pure pairs
    out["poldem"] = _sk("poldem", 3, 6, [(0, 1), (1, 2), (0, 2)],
                        [(0, 0), (0, 1), (1, 2), (1, 3), (2, 4), (2, 5)],
                        [], [0, 2, 4])
    return out


def get_skeleton(name: str) -> GraphSkeleton:
    models = builtin_models()
    if name not in models:
        raise InputError(f"unknown builtin model {name!r}; have {sorted(models)}")
    return models[name]
