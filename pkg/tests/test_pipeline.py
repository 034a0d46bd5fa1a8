import json
import os

import numpy as np
import pytest

from lvcd import (Config, InputError, discover, discover_population, evaluate,
                  export_json, get_skeleton, random_model_instance, simulate)
from lvcd.benchmark import derive_seed, run_benchmark
from lvcd.config import dump_config_file, load_config_file, oracle_config
from lvcd.model import ModelSpec, default_disturbance
from lvcd.pipeline import result_json_text, true_structures
from tests.conftest import ALL_BUILTINS


def test_discover_population_matches_truth_everywhere():
    for name in ALL_BUILTINS:
        model = random_model_instance(get_skeleton(name), seed=31)
        res = discover_population(model)
        m = evaluate(res, model)
        assert m.cl_exact and m.ls_exact and m.os_exact and m.cs_exact, name


def test_result_shape_and_consistency():
    model = random_model_instance(get_skeleton("poldem"), seed=2)
    res = discover_population(model)
    assert res.cluster_names() == [["X1", "X2"], ["X3", "X4"], ["X5", "X6"]]
    edges = res.latent_edges()
    assert [(p, c) for p, c, _ in edges] == [("L1", "L2"), ("L1", "L3"), ("L2", "L3")]
    # ancestry contains the edges
    for p, c, _ in edges:
        assert p in res.to_json_dict()["latent_ancestry"][c]


def test_single_column_input_rejected():
    model = random_model_instance(get_skeleton("a"), seed=4)
    data = simulate(model, 200, seed=1)
    one = data.select(["X1"])
    with pytest.raises(InputError):
        discover(one, Config())


def test_evaluate_counts():
    model = random_model_instance(get_skeleton("e"), seed=7)
    res = discover_population(model)
    m = evaluate(res, model)
    assert m.f1_ll == 1.0 and m.f1_oo == 1.0
    # corrupt one latent edge: drop L2->L3, add L1->L3
    res.latent_adj[2, 1] = False
    res.latent_adj[2, 0] = True
    m2 = evaluate(res, model)
    assert not m2.ls_exact and m2.cl_exact
    assert m2.pre_ll == pytest.approx(0.5)
    assert m2.rec_ll == pytest.approx(0.5)


def test_edge_metrics_absent_when_clusters_wrong():
    model = random_model_instance(get_skeleton("c"), seed=9)
    res = discover_population(model)
    res.clusters = [frozenset({0, 1}), frozenset({2})]
    m = evaluate(res, model)
    assert not m.cl_exact
    assert m.pre_ll is None and m.f1_oo is None


def test_json_roundtrip_and_determinism(tmp_path):
    model = random_model_instance(get_skeleton("c"), seed=3)
    data = simulate(model, 1200, seed=5)
    cfg = Config(seed=11)
    r1 = discover(data, cfg)
    r2 = discover(data, cfg)
    assert result_json_text(r1) == result_json_text(r2)
    path = os.path.join(tmp_path, "out.json")
    export_json(r1, path)
    loaded = json.load(open(path))
    assert loaded == r1.to_json_dict()


def test_config_file_roundtrip(tmp_path):
    cfg = Config(alpha_ind=0.2, tau_o=0.1, seed=9, variant="rank")
    path = os.path.join(tmp_path, "c.cfg")
    dump_config_file(cfg, path)
    assert load_config_file(path) == cfg
    bad = os.path.join(tmp_path, "bad.cfg")
    with open(bad, "w") as fh:
        fh.write("alpha_ind: 0.2\n")
    with pytest.raises(InputError):
        load_config_file(bad)


def test_config_validation():
    with pytest.raises(InputError):
        Config(tau_m1=0.1, tau_m2=0.01)
    with pytest.raises(InputError):
        Config(ell_max=0)
    with pytest.raises(InputError):
        Config(variant="other")


def test_true_structures():
    model = random_model_instance(get_skeleton("b"), seed=5)
    clusters, ll, oo = true_structures(model)
    assert clusters == [frozenset({0, 1, 2})]
    assert ll == set()
    assert oo == {(0, 1), (1, 2), (0, 2)}


def test_seed_derivation_injective_on_grid():
    seen = set()
    for m in range(6):
        for n in (1000, 2000, 4000):
            for rep in range(100):
                for tag in (1, 2, 3):
                    seen.add(derive_seed(7, m, n, rep, tag))
    assert len(seen) == 6 * 3 * 100 * 3


def test_benchmark_smoke_and_determinism():
    cfg = Config(seed=3, min_n=200)
    rep1 = run_benchmark(["c"], [400], 2, cfg)
    rep2 = run_benchmark(["c"], [400], 2, cfg)
    assert rep1.to_csv() == rep2.to_csv()
    assert rep1.rows[0].reps == 2
    assert "model,n,reps" in rep1.to_csv().splitlines()[0]
    assert rep1.to_table()


def test_benchmark_records_failures():
    # n below min_n makes every cell fail without aborting the grid
    cfg = Config(seed=3, min_n=10_000)
    rep = run_benchmark(["a"], [300], 2, cfg)
    assert rep.rows[0].n_failed == 2
    assert all(c.error for c in rep.cells)
