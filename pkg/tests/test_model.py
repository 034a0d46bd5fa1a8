import itertools
import os

import numpy as np
import pytest

from lvcd import (DisturbanceSpec, InputError, ModelSpec, SampleMatrix,
                  default_disturbance, get_skeleton, mixing_matrix,
                  population_cumulant, random_model_instance, simulate,
                  total_effects, validate)
from lvcd.model import disturbance_cumulant_table
from tests.conftest import ALL_BUILTINS


def test_lognormal_cumulants_match_monte_carlo(rng):
    d = default_disturbance()
    x = d.sample(rng, 4_000_000)
    assert abs(x.mean()) < 3 * x.std() / 2000
    assert d.cumulant(2) == pytest.approx(np.var(x), rel=0.01)
    xc = x - x.mean()
    assert d.cumulant(3) == pytest.approx(np.mean(xc ** 3), rel=0.05)


def test_uniform_cumulants():
    d = DisturbanceSpec("uniform_centered", (-1.0, 3.0))
    width = 4.0
    assert d.cumulant(2) == pytest.approx(width ** 2 / 12)
    assert d.cumulant(3) == 0.0
    assert d.cumulant(4) == pytest.approx(-width ** 4 / 120)
    assert d.cumulant(6) == pytest.approx(width ** 6 / 252)


def test_uniform_fails_noise_assumption():
    sk = get_skeleton("c")
    model = random_model_instance(sk, 3)
    flat = DisturbanceSpec("uniform_centered", (-1.0, 1.0))
    bad = ModelSpec(A=model.A, Lambda=model.Lambda, B=model.B,
                    latent_disturbances=(flat,) * model.q,
                    observed_disturbances=model.observed_disturbances)
    report = validate(bad)
    assert not report.ok
    assert any(e.code == "A5" for e in report.failures())


@pytest.mark.parametrize("name", ALL_BUILTINS)
def test_builtin_models_validate(name):
    model = random_model_instance(get_skeleton(name), 11)
    assert validate(model).ok


def test_validate_flags_injected_violations():
    model = random_model_instance(get_skeleton("c"), 5)
    lam = model.Lambda.copy()
    lam[0, 1] = 0.9  # X1 gains a second latent parent
    bad1 = ModelSpec(A=model.A, Lambda=lam, B=model.B,
                     latent_disturbances=model.latent_disturbances,
                     observed_disturbances=model.observed_disturbances)
    assert any(e.code == "A1" for e in validate(bad1).failures())

    B = model.B.copy()
    B[1, 0] = 0.5  # edge X1 -> X2 crosses clusters
    bad3 = ModelSpec(A=model.A, Lambda=model.Lambda, B=B,
                     latent_disturbances=model.latent_disturbances,
                     observed_disturbances=model.observed_disturbances)
    assert any(e.code == "A3" for e in validate(bad3).failures())

    A = np.array([[0.0, 1.2], [1.2, 0.0]])
    bad_cycle = ModelSpec(A=A, Lambda=model.Lambda, B=model.B,
                          latent_disturbances=model.latent_disturbances,
                          observed_disturbances=model.observed_disturbances)
    assert any(e.code == "acyclic_latent" for e in validate(bad_cycle).failures())

    lam2 = model.Lambda.copy()
    lam2[2, 1] = 0.0  # latent 2 keeps a single child
    bad2 = ModelSpec(A=np.zeros((2, 2)), Lambda=lam2, B=np.zeros((3, 3)),
                     latent_disturbances=model.latent_disturbances,
                     observed_disturbances=model.observed_disturbances)
    assert any(e.code == "A2" for e in validate(bad2).failures())


def _path_sum_effects(adj: np.ndarray) -> np.ndarray:
    """Total effects by explicit path enumeration (oracle for small DAGs)."""
    n = adj.shape[0]
    out = np.eye(n)
    for length in range(1, n):
        for path in itertools.permutations(range(n), length + 1):
            coefs = [adj[path[i + 1], path[i]] for i in range(length)]
            if all(c != 0 for c in coefs):
                out[path[-1], path[0]] += np.prod(coefs)
    return out


def test_total_effects_identity_case():
    model = ModelSpec(A=np.zeros((1, 1)), Lambda=np.array([[1.0], [1.3]]),
                      B=np.zeros((2, 2)),
                      latent_disturbances=(default_disturbance(),),
                      observed_disturbances=(default_disturbance(),) * 2)
    eff = total_effects(model)
    assert np.allclose(eff.effects_ll, np.eye(1))
    assert np.allclose(eff.effects_oo, np.eye(2))
    assert np.allclose(eff.effects_ol, model.Lambda)


def test_total_effects_match_path_enumeration(rng):
    for trial in range(25):
        q = int(rng.integers(1, 5))
        p = int(rng.integers(q, 9 - q))
        A = np.tril(rng.uniform(0.5, 1.5, (q, q)), -1) * (rng.random((q, q)) < 0.5)
        B = np.tril(rng.uniform(0.5, 1.5, (p, p)), -1) * (rng.random((p, p)) < 0.5)
        lam = np.zeros((p, q))
        for j in range(p):
            lam[j, rng.integers(0, q)] = 1.0
        model = ModelSpec(A=A, Lambda=lam, B=B,
                          latent_disturbances=(default_disturbance(),) * q,
                          observed_disturbances=(default_disturbance(),) * p)
        eff = total_effects(model)
        assert np.allclose(eff.effects_ll, _path_sum_effects(A), atol=1e-12)
        assert np.allclose(eff.effects_oo, _path_sum_effects(B), atol=1e-12)
        assert np.allclose(np.diag(eff.effects_ll), 1.0)
        assert np.allclose(np.diag(eff.effects_oo), 1.0)


def test_chain_total_effect_through_shared_edge():
    # the impure chain: the loaded child picks up both the direct loading
    # and the observed-edge route
    model = random_model_instance(get_skeleton("chain3"), 9)
    eff = total_effects(model)
    lam = model.Lambda
    b = model.B[4, 2]
    a21, a32 = model.A[1, 0], model.A[2, 1]
    expected = (lam[4, 2] + b * lam[2, 2]) * a32 * a21
    assert eff.effects_ol[4, 0] == pytest.approx(expected, rel=1e-12)


def test_mixing_matrix_reconstructs_simulation():
    model = random_model_instance(get_skeleton("d"), 21)
    n = 500
    rng_ = np.random.default_rng(77)
    draws = [dist.sample(rng_, n) for dist in model.latent_disturbances]
    draws += [dist.sample(rng_, n) for dist in model.observed_disturbances]
    u = np.column_stack(draws)
    X = u @ mixing_matrix(model).T
    assert np.allclose(X, simulate(model, n, 77).values)


def test_simulate_determinism_and_moments():
    model = random_model_instance(get_skeleton("a"), 2)
    s1 = simulate(model, 1234, seed=42)
    s2 = simulate(model, 1234, seed=42)
    assert np.array_equal(s1.values, s2.values)
    big = simulate(model, 200_000, seed=43)
    cov = np.cov(big.values.T)
    M = mixing_matrix(model)
    kappa = disturbance_cumulant_table(model)
    pop_cov = M @ np.diag(kappa[2]) @ M.T
    assert np.allclose(cov, pop_cov, rtol=0.05, atol=0.02)


def test_random_instance_determinism_and_ranges():
    sk = get_skeleton("f")
    m1 = random_model_instance(sk, 5)
    m2 = random_model_instance(sk, 5)
    assert np.array_equal(m1.A, m2.A) and np.array_equal(m1.Lambda, m2.Lambda)
    free_lam = m1.Lambda[(m1.Lambda != 0) & (m1.Lambda != 1)]
    assert ((free_lam >= 1.1) & (free_lam <= 1.5)).all()
    free_b = m1.B[m1.B != 0]
    assert ((free_b >= 0.5) & (free_b <= 0.9)).all()
    for i, j in enumerate(sk.unit_children):
        assert m1.Lambda[j, i] == 1.0


def test_population_cumulant_symmetry_and_independence():
    model = random_model_instance(get_skeleton("star3"), 6)
    v1 = population_cumulant(model, (1, 1, 4, 2))
    v2 = population_cumulant(model, (4, 2, 1, 1))
    assert v1 == pytest.approx(v2, rel=1e-12)
    # pure children of independent latents share nothing beyond the source
    chain = random_model_instance(get_skeleton("c"), 6)
    two_block = ModelSpec(
        A=np.zeros((2, 2)), Lambda=chain.Lambda, B=np.zeros((3, 3)),
        latent_disturbances=chain.latent_disturbances,
        observed_disturbances=chain.observed_disturbances)
    assert population_cumulant(two_block, (0, 0, 1, 1)) == pytest.approx(0.0, abs=1e-12)


def test_population_cumulant_vs_sample(rng):
    model = random_model_instance(get_skeleton("c"), 31)
    data = simulate(model, 1_000_000, seed=5)
    x = data.values[:, 1]
    pop = population_cumulant(model, (1, 1, 1))
    xc = x - x.mean()
    blocks = [np.mean(xc[i::8] ** 3) for i in range(8)]
    se = np.std(blocks) / np.sqrt(8)
    assert abs(np.mean(xc ** 3) - pop) < 4 * se + 0.01 * abs(pop)


def test_fourth_cumulant_example_single_latent():
    # two pure children of one latent: cum4(X1, X1, X2, X2) is the latent
    # kurtosis scaled by both loadings squared
    model = random_model_instance(get_skeleton("star3"), 13)
    lam = model.Lambda
    eff = total_effects(model)
    val = population_cumulant(model, (0, 0, 1, 1))
    expected = (eff.effects_ol[0, 0] ** 2 * eff.effects_ol[1, 0] ** 2
                * model.latent_disturbances[0].cumulant(4))
    assert val == pytest.approx(expected, rel=1e-12)


def test_sample_matrix_csv_roundtrip(tmp_path):
    model = random_model_instance(get_skeleton("a"), 1)
    data = simulate(model, 37, seed=3)
    path = os.path.join(tmp_path, "x.csv")
    data.save_csv(path)
    back = SampleMatrix.load_csv(path)
    assert back.names == data.names
    assert np.array_equal(back.values, data.values)


def test_csv_errors(tmp_path):
    p = os.path.join(tmp_path, "bad.csv")
    with open(p, "w") as fh:
        fh.write("a,b\n1.0,2.0\n3.0\n")
    with pytest.raises(InputError, match="expected 2 cells"):
        SampleMatrix.load_csv(p)
    with open(p, "w") as fh:
        fh.write("a,b\n1.0,nan\n")
    with pytest.raises(InputError, match="non-finite"):
        SampleMatrix.load_csv(p)
    with open(p, "w") as fh:
        fh.write("a,b\n1.0,x\n")
    with pytest.raises(InputError, match="not a number"):
        SampleMatrix.load_csv(p)


def test_model_spec_roundtrip(tmp_path):
    model = random_model_instance(get_skeleton("f"), 8)
    path = os.path.join(tmp_path, "model.json")
    model.save(path)
    back = ModelSpec.load(path)
    assert np.array_equal(back.A, model.A)
    assert np.array_equal(back.Lambda, model.Lambda)
    assert back.latent_disturbances[0].params == model.latent_disturbances[0].params
