import numpy as np
import pytest

from lvcd import (Config, get_skeleton, random_model_instance,
                  confounders_and_direction, cumulant_matrix, latent_cumulants,
                  numeric_rank, single_confounder_test, sixth_order_criterion,
                  total_effect_roots)
from lvcd.context import PopulationContext
from lvcd.errors import LatentBoundError
from lvcd.identify import (DIRECTION_NONE, DIRECTION_X_TO_Y, choose_orders,
                           matrix_rows, structural_ell_max)
from lvcd.model import total_effects
from lvcd.pipeline import true_structures
from tests.conftest import make_pair_context


def test_matrix_shape_and_rows():
    assert len(matrix_rows(2, 3)) == 3  # 1 + 2 rows
    assert choose_orders(0) == (2, 3)
    assert choose_orders(1) == (3, 4)
    assert choose_orders(2) == (4, 6)
    assert choose_orders(3) is None
    assert structural_ell_max() == 2


def test_numeric_rank_basics():
    assert numeric_rank(np.eye(3), 1e-3) == 3
    assert numeric_rank(np.diag([1.0, 1e-9]), 1e-3) == 1
    assert numeric_rank(np.zeros((3, 3)), 1e-3) == 0


def test_rank_law_generic_pairs(ocfg):
    """Shared-source count and direct effect drive the matrix ranks:
    min(ell+1, m) without a direct effect, min(ell+2, m) with one."""
    for ell in (1, 2):
        for has_effect in (False, True):
            for trial in range(12):
                beta = 0.7 if has_effect else 0.0
                ctx, _ = make_pair_context(ell, beta, seed=100 * ell + trial)
                k1, k2 = choose_orders(ell)
                m = min(len(matrix_rows(k1, k2)), k1)
                fwd = numeric_rank(cumulant_matrix(ctx, ctx.base(0), ctx.base(1), k1, k2),
                                   ocfg.tau_s, ocfg.abs_sv_floor)
                rev = numeric_rank(cumulant_matrix(ctx, ctx.base(1), ctx.base(0), k1, k2),
                                   ocfg.tau_s, ocfg.abs_sv_floor)
                expected_fwd = min(ell + 2, m) if has_effect else min(ell + 1, m)
                assert fwd == expected_fwd
                assert rev == min(ell + 1, m)


def test_confounder_count_and_direction(ocfg):
    ctx, _ = make_pair_context(1, 0.8, seed=5)
    cc = confounders_and_direction(ctx, ctx.base(0), ctx.base(1), ocfg)
    assert cc.ell == 1 and cc.direction == DIRECTION_X_TO_Y
    ctx2, _ = make_pair_context(2, 0.0, seed=6)
    cc2 = confounders_and_direction(ctx2, ctx2.base(0), ctx2.base(1), ocfg)
    assert cc2.ell == 2 and cc2.direction == DIRECTION_NONE


def test_latent_bound_error(ocfg):
    ctx, _ = make_pair_context(2, 0.0, seed=9)
    with pytest.raises(LatentBoundError):
        confounders_and_direction(ctx, ctx.base(0), ctx.base(1),
                                  ocfg.replace(ell_max=1))


def test_roots_recover_effects(ocfg):
    for ell in (1, 2):
        for trial in range(10):
            beta = 0.6 if trial % 2 else 0.0
            ctx, nodes = make_pair_context(ell, beta, seed=40 + trial)
            roots = total_effect_roots(ctx, ctx.base(0), ctx.base(1), ell, ocfg)
            assert np.allclose(roots, nodes, atol=1e-9)


def test_roots_survive_equal_disturbance_laws(ocfg):
    # all sources share one distribution: row degeneracies appear, the
    # null-space construction still recovers {0, ratio}
    ctx, nodes = make_pair_context(1, 0.0, seed=3)
    roots = total_effect_roots(ctx, ctx.base(0), ctx.base(1), 1, ocfg)
    assert np.allclose(roots, nodes, atol=1e-10)


def test_vandermonde_recovery(ocfg):
    ctx, nodes = make_pair_context(1, 0.0, seed=12)
    roots = total_effect_roots(ctx, ctx.base(0), ctx.base(1), 1, ocfg)
    order = np.argsort(np.abs(roots))
    sol = latent_cumulants(ctx, ctx.base(0), ctx.base(1),
                           np.array([roots[order[0]], roots[order[1]]]), 3, ocfg)
    # shared cumulant normalized to unit coefficient in x: a^3 kappa3
    a = ctx.mixing[0, 0]
    expected = a ** 3 * ctx.kappa[3, 0]
    assert sol.shared[0] == pytest.approx(expected, rel=1e-9)
    assert sol.own == pytest.approx(ctx.kappa[3, 1], rel=1e-9)


def test_vandermonde_residual_zero_on_population(ocfg):
    ctx, _ = make_pair_context(1, 0.0, seed=21)
    roots = total_effect_roots(ctx, ctx.base(0), ctx.base(1), 1, ocfg)
    table = ctx.pair_table(ctx.base(0), ctx.base(1))
    vander = np.vander(np.sort(np.abs(roots)), N=3, increasing=True).T
    rhs = np.array([table[(3, r)] for r in range(3)])
    sol, *_ = np.linalg.lstsq(vander, rhs, rcond=None)
    assert np.linalg.norm(vander @ sol - rhs) < 1e-10 * max(1.0, np.linalg.norm(rhs))


def test_sixth_criterion_population(ocfg):
    ctx, _ = make_pair_context(1, 0.0, seed=31)
    assert sixth_order_criterion(ctx, ctx.base(0), ctx.base(1), ocfg) < 1e-12
    ctx2, _ = make_pair_context(2, 0.0, seed=32)
    assert sixth_order_criterion(ctx2, ctx2.base(0), ctx2.base(1), ocfg) > 1e-3
    ctx3, _ = make_pair_context(1, 0.7, seed=33)
    assert sixth_order_criterion(ctx3, ctx3.base(0), ctx3.base(1), ocfg) > 1e-3


def test_single_confounder_test_variants(ocfg):
    ctx, _ = make_pair_context(1, 0.0, seed=41)
    for variant in ("a7", "rank"):
        cfg_v = ocfg.replace(variant=variant)
        assert single_confounder_test(ctx, ctx.base(0), ctx.base(1), cfg_v)
    ctx2, _ = make_pair_context(2, 0.0, seed=42)
    for variant in ("a7", "rank"):
        cfg_v = ocfg.replace(variant=variant)
        assert not single_confounder_test(ctx2, ctx2.base(0), ctx2.base(1), cfg_v)


def test_builtin_pair_roots_match_truth(ocfg):
    """Root recovery on every dependent pair of every builtin model."""
    from tests.conftest import ALL_BUILTINS
    for name in ALL_BUILTINS:
        model = random_model_instance(get_skeleton(name), seed=77)
        ctx = PopulationContext.from_model(model)
        eff = total_effects(model)
        M = ctx.mixing
        _, _, oo_pairs = true_structures(model)
        for i in range(model.p):
            for j in range(model.p):
                if i == j or (j, i) in oo_pairs:  # need j not ancestor of i
                    continue
                if not ctx.dependent(ctx.base(i), ctx.base(j)):
                    continue
                beta = eff.effects_oo[j, i]
                ratios = []
                for c in range(M.shape[1]):
                    if abs(M[i, c]) > 1e-12 and abs(M[j, c] - beta * M[i, c]) > 1e-9:
                        ratios.append(M[j, c] / M[i, c])
                distinct = []
                for r in sorted(ratios):
                    if not distinct or abs(r - distinct[-1]) > 1e-7:
                        distinct.append(r)
                nodes = np.sort(np.array([beta] + distinct))
                ell = len(distinct)
                if ell > 2:
                    continue
                roots = total_effect_roots(ctx, ctx.base(i), ctx.base(j), ell, ocfg)
                assert np.allclose(roots, nodes, atol=1e-9), (name, i, j)
