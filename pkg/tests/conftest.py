import numpy as np
import pytest

from lvcd import Config, get_skeleton, random_model_instance
from lvcd.config import oracle_config
from lvcd.context import PopulationContext

ALL_BUILTINS = ["a", "b", "c", "d", "e", "f",
                "impure1", "impure2", "star3", "chain3", "poldem"]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture()
def cfg():
    return Config()


@pytest.fixture()
def ocfg():
    return oracle_config()


def make_pair_context(ell: int, direct_effect: float, seed: int,
                      kappa_scale: tuple[float, ...] | None = None):
    """Canonical two-variable model with ell shared sources.

    x = sum a_h S_h + v_x, y = sum b_h S_h + beta v_x + v_y. Returns the
    context plus the true effect nodes (beta, b_h / a_h).
    """
    from lvcd.model import default_disturbance
    rng_ = np.random.default_rng(seed)
    a = rng_.uniform(1.1, 1.5, size=ell)
    b = rng_.uniform(1.1, 1.5, size=ell)
    mixing = np.zeros((2, ell + 2))
    mixing[0, :ell] = a
    mixing[1, :ell] = b
    mixing[0, ell] = 1.0
    mixing[1, ell] = direct_effect
    mixing[1, ell + 1] = 1.0
    dist = default_disturbance()
    kappa = np.zeros((7, ell + 2))
    for k in range(2, 7):
        kappa[k, :] = dist.cumulant(k)
    if kappa_scale is not None:
        for c, s in enumerate(kappa_scale):
            kappa[2:, c] *= np.array([s ** j for j in range(2, 7)])
    ctx = PopulationContext(mixing, kappa, names=("P", "Q"))
    nodes = sorted([direct_effect] + list(b / a))
    return ctx, np.asarray(nodes)
