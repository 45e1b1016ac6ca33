import numpy as np
import pytest

from dr_options.models import (LinearRtPrice, MarketInstance, QuadraticDisutility,
                               TruncatedNormalInfoState, UniformWind, build_case_study,
                               validate_assumptions)


@pytest.fixture(scope="session")
def case():
    return build_case_study()


def random_instance(rng: np.random.Generator) -> MarketInstance:
    """A random instance satisfying every standing assumption."""
    while True:
        base = rng.uniform(1.0, 3.0)
        inst = MarketInstance(
            load_l=rng.uniform(1.5, 5.0),
            pi_da=rng.uniform(15.0, 30.0),
            disutility=QuadraticDisutility(a=rng.uniform(5.0, 20.0), b=rng.uniform(3.0, 25.0)),
            info_state=TruncatedNormalInfoState(sigma=rng.uniform(0.1, 0.6), mu=rng.uniform(0.3, 0.7)),
            wind=UniformWind(base=base, slope=rng.uniform(0.2, 2.0)),
            rt_price=LinearRtPrice(intercept=rng.uniform(30.0, 45.0), slope=-rng.uniform(1.0, 8.0)),
        )
        if validate_assumptions(inst, grid_n=20).passed:
            return inst


@pytest.fixture(scope="session")
def random_instances():
    rng = np.random.default_rng(20240611)
    return [random_instance(rng) for _ in range(5)]
