import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qwflo.farm import FarmProblem, GridSpec, TurbineSpec, WindRegime
from qwflo.qubo import QuboMatrix

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FLAT_THRUST = ((0.0, 0.5), (30.0, 0.5))


def random_qubo(rng: np.random.Generator, n: int, offset: bool = True) -> QuboMatrix:
    a = rng.normal(size=(n, n))
    return QuboMatrix((a + a.T) / 2, float(rng.normal()) if offset else 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fig3_problem():
    """10x10 unit grid, wake radius 1 unit at one unit downwind, length capped at 3."""
    turbine = TurbineSpec(rotor_radius=0.5, hub_height=1.0, wake_expansion=1.0, thrust_table=FLAT_THRUST)
    return FarmProblem(GridSpec(10, 9.0), turbine, WindRegime.unidirectional(0.0, 12.0), 16,
                       wake_length_cap=3.0)


def small_problem(L=3, direction=0.0, speed=12.0, m=None, **kw) -> FarmProblem:
    turbine = TurbineSpec(rotor_radius=40.0, hub_height=80.0, wake_expansion=0.1, thrust_table=FLAT_THRUST)
    return FarmProblem(GridSpec(L, 1000.0), turbine, WindRegime.unidirectional(direction, speed),
                       L * L if m is None else m, **kw)
