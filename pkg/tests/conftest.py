import numpy as np
import pytest

from admhd.filters import DeconvParams, FilterParams
from admhd.initial import random_solenoidal
from admhd.model import ModelCase, MhdState, PhysicalParams
from admhd.spectral import GridSpec, SpectralVectorField


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture(scope="session")
def grid8():
    return GridSpec(8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pair_field(grid, k, value):
    """Field with one conjugate pair ``+-k`` set to ``value`` (at ``+k``)."""
    return SpectralVectorField.zeros(grid).set_mode(k, value)


def random_state(grid, seed, magnetic=True):
    rng = np.random.default_rng(seed)
    w = random_solenoidal(grid, rng)
    b = random_solenoidal(grid, rng, amplitude=0.7) if magnetic else SpectralVectorField.zeros(grid)
    return MhdState(w, b)


FP = FilterParams(0.5, 0.75)
DP = DeconvParams(3)
CASES = {
    "DoubleViscous": PhysicalParams(0.01, 0.01, ModelCase.DOUBLE_VISCOUS),
    "InviscidMomentum": PhysicalParams(0.0, 0.01, ModelCase.INVISCID_MOMENTUM),
    "DeconvEuler": PhysicalParams(0.0, 0.0, ModelCase.DECONV_EULER),
    "LimitModel": PhysicalParams(0.01, 0.01, ModelCase.LIMIT_MODEL),
}


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[num])
