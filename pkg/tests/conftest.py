"""Shared fixtures.

The two large one-period operators are expensive (tens of seconds each) and
shared by the spectrum, transport, and acceptance tests, so they are built
once per session.
"""

import pytest

from drivenosc.floquet import build_floquet_operator
from drivenosc.model import ModelParams, cell_boundaries

BASIS_LARGE = 507  # 1.5x the third cell boundary at h=0.2, N=2


@pytest.fixture(scope="session")
def params_weak():
    return ModelParams(h=0.2, epsilon=0.02, resonance_number=2, detuning=0.0)


@pytest.fixture(scope="session")
def params_strong():
    return ModelParams(h=0.2, epsilon=3.0, resonance_number=2, detuning=0.0)


@pytest.fixture(scope="session")
def params_detuned():
    return ModelParams(h=0.2, epsilon=0.02, resonance_number=2, detuning=0.001)


@pytest.fixture(scope="session")
def partition():
    return cell_boundaries(0.2, 2, 2500)


@pytest.fixture(scope="session")
def op_weak_large(params_weak):
    return build_floquet_operator(params_weak, BASIS_LARGE)


@pytest.fixture(scope="session")
def op_strong_large(params_strong):
    return build_floquet_operator(params_strong, BASIS_LARGE)
