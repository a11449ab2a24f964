"""Shared heavy fixtures: the benchmark system, its Floquet data and designs."""

import numpy as np
import pytest

from harmonic_control.casestudy import benchmark_system
from harmonic_control.design import design_sufficient
from harmonic_control.floquet import factorize


@pytest.fixture(scope="session")
def bench():
    return benchmark_system()


@pytest.fixture(scope="session")
def floq(bench):
    A, _ = bench
    return factorize(A, steps=20000)


@pytest.fixture(scope="session")
def gain_alpha1(bench, floq):
    A, B = bench
    return design_sufficient(A, B, alpha=1.0, m=10, floquet=floq)


@pytest.fixture(scope="session")
def gain_alpha2(bench, floq):
    A, B = bench
    return design_sufficient(A, B, alpha=2.0, m=10, floquet=floq)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
