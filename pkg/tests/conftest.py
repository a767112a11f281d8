"""Shared mixtures and cached solves for the test suite."""
import functools

import pytest

from parisi_zero.mixture import make_mixture
from parisi_zero.solver import SolverContext

# (exponents, free weights) of the three-component family; the last weight is derived
EX2 = ((4, 28, 84), (0.88, 0.1118))
EX3 = ((4, 28, 84), (0.86, 0.1253))
EX4 = ((4, 28, 84), (0.88, 0.1113))
EX5 = ((4, 28, 84), (0.88, 0.1108))


@functools.lru_cache(maxsize=None)
def family(free):
    exps, wts = free
    return make_mixture(exps, wts, derive_last=True)


@functools.lru_cache(maxsize=None)
def pure(p):
    return make_mixture((p,), (1.0,), diagnostic=p == 2)


@functools.lru_cache(maxsize=None)
def context(spec):
    return SolverContext(spec)


@pytest.fixture(scope="session")
def ex2():
    return family(EX2)


@pytest.fixture(scope="session")
def ex3():
    return family(EX3)


@pytest.fixture(scope="session")
def ex4():
    return family(EX4)


@pytest.fixture(scope="session")
def ex5():
    return family(EX5)


@pytest.fixture(scope="session")
def p3():
    return pure(3)


@pytest.fixture(scope="session")
def p2():
    return pure(2)
