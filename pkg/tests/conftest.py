import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def brute_force_pressure(matrix, table, n):
    """(1/n) log sum over admissible n-words of exp(S_n phi), depth-1 ``table``, by plain enumeration."""
    a = np.asarray(matrix)
    t = np.asarray(table, dtype=float)
    m = a.shape[0]
    terms = []
    for w in itertools.product(range(m), repeat=n):
        if all(a[x, y] for x, y in zip(w, w[1:])):
            terms.append(sum(t[s] for s in w))
    top = max(terms)
    return (top + math.log(math.fsum(math.exp(x - top) for x in terms))) / n


def binary_entropy(a):
    a = np.asarray(a, dtype=float)
    return -(a * np.log(a) + (1 - a) * np.log(1 - a))


@pytest.fixture
def full2():
    from thermospec import SymbolicSystem

    return SymbolicSystem.full(2)


@pytest.fixture
def binary_phi():
    from thermospec import LocallyConstant

    return LocallyConstant.from_vector([0.0, 1.0])
