import math

import numpy as np
import pytest

from thermospec import (
    GluedSystem,
    LocallyConstant,
    SampledConvexFunction,
    SymbolicSystem,
    alpha_bounds,
    concave_hull,
    default_q_grid,
    is_concave,
    one_sided_derivatives,
    phase_transitions,
    pressure_exact_sft,
    subdifferential,
    transform_L1,
    transform_L2,
    transform_L3,
    transform_L4,
)

from conftest import binary_entropy


def softplus(q):
    return np.logaddexp(0, np.asarray(q, dtype=float))


def logistic(q):
    return 1 / (1 + np.exp(-np.asarray(q, dtype=float)))


@pytest.fixture
def F_exact():
    g = np.linspace(-20, 20, 4001)
    return SampledConvexFunction(g, softplus(g), softplus)


def test_rejects_non_convex_and_bad_inf():
    g = np.linspace(-1, 1, 11)
    with pytest.raises(ValueError, match="convex"):
        SampledConvexFunction(g, -(g**2))
    v = g**2
    v[5] = np.inf
    with pytest.raises(ValueError):
        SampledConvexFunction(g, v)
    v = g**2
    v[:3] = np.inf
    F = SampledConvexFunction(g, v)
    assert not F.open_left and F.open_right


@pytest.mark.parametrize("with_func", [True, False])
def test_subdifferential_of_smooth_function(with_func):
    g = np.linspace(-10, 10, 2001)
    F = SampledConvexFunction(g, softplus(g), softplus if with_func else None)
    sd = subdifferential(F)
    # without the exact function, points near the ends only have short stencils
    inner = slice(5, -5) if with_func else slice(20, -20)
    np.testing.assert_allclose(sd.lower[inner], logistic(g[inner]), atol=1e-8)
    np.testing.assert_allclose(sd.upper[inner], logistic(g[inner]), atol=1e-8)
    assert np.all(np.diff(sd.lower) >= -1e-12)


def test_transform_L1_is_binary_entropy(F_exact):
    alphas = np.linspace(0.01, 0.99, 99)
    vals = np.array([t.value for t in transform_L1(F_exact, alphas)])
    np.testing.assert_allclose(vals, binary_entropy(alphas), atol=1e-10)


def test_transform_L1_outside_domain(F_exact):
    out = transform_L1(F_exact, [-0.01, 1.01])
    assert all(t.unbounded and t.certificate for t in out)
    assert transform_L1(F_exact, [1.0])[0].value == pytest.approx(0.0, abs=1e-9)


def test_transform_L1_marches_past_grid():
    g = np.linspace(-2, 2, 41)
    F = SampledConvexFunction(g, softplus(g), softplus)
    # minimiser log(0.999/0.001) ~ 6.9 lies beyond the grid
    t = transform_L1(F, [0.999])[0]
    assert t.value == pytest.approx(float(binary_entropy(0.999)), abs=1e-10)
    assert t.argmin[0] == pytest.approx(math.log(999), abs=1e-5)


def test_transform_L3_mirrors_L1(F_exact):
    a = np.array([-0.3, -0.7])
    l3 = [t.value for t in transform_L3(F_exact, a)]
    l1 = [t.value for t in transform_L1(F_exact, -a)]
    np.testing.assert_allclose(l3, l1, atol=0)


def test_transform_L2_and_L4_on_samples():
    alphas = np.linspace(1e-6, 1 - 1e-6, 20001)
    S = binary_entropy(alphas)
    q = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(transform_L2(alphas, S, q), softplus(q), atol=1e-7)
    np.testing.assert_allclose(transform_L4(alphas, S, q), softplus(-q), atol=1e-7)


def test_concave_hull_examples():
    a = np.array([0.0, 1.0, 2.0, 3.0])
    s = np.array([0.0, -1.0, 1.0, 0.0])
    np.testing.assert_allclose(concave_hull(a, s), [0.0, 0.5, 1.0, 0.0])
    assert not is_concave(a, s)
    assert is_concave(a, concave_hull(a, s))
    s2 = np.array([0.0, -np.inf, 1.0, 0.0])
    h2 = concave_hull(a, s2)
    assert h2[1] == pytest.approx(0.5)
    assert not is_concave(a, s2)


def test_kink_of_abs():
    g = np.linspace(-1, 1, 401)
    F = SampledConvexFunction(g, np.abs(g), np.abs, hard_ends=(True, True))
    (k,) = phase_transitions(F)
    assert k.q == pytest.approx(0.0, abs=1e-9)
    assert k.left_slope == pytest.approx(-1.0, abs=1e-6)
    assert k.right_slope == pytest.approx(1.0, abs=1e-6)
    assert one_sided_derivatives(F, 0.0) == pytest.approx((-1.0, 1.0), abs=1e-6)


def test_off_grid_kink_located():
    glued = GluedSystem((SymbolicSystem.full(3), SymbolicSystem.full(2)))
    phi = LocallyConstant.from_vector([0, 0, 0, 1, 1])
    func = lambda q: np.asarray(pressure_exact_sft(glued, phi, q), dtype=float)
    g = np.linspace(-5, 5, 101)
    F = SampledConvexFunction(g, func(g), func)
    (k,) = phase_transitions(F)
    # log 3 = log 2 + q at q = log(3/2)
    assert k.q == pytest.approx(math.log(1.5), abs=1e-8)
    assert k.left_slope == pytest.approx(0.0, abs=1e-6)
    assert k.right_slope == pytest.approx(1.0, abs=1e-6)
    assert k.gap == pytest.approx((0.0, 1.0), abs=1e-6)


def test_smooth_function_has_no_kinks(F_exact):
    assert phase_transitions(F_exact) == []


def test_alpha_bounds_asymptotic():
    g = np.linspace(-3, 3, 61)
    F = SampledConvexFunction(g, softplus(g), softplus)
    lo, hi = alpha_bounds(F)
    assert lo == pytest.approx(0.0, abs=1e-12) and hi == pytest.approx(1.0, abs=1e-12)
    F_grid = SampledConvexFunction(g, softplus(g))
    lo_g, hi_g = alpha_bounds(F_grid)
    assert 0 < lo_g < 0.1 and 0.9 < hi_g < 1


def test_default_grid_extends_only_when_needed():
    assert default_q_grid(softplus).size == 4001
    slow = lambda q: np.sqrt(1 + np.asarray(q, dtype=float) ** 2)
    g = default_q_grid(slow)
    assert g[0] < -20 and g[-1] > 20
