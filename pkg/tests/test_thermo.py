import math

import numpy as np
import pytest

from thermospec import (
    BudgetExceeded,
    Formula,
    Geometric,
    GluedSystem,
    LocallyConstant,
    MarkovMeasure,
    PiecewiseConformalMap,
    Pointwise,
    SingularityError,
    SymbolicSystem,
    pressure_bracketed,
    pressure_curve,
    pressure_derivative_check,
    pressure_exact_sft,
    rpf_equilibrium,
    two_parameter_pressure,
    variational_lower_bound,
)
from thermospec.thermo import part_pressures, support_components

from conftest import brute_force_pressure


def test_binary_pressure_closed_form(full2, binary_phi):
    q = np.linspace(-20, 20, 401)
    np.testing.assert_allclose(pressure_exact_sft(full2, binary_phi, q), np.logaddexp(0, q), atol=1e-12, rtol=0)


def test_golden_mean_against_enumeration():
    gm = SymbolicSystem.golden_mean()
    phi = LocallyConstant.from_vector([0.3, -0.8])
    exact = pressure_exact_sft(gm, phi, 1.0)
    # (1/n) log Z_n converges at rate O(1/n); compare successive differences instead
    z14, z16 = brute_force_pressure(gm.transition, phi.table, 14), brute_force_pressure(gm.transition, phi.table, 16)
    limit = (16 * z16 - 14 * z14) / 2
    assert exact == pytest.approx(limit, abs=1e-8)


def test_depth_two_against_matrix():
    # transfer matrix entries exp(phi(ij)) on the full 2-shift
    t = np.array([[0.1, -0.4], [0.7, 0.2]])
    expected = math.log(max(abs(np.linalg.eigvals(np.exp(t)))))
    assert pressure_exact_sft(SymbolicSystem.full(2), LocallyConstant(t), 1.0) == pytest.approx(expected, abs=1e-12)


def test_glued_is_max_of_parts():
    glued = GluedSystem((SymbolicSystem.full(2), SymbolicSystem.full(3)))
    phi = LocallyConstant.from_vector([0.0, 1.0, -1.0, 0.5, 0.2])
    q = np.linspace(-5, 5, 41)
    parts = part_pressures(glued, phi, q)
    expected = np.maximum(np.logaddexp(0, q), np.log(np.exp(-q) + np.exp(0.5 * q) + np.exp(0.2 * q)))
    np.testing.assert_allclose(parts.max(axis=0), expected, atol=1e-12)
    np.testing.assert_allclose(pressure_exact_sft(glued, phi, q), expected, atol=1e-12)


def test_singular_conventions():
    phi = LocallyConstant.from_vector([1.0, math.inf])
    full2 = SymbolicSystem.full(2)
    q = np.linspace(-10, -0.1, 50)
    np.testing.assert_array_equal(pressure_exact_sft(full2, phi, q), q)
    assert pressure_exact_sft(full2, phi, 0.0) == pytest.approx(math.log(2), abs=1e-12)
    assert pressure_exact_sft(full2, phi, 0.0, zero_times_inf=-math.inf) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SingularityError):
        pressure_exact_sft(full2, phi, 0.5)
    with pytest.raises(SingularityError):
        pressure_bracketed(full2, phi, 0.5, 4)


@pytest.mark.parametrize("n", [2, 4, 9])
def test_bracket_contains_exact(n):
    gm = SymbolicSystem.golden_mean()
    phi = LocallyConstant(np.array([[0.2, -0.5], [1.1, np.nan]]))
    for q in (-2.0, 0.0, 1.5):
        lo, hi = pressure_bracketed(gm, phi, q, n)
        exact = pressure_exact_sft(gm, phi, q)
        assert lo - 1e-12 <= exact <= hi + 1e-12


def test_bracket_exact_on_full_shift_depth_one(full2, binary_phi):
    lo, hi = pressure_bracketed(full2, binary_phi, 1.0, 10)
    assert lo == pytest.approx(math.log(1 + math.e), abs=1e-13)
    assert hi == pytest.approx(math.log(1 + math.e), abs=1e-13)


def test_bracket_budget(full2, binary_phi):
    with pytest.raises(BudgetExceeded):
        pressure_bracketed(full2, binary_phi, 1.0, 12, budget=1000)


def test_pointwise_brackets_nest():
    cmap = PiecewiseConformalMap.full_branched([2.0, 2.0])
    phi = Pointwise(Formula("x**2"), cmap)
    lo8, hi8 = pressure_bracketed(cmap, phi, 1.0, 8)
    lo12, hi12 = pressure_bracketed(cmap, phi, 1.0, 12)
    assert lo8 <= hi8 and lo12 <= hi12
    assert max(lo8, lo12) <= min(hi8, hi12)
    assert hi12 - lo12 < hi8 - lo8


def test_geometric_on_linear_map_is_exact():
    cmap = PiecewiseConformalMap.full_branched([2.0, 4.0])
    # P(-t log a) = log(2^-t + 4^-t)
    for t in (0.0, 0.5, 1.0):
        assert pressure_exact_sft(cmap.symbolic(), Geometric(cmap), -t) == pytest.approx(math.log(2**-t + 4**-t), abs=1e-12)


def test_rpf_measure_binary(full2, binary_phi):
    meas = rpf_equilibrium(full2, binary_phi, 1.0)
    p = math.e / (1 + math.e)
    np.testing.assert_allclose(meas.stationary, [1 - p, p], atol=1e-12)
    assert meas.integral(binary_phi) == pytest.approx(p, abs=1e-12)
    assert meas.entropy + meas.integral(binary_phi) == pytest.approx(math.log(1 + math.e), abs=1e-12)


def test_rpf_measure_depth_two_variational_equality():
    t = LocallyConstant(np.array([[0.0, 0.2], [0.1, 0.3]]))
    gm = SymbolicSystem.full(2)
    meas = rpf_equilibrium(gm, t, 1.0)
    assert meas.entropy + meas.integral(t) == pytest.approx(float(pressure_exact_sft(gm, t, 1.0)), abs=1e-12)
    np.testing.assert_allclose(meas.stationary @ meas.matrix, meas.stationary, atol=1e-14)
    np.testing.assert_allclose(meas.matrix.sum(axis=1), 1.0, atol=1e-14)


def test_rpf_reducible_support_names_components():
    a = np.array([[1, 1], [0, 1]])
    with pytest.raises(ValueError, match="components"):
        rpf_equilibrium(SymbolicSystem(a), LocallyConstant.from_vector([0.0, 0.0]))
    comps = support_components(SymbolicSystem(a), LocallyConstant.from_vector([0.0, 0.0]), 1.0)
    assert len(comps) == 2


def test_rpf_glued_tie_recorded():
    glued = GluedSystem((SymbolicSystem.full(2), SymbolicSystem.full(2)))
    meas = rpf_equilibrium(glued, LocallyConstant.from_vector([0.0, 1.0, 1.0, 0.0]), 1.0)
    assert meas.tied_parts == (0, 1)


def test_bernoulli_masses_exact():
    meas = MarkovMeasure.bernoulli([0.25, 0.75])
    assert meas.cylinder_log_mass([0, 1, 1]) == pytest.approx(math.log(0.25 * 0.75 * 0.75), abs=1e-15)


def test_derivative_check_smooth_and_kink():
    full2 = SymbolicSystem.full(2)
    rep = pressure_derivative_check(full2, LocallyConstant.from_vector([0.0, 1.0]), 0.7)
    assert rep.differentiable and rep.discrepancy < 1e-7
    glued = GluedSystem((full2, full2))
    rep = pressure_derivative_check(glued, LocallyConstant.from_vector([0.0, 0.0, 1.0, 1.0]), 0.0)
    assert not rep.differentiable


def test_two_parameter_closed_form():
    cmap = PiecewiseConformalMap.full_branched([2.0, 4.0])
    phi = LocallyConstant.from_vector([0.3, -0.2])
    la = Geometric(cmap).as_locally_constant()
    q, t = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(-1, 2, 4))
    got = two_parameter_pressure(cmap.symbolic(), phi, la, q, t)
    expected = np.log(np.exp(0.3 * q) * 2.0**-t + np.exp(-0.2 * q) * 4.0**-t)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_pressure_curve_methods(full2, binary_phi):
    curve = pressure_curve(full2, binary_phi, [-1.0, 0.0, 1.0])
    assert set(curve.method) == {"ExactSpectral"}
    np.testing.assert_array_equal(curve.lo, curve.values)
    cmap = PiecewiseConformalMap.full_branched([2.0, 2.0])
    curve = pressure_curve(cmap, Pointwise(Formula("x"), cmap), [0.0, 1.0], n=8)
    assert set(curve.method) == {"Bracketed"}
    assert np.all(curve.lo <= curve.values) and np.all(curve.values <= curve.hi)
    with pytest.raises(ValueError):
        pressure_curve(full2, binary_phi, [1.0, 0.0])


def test_variational_lower_bound_below_pressure(full2, binary_phi):
    meas = rpf_equilibrium(full2, binary_phi, 0.5)
    q = np.linspace(-4, 4, 33)
    lb = variational_lower_bound(meas, binary_phi, q)
    assert np.all(lb.values <= np.logaddexp(0, q) + 1e-12)
    i = int(np.argmin(np.abs(q - 0.5)))
    assert lb.values[i] == pytest.approx(math.log(1 + math.exp(0.5)), abs=1e-12)
