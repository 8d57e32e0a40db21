"""Structural laws checked on randomly generated systems and potentials."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from thermospec import (
    GluedSystem,
    LocallyConstant,
    SampledConvexFunction,
    Status,
    SymbolicSystem,
    birkhoff_spectrum_legendre,
    concave_hull,
    is_concave,
    pressure_samples,
    subdifferential,
    transform_L1,
    transform_L2,
)
from thermospec.legendre import alpha_bounds
from thermospec.potentials import birkhoff_sum
from thermospec.systems import word_count
from thermospec.thermo import pressure_bracketed, pressure_exact_sft

values = st.floats(-3, 3, allow_nan=False).map(lambda x: round(x, 3))


@st.composite
def sft(draw, max_m=3):
    m = draw(st.integers(2, max_m))
    flat = draw(st.lists(st.integers(0, 1), min_size=m * m, max_size=m * m))
    mat = np.array(flat).reshape(m, m)
    if draw(st.booleans()):
        # a cycle through every symbol makes the system irreducible
        mat[np.arange(m), (np.arange(m) + 1) % m] = 1
    assume(np.max(np.abs(np.linalg.eigvals(mat))) > 0.5)
    return SymbolicSystem(mat)


@st.composite
def spread_table(draw, m):
    t = draw(st.lists(values, min_size=m, max_size=m))
    assume(max(t) - min(t) > 0.1)
    return t


@given(sft(), st.integers(1, 5), st.integers(1, 5))
def test_word_counts_submultiplicative(system, a, b):
    assert word_count(system, a + b) <= word_count(system, a) * word_count(system, b)


@given(st.lists(values, min_size=4, max_size=4), st.lists(st.integers(0, 1), min_size=12, max_size=12),
       st.integers(0, 6), st.integers(0, 5))
def test_birkhoff_cocycle(flat, word, a, b):
    phi = LocallyConstant(np.array(flat).reshape(2, 2))
    whole = birkhoff_sum(phi, word, a + b)
    split = birkhoff_sum(phi, word, a) + birkhoff_sum(phi, word[a:], b)
    assert math.isclose(whole, split, abs_tol=1e-12)


@given(st.data())
def test_pressure_convex_in_q(data):
    m = data.draw(st.integers(2, 4))
    phi = LocallyConstant.from_vector(data.draw(st.lists(values, min_size=m, max_size=m)))
    q = np.sort(np.asarray(data.draw(st.lists(st.floats(-8, 8), min_size=3, max_size=3, unique=True))))
    assume(np.min(np.diff(q)) > 1e-3)
    t = pressure_exact_sft(SymbolicSystem.full(m), phi, q)
    w = (q[2] - q[1]) / (q[2] - q[0])
    assert t[1] <= w * t[0] + (1 - w) * t[2] + 1e-10


@given(sft(), st.data(), st.floats(-3, 3), st.integers(2, 5))
def test_brackets_contain_exact_pressure(system, data, q, n):
    m = system.alphabet_size
    phi = LocallyConstant.from_vector(data.draw(st.lists(values, min_size=m, max_size=m)))
    lo, hi = pressure_bracketed(system, phi, q, n)
    exact = float(pressure_exact_sft(system, phi, q))
    assert lo - 1e-10 <= exact <= hi + 1e-10


@given(st.lists(values, min_size=2, max_size=3), st.lists(values, min_size=2, max_size=3), st.floats(-5, 5))
def test_glued_pressure_is_max_of_parts(v, w, q):
    glued = GluedSystem((SymbolicSystem.full(len(v)), SymbolicSystem.full(len(w))))
    phi = LocallyConstant.from_vector(v + w)
    closed = max(np.logaddexp.reduce(q * np.array(v)), np.logaddexp.reduce(q * np.array(w)))
    assert math.isclose(float(pressure_exact_sft(glued, phi, q)), closed, abs_tol=1e-9)


@settings(max_examples=12)
@given(st.data())
def test_duality_round_trip(data):
    m = data.draw(st.integers(2, 3))
    phi = LocallyConstant.from_vector(data.draw(spread_table(m)))
    F = pressure_samples(SymbolicSystem.full(m), phi)
    spec = birkhoff_spectrum_legendre(F)
    keep = np.asarray(spec.status) == Status.PROVED_EQUAL.value
    q = np.linspace(-5, 5, 41)
    back = transform_L2(spec.alpha[keep], spec.values[keep], q)
    assert np.max(np.abs(back - F(q))) < 5e-3


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=40))
def test_hull_is_least_concave_majorant(samples):
    a = np.arange(len(samples), dtype=float)
    s = np.asarray(samples)
    h = concave_hull(a, s)
    assert np.all(h >= s)
    assert is_concave(a, h)
    np.testing.assert_allclose(concave_hull(a, h), h, atol=1e-12)
    if is_concave(a, s, tol=0.0):
        np.testing.assert_allclose(h, s, atol=1e-12)


@given(st.data())
def test_subdifferential_monotone(data):
    m = data.draw(st.integers(2, 3))
    phi = LocallyConstant.from_vector(data.draw(st.lists(values, min_size=m, max_size=m)))
    func = lambda q: pressure_exact_sft(SymbolicSystem.full(m), phi, q)
    grid = np.linspace(-6, 6, 121)
    use_func = data.draw(st.booleans())
    sd = subdifferential(SampledConvexFunction(grid, func(grid), func if use_func else None))
    assert np.all(sd.lower <= sd.upper + 1e-12)
    assert np.all(sd.upper[:-1] <= sd.lower[1:] + 1e-12)


@settings(max_examples=12)
@given(st.data())
def test_transform_L1_concave(data):
    m = data.draw(st.integers(2, 3))
    phi = LocallyConstant.from_vector(data.draw(spread_table(m)))
    F = pressure_samples(SymbolicSystem.full(m), phi)
    lo, hi = alpha_bounds(F)
    alpha = np.linspace(lo, hi, 23)[1:-1]
    vals = np.array([t.value for t in transform_L1(F, alpha)])
    assert np.all(np.isfinite(vals))
    assert is_concave(alpha, vals, tol=1e-6)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_affine_pressure_has_single_point(intercept, slope):
    func = lambda q: intercept + slope * np.asarray(q, dtype=float)
    grid = np.linspace(-10, 10, 201)
    F = SampledConvexFunction(grid, func(grid), func)
    at, off_lo, off_hi = transform_L1(F, [slope, slope - 0.5, slope + 0.5])
    assert math.isclose(at.value, intercept, abs_tol=1e-9)
    assert off_lo.value == -math.inf and off_hi.value == -math.inf
