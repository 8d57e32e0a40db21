"""Built-in scenarios with closed-form answers.

Each fixture computes a handful of quantities with the library and compares
them with formulas evaluated independently here. ``run`` returns one
:class:`Check` per comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .legendre import concave_hull, is_concave, phase_transitions
from .potentials import LocallyConstant
from .spectra import (
    birkhoff_spectrum_legendre,
    bowen_root,
    dimension_T,
    glued_spectrum,
    lyapunov_spectra,
    pressure_samples,
    singular_spectrum,
)
from .systems import GluedSystem, PiecewiseConformalMap, SymbolicSystem
from .thermo import SingularityError, pressure_exact_sft
from .potentials import center


@dataclass(frozen=True)
class Check:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name}: error {self.error:.3g} (tolerance {self.tolerance:.3g})"


def _binary_entropy(a):
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.where(a > 0, a * np.log(a), 0.0) - np.where(a < 1, (1 - a) * np.log1p(-a), 0.0)


def binary_entropy() -> list[Check]:
    """Full 2-shift with ``phi = (0, 1)``: ``T(q) = log(1 + e^q)``, spectrum = binary entropy."""
    sys_ = SymbolicSystem.full(2)
    phi = LocallyConstant.from_vector([0.0, 1.0])
    q = np.linspace(-20, 20, 4001)
    t = pressure_exact_sft(sys_, phi, q)
    alphas = np.linspace(0.05, 0.95, 91)
    spec = birkhoff_spectrum_legendre(pressure_samples(sys_, phi), alpha_points=alphas)
    got = np.asarray([spec.value_at(a) for a in alphas])
    return [
        Check("pressure = log(1 + e^q) on [-20, 20]", float(np.max(np.abs(t - np.logaddexp(0, q)))), 1e-9),
        Check("Birkhoff spectrum = binary entropy on [0.05, 0.95]", float(np.max(np.abs(got - _binary_entropy(alphas)))), 1e-6),
    ]


def _glued(v, w):
    sys_ = GluedSystem((SymbolicSystem.full(len(v)), SymbolicSystem.full(len(w))))
    return sys_, LocallyConstant.from_vector(list(v) + list(w))


def glued_transition() -> list[Check]:
    """Two full 2-shifts with ``v = (0, 1)`` and ``w = (2, 3)``: a kink at ``q = 0``."""
    v, w = (0.0, 1.0), (2.0, 3.0)
    sys_, phi = _glued(v, w)
    q = np.linspace(-20, 20, 4001)
    closed = np.maximum(np.log(np.exp(q * v[0]) + np.exp(q * v[1])), np.logaddexp(q * w[0], q * w[1]))
    F = pressure_samples(sys_, phi)
    kinks = phase_transitions(F)
    k = kinks[0] if len(kinks) == 1 else None
    spec = glued_spectrum(sys_, phi)
    fin = spec.finite()
    hull = concave_hull(spec.alpha[fin], spec.values[fin])
    return [
        Check("pressure = max of part closed forms", float(np.max(np.abs(pressure_exact_sft(sys_, phi, q) - closed))), 1e-9),
        Check("one transition at q = 0", abs(k.q) if k else math.inf, 1e-3),
        Check("gap left slope = mean of v", abs(k.left_slope - 0.5) if k else math.inf, 1e-3),
        Check("gap right slope = mean of w", abs(k.right_slope - 2.5) if k else math.inf, 1e-3),
        Check("glued spectrum is not concave", float(is_concave(spec.alpha[fin], spec.values[fin])), 0.0),
        Check("hull is concave and dominates", float(not (is_concave(spec.alpha[fin], hull)
                                                          and np.all(hull >= spec.values[fin]))), 0.0),
    ]


def tangent_parts() -> list[Check]:
    """Parts tangent at ``q = 0`` (equal first moments): no transition is reported."""
    sys_, phi = _glued((-1.0, 1.0), (0.0, 0.0))
    F = pressure_samples(sys_, phi)
    q = F.grid
    closed = np.maximum(np.logaddexp(-q, q), math.log(2.0))
    return [
        Check("pressure = max of part closed forms", float(np.max(np.abs(F.values - closed))), 1e-9),
        Check("no transition reported", float(len(phase_transitions(F))), 0.0),
    ]


def bernoulli_dimension() -> list[Check]:
    """Doubling-type map with two slope-2 branches and Bernoulli(1/4, 3/4)."""
    cmap = PiecewiseConformalMap.full_branched([2.0, 2.0])
    phi = LocallyConstant.from_vector([math.log(0.25), math.log(0.75)])
    phi1 = center(phi, float(pressure_exact_sft(cmap.symbolic(), phi, 1.0)))
    q = np.linspace(-5, 5, 101)
    td = dimension_T(cmap, phi1, q)
    closed = np.log2(0.25**q + 0.75**q)
    return [
        Check("T_D(q) = log2(p^q + (1-p)^q) on [-5, 5]", float(np.max(np.abs(td - closed))), 1e-8),
        Check("T_D(1) = 0", abs(float(dimension_T(cmap, phi1, 1.0))), 1e-10),
        Check("T_D(0) = 1", abs(float(dimension_T(cmap, phi1, 0.0)) - 1.0), 1e-10),
    ]


def bowen_repeller() -> list[Check]:
    """Cantor repeller with slopes 2 and 4: dimension ``log2`` of the golden ratio."""
    cmap = PiecewiseConformalMap.full_branched([2.0, 4.0])
    closed = math.log2((1 + math.sqrt(5)) / 2)
    root = bowen_root(cmap)
    lyap = lyapunov_spectra(cmap)
    return [
        Check("Bowen root = log2 of golden ratio", abs(root - closed), 1e-6),
        Check("max L_D = Bowen root", abs(lyap.max_dimension - root), 1e-6),
    ]


def singular_potential() -> list[Check]:
    """Table ``(1, +inf)`` on the full 2-shift: ``T(q) = q`` for ``q <= 0``."""
    sys_ = SymbolicSystem.full(2)
    phi = LocallyConstant.from_vector([1.0, math.inf])
    q = np.linspace(-20, 0, 2001)
    t = pressure_exact_sft(sys_, phi, q, zero_times_inf=-math.inf)
    spec = singular_spectrum(sys_, phi)
    fin = spec.finite()
    try:
        pressure_exact_sft(sys_, phi, 0.5)
        rejected = False
    except SingularityError:
        rejected = True
    single = fin.sum() == 1 and abs(spec.alpha[fin][0] - 1.0) < 1e-6
    return [
        Check("T(q) = q for q <= 0", float(np.max(np.abs(t - q))), 1e-12),
        Check("single finite spectrum point at alpha = 1", 0.0 if single else 1.0, 0.0),
        Check("B(1) = 0", abs(float(spec.values[fin][0])) if fin.any() else math.inf, 1e-6),
        Check("q > 0 rejected", 0.0 if rejected else 1.0, 0.0),
    ]


FIXTURES: dict[str, Callable[[], list[Check]]] = {
    "binary-entropy": binary_entropy,
    "glued-transition": glued_transition,
    "tangent-parts": tangent_parts,
    "bernoulli-dimension": bernoulli_dimension,
    "bowen-repeller": bowen_repeller,
    "singular": singular_potential,
}


def describe(name: str) -> str:
    doc = FIXTURES[name].__doc__ or ""
    return doc.strip().splitlines()[0]


def run(name: str) -> list[Check]:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return FIXTURES[name]()
