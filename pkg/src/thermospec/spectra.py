"""Multifractal spectra from pressure curves, with per-point validity statuses.

Each spectrum is a Legendre transform of a pressure-type function. Points
are tagged with the reason their value is trusted: a witnessing ``q`` in a
smooth region, a phase-transition gap where only the concave hull is
known, a per-part maximum for glued systems, an empty level set, the
high-entropy window of a discontinuous potential, or the ``q <= 0`` regime
of a singular potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _parallel
from .legendre import (
    PhaseTransition,
    SampledConvexFunction,
    _func_derivatives,
    alpha_bounds,
    default_q_grid,
    phase_transitions,
    subdifferential,
    transform_L1,
)
from .potentials import AnyPotential, BracketEngine, Geometric, LocallyConstant, center, exact_table, birkhoff_sum
from .systems import (
    BudgetExceeded,
    GluedSystem,
    PiecewiseConformalMap,
    as_symbolic,
    topological_entropy_exact,
    word_blocks,
    word_count,
)
from .thermo import (
    DEFAULT_BUDGET,
    MarkovMeasure,
    SingularityError,
    part_pressures,
    pressure_combination,
    pressure_exact_sft,
    _parts,
    _restricted,
)

GAP_SAMPLES = 11
DEDUP_TOL = 1e-10


class Status(str, Enum):
    PROVED_EQUAL = "ProvedEqual"
    HULL = "ConcaveHullUpperBound"
    GLUED = "GluedExact"
    OUT_OF_DOMAIN = "OutOfDomain"
    HIGH_ENTROPY = "HighEntropyWindow"
    SINGULAR = "SingularRegime"


@dataclass(frozen=True, eq=False)
class SpectrumCurve:
    """Sampled spectrum ``alpha -> value`` with a status per point.

    ``witness`` holds the ``q`` whose subdifferential contains ``alpha``
    (``nan`` when the value comes from an inside-gap or requested point).
    """

    alpha: np.ndarray
    values: np.ndarray
    status: tuple[str, ...]
    witness: np.ndarray
    label: str = ""
    transitions: tuple[PhaseTransition, ...] = ()
    notes: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.alpha)

    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def with_status(self, status: Sequence[str], note: str | None = None) -> "SpectrumCurve":
        notes = self.notes + ((note,) if note else ())
        return replace(self, status=tuple(status), notes=notes)

    def value_at(self, alpha: float, tol: float = 1e-9) -> float:
        i = int(np.argmin(np.abs(self.alpha - alpha)))
        if abs(self.alpha[i] - alpha) > tol * (1 + abs(alpha)):
            raise KeyError(f"alpha = {alpha} is not a sample point")
        return float(self.values[i])


@dataclass(frozen=True)
class OracleEstimate:
    """Direct count of ``n``-cylinders whose Birkhoff-average bracket meets ``[alpha - eps, alpha + eps]``."""

    alpha: float
    epsilon: float
    n: int
    count: int
    estimate: float
    trace: tuple[tuple[int, int, float], ...] = ()


# Assembly of Legendre spectra ------------------------------------------------------


def _dedup(alpha: np.ndarray, *cols: np.ndarray):
    order = np.argsort(alpha, kind="stable")
    alpha = alpha[order]
    cols = [c[order] for c in cols]
    keep = np.ones(alpha.size, dtype=bool)
    last = None
    for i in range(alpha.size):
        if last is not None and abs(alpha[i] - alpha[last]) <= DEDUP_TOL * (1 + abs(alpha[last])):
            keep[i] = False
        else:
            last = i
    return (alpha[keep],) + tuple(c[keep] for c in cols)


def legendre_spectrum(
    F: SampledConvexFunction,
    sign: int = 1,
    equilibrium_available: bool = True,
    usc: bool = False,
    alpha_points: Sequence[float] = (),
    kink_tol: float = 1e-3,
    label: str = "",
) -> SpectrumCurve:
    """``inf_q (T(q) - sign * q * alpha)`` on the image of the grid under the subdifferential.

    ``sign = 1`` gives the ``L1`` transform (Birkhoff-type spectra),
    ``sign = -1`` the ``L3`` transform (entropy and dimension spectra).
    Statuses: ``ProvedEqual`` for ``alpha`` witnessed inside a smooth region
    when equilibrium states are available; ``ConcaveHullUpperBound`` inside
    phase-transition gaps and at closed region endpoints unless ``usc``;
    ``OutOfDomain`` (value ``-inf``) outside the domain.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    sd = subdifferential(F)
    kinks = tuple(phase_transitions(F, kink_tol))
    g, v = F.finite_grid, F.finite_values
    lo_b, hi_b = alpha_bounds(F)
    at_kink = np.zeros(g.size, dtype=bool)
    for k in kinks:
        at_kink |= np.abs(g - k.q) <= 1e-12 * (1 + abs(k.q))
    slope = 0.5 * (sd.lower + sd.upper)
    fin = np.isfinite(slope)
    rows_a = [slope[fin & ~at_kink]]
    rows_v = [v[fin & ~at_kink] - g[fin & ~at_kink] * slope[fin & ~at_kink]]
    rows_w = [g[fin & ~at_kink]]
    rows_s = [np.full(int(np.sum(fin & ~at_kink)), Status.PROVED_EQUAL.value if equilibrium_available else Status.HULL.value, dtype=object)]
    endpoint_status = Status.PROVED_EQUAL.value if (usc and equilibrium_available) else Status.HULL.value
    # closed endpoints of smooth regions: both ends of each gap and the domain ends
    extra = []
    for k in kinks:
        inner = np.linspace(k.left_slope, k.right_slope, GAP_SAMPLES + 2)[1:-1]
        extra.extend((a, Status.HULL.value) for a in inner)
    for k in kinks:
        extra += [(k.left_slope, endpoint_status), (k.right_slope, endpoint_status)]
    for a in (lo_b, hi_b):
        if np.isfinite(a):
            extra.append((a, endpoint_status))
    for a in alpha_points:
        extra.append((float(sign * a), None))
    if extra:
        ea = np.asarray([e[0] for e in extra], dtype=float)
        tv = transform_L1(F, ea)
        ev = np.asarray([t.value for t in tv])
        ew = np.asarray([t.argmin[0] if t.argmin[0] == t.argmin[1] else np.nan for t in tv])
        es = []
        for (a, st), t in zip(extra, tv):
            if t.unbounded:
                es.append(Status.OUT_OF_DOMAIN.value)
            elif st is not None:
                es.append(st)
            else:
                es.append(_status_of_point(a, kinks, lo_b, hi_b, endpoint_status, equilibrium_available, usc))
        rows_a.append(ea)
        rows_v.append(ev)
        rows_w.append(ew)
        rows_s.append(np.asarray(es, dtype=object))
    a = np.concatenate(rows_a)
    vals = np.concatenate(rows_v)
    wit = np.concatenate(rows_w)
    st = np.concatenate(rows_s)
    # grid-witnessed rows come first so they win deduplication
    a, vals, wit, st = _dedup_keep_first(a, vals, wit, st)
    if sign == -1:
        a = -a
        order = np.argsort(a, kind="stable")
        a, vals, wit, st = a[order], vals[order], wit[order], st[order]
    return SpectrumCurve(a, vals, tuple(str(s) for s in st), wit, label, kinks)


def _dedup_keep_first(a, vals, wit, st):
    rank = np.arange(a.size)
    order = np.lexsort((rank, a))
    a, vals, wit, st = a[order], vals[order], wit[order], st[order]
    keep = np.ones(a.size, dtype=bool)
    start = 0
    for i in range(1, a.size + 1):
        if i == a.size or abs(a[i] - a[start]) > DEDUP_TOL * (1 + abs(a[start])):
            grp = np.arange(start, i)
            # prefer the earliest-inserted row in a cluster of equal alphas
            best = grp[np.argmin(order[grp])]
            keep[grp] = False
            keep[best] = True
            start = i
    return a[keep], vals[keep], wit[keep], st[keep]


def _status_of_point(a, kinks, lo_b, hi_b, endpoint_status, equilibrium_available, usc) -> str:
    tol = 1e-9
    for k in kinks:
        if k.left_slope + tol < a < k.right_slope - tol:
            return Status.HULL.value
        if abs(a - k.left_slope) <= tol or abs(a - k.right_slope) <= tol:
            return endpoint_status
    if abs(a - lo_b) <= tol or abs(a - hi_b) <= tol:
        return endpoint_status
    return Status.PROVED_EQUAL.value if equilibrium_available else Status.HULL.value


def pressure_function(system, potential: AnyPotential, zero_times_inf: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised exact pressure ``q -> P(q phi)``."""
    tab = exact_table(potential)
    if tab is None:
        raise TypeError("spectra need a locally constant potential or log a of a piecewise-linear map")

    def func(q):
        return np.asarray(pressure_exact_sft(system, tab, np.asarray(q, dtype=float), zero_times_inf), dtype=float)

    return func


def pressure_samples(system, potential, q_grid=None) -> SampledConvexFunction:
    """Exact pressure of ``potential`` sampled on ``q_grid`` (default grid with extension)."""
    func = pressure_function(system, potential)
    grid = default_q_grid(func) if q_grid is None else np.asarray(q_grid, dtype=float)
    return SampledConvexFunction(grid, func(grid), func)


def birkhoff_spectrum_legendre(F: SampledConvexFunction, equilibrium_available: bool = True, usc: bool = False,
                               alpha_points: Sequence[float] = (), kink_tol: float = 1e-3) -> SpectrumCurve:
    """Birkhoff spectrum ``B = T^{L1}`` with validity statuses."""
    return legendre_spectrum(F, 1, equilibrium_available, usc, alpha_points, kink_tol, "birkhoff")


# Glued systems -----------------------------------------------------------------------


def glued_spectrum(system: GluedSystem, potential: AnyPotential, q_grid=None, alpha_points: Sequence[float] = (),
                   kink_tol: float = 1e-3) -> SpectrumCurve:
    """Birkhoff spectrum of a glued system as the pointwise maximum of its parts' spectra.

    Each part must be free of phase transitions on the grid. The result is
    exact (``GluedExact``) wherever finite and is typically not concave
    across the glued system's own transition gap.
    """
    tab = exact_table(potential)
    if tab is None:
        raise TypeError("glued spectra need a locally constant potential")
    sym = as_symbolic(system)
    full = sym.alphabet_size
    parts = []
    for i, (part, symbols) in enumerate(_parts(sym)):
        ptab = _restricted(tab, symbols, full)
        F = pressure_samples(part, ptab, q_grid)
        if phase_transitions(F, kink_tol):
            raise ValueError(f"part {i} has its own phase transition; decompose it further")
        parts.append(F)
    whole = pressure_samples(sym, tab, q_grid)
    alphas = [np.asarray(alpha_points, dtype=float)]
    for F in parts:
        alphas.append(legendre_spectrum(F).alpha)
    for k in phase_transitions(whole, kink_tol):
        alphas.append(np.linspace(k.left_slope, k.right_slope, GAP_SAMPLES + 2))
    a = np.unique(np.concatenate(alphas))
    (a,) = _dedup(a)
    per_part = np.stack([[t.value for t in transform_L1(F, a)] for F in parts])
    vals = per_part.max(axis=0)
    status = tuple(Status.GLUED.value if np.isfinite(x) else Status.OUT_OF_DOMAIN.value for x in vals)
    return SpectrumCurve(a, vals, status, np.full(a.size, np.nan), "glued", tuple(phase_transitions(whole, kink_tol)),
                         (f"maximum over {len(parts)} parts",))


# Direct level-set oracle -----------------------------------------------------------------


def birkhoff_spectrum_direct(system, potential: AnyPotential, alpha_grid: Sequence[float], epsilon: float,
                             n_list: Sequence[int], budget: int = DEFAULT_BUDGET) -> list[OracleEstimate]:
    """Count ``n``-cylinders whose average bracket meets ``[alpha - eps, alpha + eps]``.

    The estimate is ``(1/n) log N_n``; each :class:`OracleEstimate` reports
    the largest ``n`` and carries the whole trace over ``n_list``.
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    sym = as_symbolic(system) if not isinstance(system, PiecewiseConformalMap) else system.symbolic()
    traces: list[list[tuple[int, int, float]]] = [[] for _ in alphas]
    for n in sorted(set(int(n) for n in n_list)):
        count_n = word_count(sym, n)
        if count_n > budget:
            raise BudgetExceeded(f"{count_n} cylinders of length {n} exceed the budget of {budget}")
        engine = BracketEngine(potential, system if isinstance(system, PiecewiseConformalMap) else sym)
        slack = 1e-12 * (1 + np.abs(alphas))
        a_lo = alphas - epsilon - slack
        a_hi = alphas + epsilon + slack

        def work(block):
            lo, hi = engine(block)
            lo = np.sort(lo / n)
            hi = np.sort(hi / n)
            below = np.searchsorted(hi, a_lo, side="left")
            above = lo.size - np.searchsorted(lo, a_hi, side="right")
            return lo.size - below - above

        counts = np.zeros(alphas.size, dtype=np.int64)
        for c in _parallel.ordered_map(work, word_blocks(sym, n)):
            counts += c
        for j, c in enumerate(counts):
            est = math.log(int(c)) / n if c > 0 else -math.inf
            traces[j].append((n, int(c), est))
    out = []
    for j, a in enumerate(alphas):
        n, c, est = traces[j][-1]
        out.append(OracleEstimate(float(a), float(epsilon), n, c, est, tuple(traces[j])))
    return out


# Entropy spectrum ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EntropyResult:
    spectrum: SpectrumCurve
    centred_pressure: SampledConvexFunction
    pressure: float


def entropy_spectrum(system, potential: AnyPotential, pressure: float | None = None, q_grid=None,
                     equilibrium_available: bool = True, usc: bool = False,
                     alpha_points: Sequence[float] = ()) -> EntropyResult:
    """Local entropy spectrum ``E = T_E^{L3}`` with ``T_E(q) = P(q (phi - P(phi)))``."""
    tab = exact_table(potential)
    if tab is None:
        raise TypeError("entropy spectra need a locally constant potential")
    if pressure is None:
        pressure = float(pressure_exact_sft(system, tab, 1.0))
    phi1 = center(tab, pressure)
    F = pressure_samples(system, phi1, q_grid)
    spec = legendre_spectrum(F, -1, equilibrium_available, usc, alpha_points, label="entropy")
    return EntropyResult(spec, F, pressure)


# Lyapunov spectra and the Bowen equation ------------------------------------------------------


def _log_factor_table(cmap: PiecewiseConformalMap) -> LocallyConstant:
    if not cmap.is_linear:
        raise TypeError("exact Lyapunov and dimension spectra need a piecewise-linear map")
    return Geometric(cmap).as_locally_constant()


def _require_expanding(cmap: PiecewiseConformalMap) -> float:
    lam = cmap.min_factor
    if not lam > 1.0:
        raise ValueError(f"map is not uniformly expanding (min |a| = {lam:.6g}); dimension spectra are refused")
    return math.log(lam)


def bowen_root(cmap: PiecewiseConformalMap, tol: float = 1e-14) -> float:
    """The unique ``s`` with ``P(-s log a) = 0``."""
    log_lambda = _require_expanding(cmap)
    la = _log_factor_table(cmap)
    sym = cmap.symbolic()
    h = topological_entropy_exact(sym)
    f = lambda s: float(pressure_exact_sft(sym, la, -s))
    hi = h / log_lambda + 1.0
    return brentq(f, 0.0 if h >= 0 else -hi, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True, eq=False)
class LyapunovResult:
    entropy_curve: SpectrumCurve
    dimension_curve: SpectrumCurve
    bowen_root: float
    max_dimension: float
    argmax: float


def lyapunov_spectra(cmap: PiecewiseConformalMap, q_grid=None, usc: bool = False) -> LyapunovResult:
    """``L_E`` (Birkhoff spectrum of ``log a``), ``L_D = L_E / alpha`` and the Bowen root.

    ``max L_D`` is refined by a bounded scalar search over ``alpha`` with the
    transform evaluated exactly at each trial point.
    """
    _require_expanding(cmap)
    la = _log_factor_table(cmap)
    sym = cmap.symbolic()
    F = pressure_samples(sym, la, q_grid)
    le = legendre_spectrum(F, 1, True, usc, label="lyapunov-entropy")
    pos = le.alpha > 0
    ld_vals = np.where(pos, le.values / np.where(pos, le.alpha, 1.0), np.nan)
    ld = SpectrumCurve(le.alpha[pos], ld_vals[pos], tuple(np.asarray(le.status)[pos]), le.witness[pos],
                       "lyapunov-dimension", le.transitions)
    root = bowen_root(cmap)
    lo_b, hi_b = alpha_bounds(F)
    fin = np.isfinite(ld.values)
    i = int(np.argmax(np.where(fin, ld.values, -np.inf)))
    objective = lambda a: -transform_L1(F, [a])[0].value / a
    lo_s = ld.alpha[max(i - 1, 0)]
    hi_s = ld.alpha[min(i + 1, ld.alpha.size - 1)]
    best_a, best_v = float(ld.alpha[i]), float(ld.values[i])
    if hi_s > lo_s:
        res = minimize_scalar(objective, bounds=(max(lo_s, lo_b), min(hi_s, hi_b)), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best_v:
            best_a, best_v = float(res.x), float(-res.fun)
    return LyapunovResult(le, ld, root, best_v, best_a)


# Dimension spectrum -----------------------------------------------------------------------


def _two_param(sym, phi1: LocallyConstant, la: LocallyConstant):
    def p(q, t):
        return np.asarray(pressure_combination(sym, [(phi1, q), (la, -np.asarray(t, dtype=float))]), dtype=float)
    return p


def dimension_T(cmap: PiecewiseConformalMap, phi1: AnyPotential, q, tol: float = 1e-13):
    """Root ``t`` of ``P(q phi1 - t log a) = 0`` for each ``q``; ``+inf`` when no root exists.

    ``phi1`` must already be centred (``P(phi1) = 0``).
    """
    log_lambda = _require_expanding(cmap)
    la = _log_factor_table(cmap)
    tab = exact_table(phi1)
    if tab is None:
        raise TypeError("dimension_T needs a locally constant potential")
    sym = cmap.symbolic()
    p = _two_param(sym, tab, la)
    qa = np.atleast_1d(np.asarray(q, dtype=float))
    h = topological_entropy_exact(sym)
    t_max = (h + np.abs(qa) * tab.bound) / log_lambda + 1.0
    lo, hi = -t_max, t_max.copy()
    p_lo, p_hi = p(qa, lo), p(qa, hi)
    # monotonicity of each t-section on a coarse probe
    probes = np.linspace(0.0, 1.0, 9)
    sect = np.stack([p(qa, lo + s * (hi - lo)) for s in probes])
    if np.any(np.diff(sect, axis=0) > 1e-9 * (1 + np.abs(sect[:-1]))):
        raise ValueError("two-parameter pressure is not decreasing in t; expansivity assumption violated")
    out = np.full(qa.shape, np.nan)
    out[p_hi > 0] = np.inf
    if np.any(p_lo < 0):
        raise ValueError("pressure negative at -t_max; the t bound is invalid for this potential")
    active = ~(p_hi > 0)
    a, b = lo.copy(), hi.copy()
    for _ in range(200):
        if not active.any():
            break
        mid = 0.5 * (a + b)
        pm = p(qa, mid)
        pos = pm > 0
        a = np.where(active & pos, mid, a)
        b = np.where(active & ~pos, mid, b)
        done = (b - a) <= tol * (1 + np.abs(a))
        out = np.where(active & done, 0.5 * (a + b), out)
        active &= ~done
    out = np.where(active, 0.5 * (a + b), out)
    return out if np.ndim(q) else float(out[0])


@dataclass(frozen=True, eq=False)
class StripCheck:
    smooth: bool
    t_sections: tuple[tuple[float, int], ...]
    q_sections: tuple[tuple[float, int], ...]
    eta: float


def strip_smoothness(cmap: PiecewiseConformalMap, phi1: LocallyConstant, q_window: tuple[float, float],
                     td: Callable[[np.ndarray], np.ndarray], points: int = 401, tol: float = 1e-3) -> StripCheck:
    """Kink search on five t-sections and five q-sections around the graph of ``T_D``.

    ``eta = 0.05 (1 + max |T_D|)`` over the window sets the strip half-height.
    """
    la = _log_factor_table(cmap)
    p = _two_param(cmap.symbolic(), phi1, la)
    q0, q1 = q_window
    qs = np.linspace(q0, q1, points)
    tvals = np.asarray(td(qs), dtype=float)
    eta = 0.05 * (1 + float(np.max(np.abs(tvals))))
    t_secs, q_secs = [], []
    for t in np.quantile(tvals, [0.0, 0.25, 0.5, 0.75, 1.0]):
        f = lambda q, t=t: p(np.asarray(q), t)
        F = SampledConvexFunction(qs, f(qs), f)
        t_secs.append((float(t), len(phase_transitions(F, tol))))
    for q in np.linspace(q0, q1, 5):
        tc = float(td(np.asarray([q]))[0])
        ts = np.linspace(tc - eta, tc + eta, points)
        f = lambda t, q=q: p(q, np.asarray(t))
        F = SampledConvexFunction(ts, f(ts), f)
        q_secs.append((float(q), len(phase_transitions(F, tol))))
    smooth = all(k == 0 for _, k in t_secs + q_secs)
    return StripCheck(smooth, tuple(t_secs), tuple(q_secs), eta)


@dataclass(frozen=True, eq=False)
class DimensionResult:
    spectrum: SpectrumCurve
    T: SampledConvexFunction
    strip: StripCheck


def dimension_spectrum(cmap: PiecewiseConformalMap, potential: AnyPotential, q_grid=None, usc: bool = False,
                       alpha_points: Sequence[float] = ()) -> DimensionResult:
    """Pointwise dimension spectrum ``D = T_D^{L3}`` of the equilibrium state of ``potential``.

    Points witnessed inside a smooth region are ``ProvedEqual`` only if the
    two-parameter pressure shows no kink on the sampled strip sections.
    """
    tab = exact_table(potential)
    if tab is None:
        raise TypeError("dimension spectra need a locally constant potential")
    sym = cmap.symbolic()
    phi1 = center(tab, float(pressure_exact_sft(sym, tab, 1.0)))
    td = lambda q: np.asarray(dimension_T(cmap, phi1, np.asarray(q, dtype=float)), dtype=float)
    grid = np.linspace(-20, 20, 801) if q_grid is None else np.asarray(q_grid, dtype=float)
    vals = td(grid)
    F = SampledConvexFunction(grid, vals, td)
    fin = F.finite_grid
    strip = strip_smoothness(cmap, phi1, (float(fin[0]), float(fin[-1])), td)
    spec = legendre_spectrum(F, -1, strip.smooth, usc, alpha_points, label="dimension")
    note = "strip sections smooth" if strip.smooth else "kink found on a strip section"
    return DimensionResult(spec.with_status(spec.status, note), F, strip)


# Weak Gibbs residuals -------------------------------------------------------------------------


@dataclass(frozen=True)
class GibbsReport:
    n_list: tuple[int, ...]
    max_residual: tuple[float, ...]
    constant: float
    passed: bool
    exact: bool
    note: str = ""


def weak_gibbs_check(system, potential: AnyPotential, measure: MarkovMeasure, pressure: float,
                     sample_words: np.ndarray, n_list: Sequence[int]) -> GibbsReport:
    """Residuals ``|-(1/n) log mu[x_1..x_n] + (1/n) S_n phi(x) - P|`` over sample words.

    ``C = max_n n * r_n`` is reported. The check passes when residuals are
    identically zero (below 1e-12) or when ``n r_n`` does not grow: its value
    on the later half of ``n_list`` stays within 1.5 times its earlier maximum.
    """
    tab = exact_table(potential)
    if tab is None:
        raise TypeError("weak Gibbs residuals need a locally constant potential")
    words = np.asarray(sample_words, dtype=np.int64)
    ns = tuple(sorted(int(n) for n in n_list))
    need = ns[-1] + tab.depth - 1
    if words.shape[1] < need:
        raise ValueError(f"sample words must have length >= {need}")
    worst = []
    note = ""
    for n in ns:
        logm = measure.log_masses(words[:, :n])
        sums = np.asarray([birkhoff_sum(tab, w, n) for w in words])
        with np.errstate(invalid="ignore"):
            r = np.abs(-logm / n + sums / n - pressure)
        if np.isinf(logm).any():
            note = "zero-mass cylinder among the samples"
            r = np.where(np.isinf(logm), np.inf, r)
        worst.append(float(np.max(r)))
    scaled = [n * r for n, r in zip(ns, worst)]
    constant = float(max(scaled))
    exact = all(r <= 1e-12 for r in worst)
    half = max(1, len(ns) // 2)
    early, late = max(scaled[:half]), max(scaled[half:]) if len(ns) > 1 else scaled[0]
    bounded = np.isfinite(constant) and late <= 1.5 * early + 1e-9
    return GibbsReport(ns, tuple(worst), constant, bool(exact or bounded), exact, note)


def local_dimension_estimate(cmap: PiecewiseConformalMap, measure: MarkovMeasure, n: int, samples: int,
                             seed: int = 0) -> tuple[float, float]:
    """Mean of ``-log mu[x_1..x_n] / S_n log a(x)`` over sampled words, with ``h / lambda``.

    Returns (sampled mean, ``h(mu) / lambda(mu)``).
    """
    _require_expanding(cmap)
    la = _log_factor_table(cmap)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(samples):
        w = measure.sample(rng, n)
        ratios.append(-measure.cylinder_log_mass(w) / birkhoff_sum(la, w, n))
    lyap = measure.integral(la)
    return float(np.mean(ratios)), measure.entropy / lyap


# High-entropy window ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EntropyWindow:
    alpha_interval: tuple[float, float] | None
    q_interval: tuple[float, float] | None
    spectrum: SpectrumCurve | None


def high_entropy_window(F: SampledConvexFunction, h0: float, spectrum: SpectrumCurve | None = None) -> EntropyWindow:
    """``I_A = {alpha : T^{L1}(alpha) > h0}`` and ``I_Q = Q(I_A)`` (open intervals).

    ``T^{L1}(T'(q)) = T(q) - q T'(q)`` is increasing for ``q < 0`` and
    decreasing for ``q > 0``; each endpoint is found by bisection in ``q``.
    Spectrum points outside ``I_A`` are downgraded to ``HighEntropyWindow``.
    """
    if F.func is None:
        raise ValueError("the window needs the exact pressure function")
    func = F.func
    g = F.finite_grid
    h = max(float(g[1] - g[0]), 1e-3)

    def slope(q):
        lo, hi = _func_derivatives(func, q, h * 0.1)
        return 0.5 * (lo + hi)

    def level(q):
        return float(func(np.asarray([q]))[0]) - q * slope(q)

    t0 = float(func(np.asarray([0.0]))[0])
    if not t0 > h0:
        ia = iq = None
    else:
        ends_q, ends_a = [], []
        for far in (g[0], g[-1]):
            if level(far) > h0:
                # the window reaches the asymptotic slope on this side
                lo_b, hi_b = alpha_bounds(F)
                ends_q.append(-math.inf if far < 0 else math.inf)
                ends_a.append(lo_b if far < 0 else hi_b)
                continue
            root = brentq(lambda q: level(q) - h0, far, 0.0, xtol=1e-13) if far < 0 else brentq(
                lambda q: level(q) - h0, 0.0, far, xtol=1e-13)
            ends_q.append(root)
            ends_a.append(slope(root))
        ia = (ends_a[0], ends_a[1])
        iq = (ends_q[0], ends_q[1])
    spec = None
    if spectrum is not None:
        st = list(spectrum.status)
        for i, a in enumerate(spectrum.alpha):
            inside = ia is not None and ia[0] < a < ia[1]
            if not inside and np.isfinite(spectrum.values[i]) and st[i] != Status.OUT_OF_DOMAIN.value:
                st[i] = Status.HIGH_ENTROPY.value
        spec = spectrum.with_status(st, f"points outside the window only satisfy value <= {h0:.17g}")
    return EntropyWindow(ia, iq, spec)


# Singular potentials --------------------------------------------------------------------------


def singular_spectrum(system, potential: LocallyConstant, q_grid=None, alpha_points: Sequence[float] = ()) -> SpectrumCurve:
    """Spectrum of a ``+inf``-valued potential from the ``q <= 0`` side.

    At ``q = 0`` the left limit of the pressure is used (``+inf`` entries keep
    weight 0), so ``T`` is continuous on ``(-inf, 0]``. Witnessed points cover
    ``A((-inf, 0)) = (alpha_min, alpha_0)`` with ``alpha_0 = D-T(0)``.
    """
    grid = np.linspace(-20, 0, 2001) if q_grid is None else np.asarray(q_grid, dtype=float)
    if np.any(grid > 0):
        raise SingularityError("q > 0 is outside the singular regime; spectra there are not covered by the theory implemented")
    if grid[-1] != 0:
        grid = np.append(grid, 0.0)
    func = pressure_function(system, potential, zero_times_inf=-math.inf)
    F = SampledConvexFunction(grid, func(grid), func, hard_ends=(False, True))
    spec = legendre_spectrum(F, 1, True, False, alpha_points, label="singular")
    lo_b, alpha0 = alpha_bounds(F)
    st = []
    for a, s in zip(spec.alpha, spec.status):
        if s == Status.OUT_OF_DOMAIN.value:
            st.append(s)
        elif a > alpha0 + 1e-9:
            st.append(Status.HULL.value)
        else:
            st.append(Status.SINGULAR.value)
    return spec.with_status(st, f"alpha_0 = D-T(0) = {alpha0:.17g}")
