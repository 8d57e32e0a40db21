"""Pressure functions, equilibrium Markov measures and derivative checks.

For a locally constant potential of depth ``k`` on a subshift of finite type
the pressure ``P(sum_j c_j phi_j)`` is the log spectral radius of a weighted
adjacency matrix on the ``max(k-1, 1)``-block graph. Everything else
(brackets from cylinder sums, interval-map potentials) reduces to partition
functions over cylinders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _parallel
from ._perron import log_spectral_radius, perron_vectors, strong_components, is_nontrivial
from .potentials import (
    AnyPotential,
    BracketEngine,
    Combination,
    Geometric,
    LocallyConstant,
    Pointwise,
    exact_table,
)
from .systems import (
    BudgetExceeded,
    GluedSystem,
    PiecewiseConformalMap,
    SymbolicSystem,
    as_symbolic,
    block_presentation,
    word_blocks,
    word_count,
)

DEFAULT_BUDGET = 10**8


class Method(str, Enum):
    EXACT = "ExactSpectral"
    BRACKETED = "Bracketed"
    VARIATIONAL = "VariationalLowerBound"


class SingularityError(ValueError):
    """A positive multiple of a ``+inf`` potential value was requested."""


@dataclass(frozen=True, eq=False)
class PressureCurve:
    """Sampled pressure ``q -> T(q)`` with per-point method and bracket."""

    q_grid: np.ndarray
    values: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    method: tuple[str, ...]
    n_used: tuple[int | None, ...]
    label: str = ""
    notes: tuple[str, ...] = ()

    @property
    def grid(self) -> np.ndarray:
        return self.q_grid

    def __len__(self) -> int:
        return len(self.q_grid)


# Weighted block matrices -------------------------------------------------------


def _parts(system) -> list[tuple[SymbolicSystem, np.ndarray]]:
    """(part, symbols of the part in the full alphabet) for each part."""
    sym = as_symbolic(system)
    if isinstance(sym, GluedSystem):
        return [(p, sym.part_symbols(i)) for i, p in enumerate(sym.parts)]
    return [(sym, np.arange(sym.alphabet_size))]


def _table_of(potential: AnyPotential) -> LocallyConstant:
    tab = exact_table(potential)
    if tab is None:
        raise TypeError("exact pressure needs a locally constant potential (or log a of a piecewise-linear map)")
    return tab


@lru_cache(maxsize=64)
def _block_graph(system: SymbolicSystem, k: int):
    states, edges, words = block_presentation(system, k)
    return states.shape[0], edges[0], edges[1], words


def _edge_values(system: SymbolicSystem, tables: tuple[LocallyConstant, ...]):
    k = max(t.depth for t in tables)
    size, src, dst, words = _block_graph(system, k)
    vals = np.stack([t.table[tuple(words[:, j] for j in range(t.depth))] for t in tables])
    return size, src, dst, vals


def _combine(vals: np.ndarray, coeffs: np.ndarray, zero_times_inf: float) -> np.ndarray:
    """Edge log-weights ``sum_j c_j v_j`` in extended arithmetic, shape (B, E).

    ``c * (+inf)`` is ``-inf`` for ``c < 0`` and ``zero_times_inf`` for ``c == 0``.
    """
    out = np.zeros((coeffs.shape[0], vals.shape[1]))
    for j in range(vals.shape[0]):
        v = vals[j]
        c = coeffs[:, j]
        inf = np.isposinf(v)
        if inf.any() and (c > 0).any():
            raise SingularityError("a potential with +inf values needs a nonpositive coefficient")
        with np.errstate(invalid="ignore"):
            term = c[:, None] * np.where(inf, 0.0, v)[None, :]
        if inf.any():
            term[:, inf] = np.where(c[:, None] < 0, -np.inf, zero_times_inf)
        out += term
    return out


def _log_matrices(system: SymbolicSystem, tables, coeffs, zero_times_inf=0.0) -> np.ndarray:
    size, src, dst, vals = _edge_values(system, tuple(tables))
    logw = _combine(vals, coeffs, zero_times_inf)
    mats = np.full((coeffs.shape[0], size, size), -np.inf)
    mats[:, src, dst] = logw
    return mats


def _restricted(tab: LocallyConstant, symbols: np.ndarray, full: int) -> LocallyConstant:
    if tab.alphabet_size != full:
        raise ValueError(f"potential alphabet {tab.alphabet_size} does not match system alphabet {full}")
    if len(symbols) == full:
        return tab
    return tab.restrict(symbols)


def pressure_combination(system, terms: Sequence[tuple[AnyPotential, object]], zero_times_inf: float = 0.0) -> np.ndarray:
    """Exact ``P(sum_j c_j phi_j)`` for arrays of coefficients ``c_j``.

    ``terms`` pairs each potential with a scalar or array of coefficients; the
    arrays broadcast together and the result has their common shape. For a
    glued system the result is the maximum over parts.
    """
    tabs = [_table_of(p) for p, _ in terms]
    cs = np.broadcast_arrays(*[np.asarray(c, dtype=float) for _, c in terms])
    shape = cs[0].shape
    coeffs = np.stack([c.ravel() for c in cs], axis=1)
    full = as_symbolic(system).alphabet_size
    best = np.full(coeffs.shape[0], -np.inf)
    for part, symbols in _parts(system):
        ptabs = [_restricted(t, symbols, full) for t in tabs]
        mats = _log_matrices(part, ptabs, coeffs, zero_times_inf)
        best = np.maximum(best, log_spectral_radius(mats))
    return best.reshape(shape) if shape else float(best[0])


def pressure_exact_sft(system, potential: AnyPotential, q=1.0, zero_times_inf: float = 0.0):
    """Exact ``T(q) = P(q phi)`` for a locally constant potential.

    Accepts a scalar or an array of ``q``. At ``q = 0`` entries equal to
    ``+inf`` count as weight 1 (plain counting); ``q > 0`` with such entries
    raises :class:`SingularityError`.
    """
    return pressure_combination(system, [(potential, q)], zero_times_inf)


def part_pressures(system, potential: AnyPotential, q=1.0) -> np.ndarray:
    """Exact pressure of each part separately, shape (parts,) + shape(q)."""
    tab = _table_of(potential)
    full = as_symbolic(system).alphabet_size
    out = []
    for part, symbols in _parts(system):
        out.append(pressure_exact_sft(part, _restricted(tab, symbols, full), q))
    return np.asarray(out)


def support_components(system, potential: AnyPotential, q: float) -> list[list[tuple[int, ...]]]:
    """Cycle-carrying strong components of the weighted block graph at ``q``.

    Each component is listed by its block states (words). More than one
    component means the weighted support is reducible.
    """
    tab = _table_of(potential)
    sym = as_symbolic(system)
    if isinstance(sym, GluedSystem):
        sym = sym.as_symbolic()
    size, src, dst, words = _block_graph(sym, max(tab.depth, 1))
    states = block_presentation(sym, tab.depth)[0]
    mat = _log_matrices(sym, [tab], np.array([[q]]))[0]
    sup = np.isfinite(mat)
    comps = [c for c in strong_components(sup) if is_nontrivial(sup, c)]
    return [[tuple(int(s) for s in states[i]) for i in c] for c in comps]


# Brackets from cylinder sums ---------------------------------------------------


def _logsumexp(x: np.ndarray, axis=-1) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(x - m), axis=axis))


def _fsum_logs(logs: Sequence[float]) -> float:
    """``log sum exp(logs)`` with an order-independent exact summation."""
    finite = [v for v in logs if v > -math.inf]
    if not finite:
        return -math.inf
    m = max(finite)
    return m + math.log(math.fsum(math.exp(v - m) for v in finite))


def _scaled_sums(q: float, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bounds of ``q * S`` given ``lo <= S <= hi`` with the counting convention at q = 0."""
    if q == 0:
        z = np.zeros_like(lo)
        return z, z
    with np.errstate(invalid="ignore"):
        a = q * lo
        b = q * hi
    return np.minimum(a, b), np.maximum(a, b)


def _check_budget(system, n: int, budget: int) -> None:
    count = word_count(system, n)
    if count > budget:
        raise BudgetExceeded(f"{count} cylinders of length {n} exceed the budget of {budget}")


def _part_bracket(part: SymbolicSystem, potential, q: float, n: int) -> tuple[float, float]:
    engine = BracketEngine(potential, part)
    m = part.alphabet_size
    a = np.asarray(part.transition, dtype=bool)
    if isinstance(potential, LocallyConstant) and potential.has_infinite and q > 0:
        raise SingularityError("a potential with +inf values needs q <= 0")

    def work(block):
        lo, hi = engine(block)
        low, up = _scaled_sums(q, lo, hi)
        first = block[:, 0]
        per_first = np.full(m, -np.inf)
        for s in np.unique(first):
            per_first[s] = _logsumexp(low[first == s])
        return float(_logsumexp(up)), per_first

    results = _parallel.ordered_map(work, word_blocks(part, n))
    upper = _fsum_logs([r[0] for r in results])
    per_first = [_fsum_logs([r[1][s] for r in results]) for s in range(m)]
    rows = [_fsum_logs([per_first[s] for s in np.flatnonzero(a[i])]) for i in range(m)]
    return min(rows) / n, upper / n


def pressure_bracketed(system, potential: AnyPotential, q: float, n: int, budget: int = DEFAULT_BUDGET) -> tuple[float, float]:
    """Certified bracket ``lo <= P(q phi) <= hi`` from ``n``-cylinder sums.

    The upper bound is ``(1/n) log sum_w sup_[w] e^{q S_n phi}``
    (submultiplicative in ``n``). The lower bound is
    ``(1/n) log min_i sum_{w : i -> w_0} inf_[w] e^{q S_n phi}``, which is
    supermultiplicative under concatenation of cylinders.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    q = float(q)
    sym = as_symbolic(system)
    _check_budget(sym, n, budget)
    if isinstance(potential, (Pointwise, Geometric, Combination)) and exact_table(potential) is None:
        if isinstance(sym, GluedSystem):
            raise TypeError("pointwise potentials live on a single interval map")
        if isinstance(system, PiecewiseConformalMap) and system is not potential.cmap:
            raise ValueError("potential is defined on a different map")
        return _part_bracket(potential.cmap.symbolic(), potential, q, n)
    tab = _table_of(potential)
    full = sym.alphabet_size
    best = (-math.inf, -math.inf)
    for part, symbols in _parts(sym):
        lo, hi = _part_bracket(part, _restricted(tab, symbols, full), q, n)
        best = (max(best[0], lo), max(best[1], hi))
    return best



# Equilibrium measures ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure on the ``block``-block presentation of a shift.

    ``states`` lists the block words, ``matrix`` is the row-stochastic
    transition matrix between them and ``stationary`` its invariant vector.
    """

    states: np.ndarray
    matrix: np.ndarray
    stationary: np.ndarray
    entropy: float
    alphabet_size: int
    pressure: float = math.nan
    part: int = 0
    tied_parts: tuple[int, ...] = ()
    _integrals: dict = field(default_factory=dict, repr=False)

    @classmethod
    def bernoulli(cls, probabilities: Sequence[float]) -> "MarkovMeasure":
        """Product measure with the given symbol probabilities."""
        p = np.asarray(probabilities, dtype=float)
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be positive and sum to 1")
        m = p.size
        h = float(-np.sum(p * np.log(p)))
        return cls(np.arange(m)[:, None], np.tile(p, (m, 1)), p.copy(), h, m)

    @property
    def block(self) -> int:
        return self.states.shape[1]

    def _state_index(self) -> np.ndarray:
        lookup = np.full(self.alphabet_size**self.block, -1, dtype=np.int64)
        lookup[_codes(self.states, self.alphabet_size)] = np.arange(self.states.shape[0])
        return lookup

    def log_masses(self, words: np.ndarray) -> np.ndarray:
        """``log mu[w]`` for each row of a (count, n) word array; ``-inf`` for null cylinders."""
        words = np.asarray(words, dtype=np.int64)
        count, n = words.shape
        s = self.block
        m = self.alphabet_size
        if n < s:
            out = np.empty(count)
            with np.errstate(divide="ignore"):
                logpi = np.log(self.stationary)
            for r, w in enumerate(words):
                sel = np.all(self.states[:, :n] == w, axis=1)
                out[r] = _logsumexp(logpi[sel]) if sel.any() else -np.inf
            return out
        lookup = self._state_index()
        with np.errstate(divide="ignore"):
            logpi = np.log(self.stationary)
            logp = np.log(self.matrix)
        valid = np.all((words >= 0) & (words < m), axis=1)
        safe = np.where(valid[:, None], words, 0)
        idx = [lookup[_codes(safe[:, j : j + s], m)] for j in range(n - s + 1)]
        bad = ~valid
        for i in idx:
            bad |= i < 0
        idx = [np.where(i < 0, 0, i) for i in idx]
        out = logpi[idx[0]].copy()
        for a, b in zip(idx, idx[1:]):
            out = out + logp[a, b]
        out[bad] = -np.inf
        return out

    def cylinder_log_mass(self, word: Sequence[int]) -> float:
        return float(self.log_masses(np.asarray([list(word)]))[0])

    def integral(self, potential: AnyPotential) -> float:
        """``int phi d mu`` for a locally constant potential, exact up to rounding."""
        tab = _table_of(potential)
        key = (tab.table.shape, tab.table.tobytes())
        if key in self._integrals:
            return self._integrals[key]
        if tab.alphabet_size != self.alphabet_size:
            raise ValueError("potential alphabet does not match the measure")
        L = max(tab.depth, self.block)
        total = []
        for block in word_blocks(SymbolicSystem(self._support()), L):
            mass = np.exp(self.log_masses(block))
            vals = tab.table[tuple(block[:, j] for j in range(tab.depth))]
            keep = mass > 0
            total.extend((mass[keep] * vals[keep]).tolist())
        val = math.fsum(total)
        self._integrals[key] = val
        return val

    def _support(self) -> np.ndarray:
        """Symbol transitions charged by the measure (at least one loop-free fallback)."""
        a = np.zeros((self.alphabet_size,) * 2, dtype=np.int8)
        s = self.block
        for u in range(self.states.shape[0]):
            for v in np.flatnonzero(self.matrix[u] > 0):
                w = np.concatenate([self.states[u], self.states[v][-1:]])
                a[w[-2], w[-1]] = 1
                if s > 1:
                    for x, y in zip(w, w[1:]):
                        a[x, y] = 1
        for i in range(self.alphabet_size):
            if not a[i].any():
                a[i, i] = 1
        return a

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """One word of length ``n`` drawn from the measure."""
        state = rng.choice(len(self.stationary), p=self.stationary / self.stationary.sum())
        word = list(self.states[state])
        while len(word) < n:
            row = self.matrix[state]
            state = rng.choice(len(row), p=row / row.sum())
            word.append(int(self.states[state][-1]))
        return np.asarray(word[:n])


def _codes(words: np.ndarray, m: int) -> np.ndarray:
    code = np.zeros(words.shape[0], dtype=np.int64)
    for j in range(words.shape[1]):
        code = code * m + words[:, j]
    return code


def _rpf_single(system: SymbolicSystem, tab: LocallyConstant, q: float) -> MarkovMeasure:
    states = block_presentation(system, tab.depth)[0]
    mat = _log_matrices(system, [tab], np.array([[q]]))[0]
    sup = np.isfinite(mat)
    comps = [c for c in strong_components(sup) if is_nontrivial(sup, c)]
    if len(comps) != 1 or len(comps[0]) != sup.shape[0]:
        names = [[tuple(int(s) for s in states[i]) for i in c] for c in comps]
        raise ValueError(f"weighted support is reducible; components {names} (equilibrium may not be unique)")
    pd = perron_vectors(mat)
    scale = np.max(mat[sup])
    with np.errstate(over="ignore"):
        w = np.where(sup, np.exp(np.where(sup, mat, 0.0) - scale), 0.0)
    rho_scaled = math.exp(pd.log_rho - scale)
    r, l = pd.right, pd.left
    p = w * r[None, :] / (rho_scaled * r[:, None])
    p = p / p.sum(axis=1, keepdims=True)
    pi = l * r
    pi = pi / pi.sum()
    # a few exact stationary refinements remove eigenvector error
    for _ in range(3):
        pi = pi @ p
        pi = pi / pi.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    h = float(-np.sum(pi[:, None] * plogp))
    return MarkovMeasure(states, p, pi, max(h, 0.0), system.alphabet_size, pd.log_rho)


def rpf_equilibrium(system, potential: AnyPotential, q: float = 1.0, tie_tol: float = 1e-12) -> MarkovMeasure:
    """Equilibrium Markov measure of ``q phi`` from the Perron eigenvectors.

    For a glued system the measure of the part with the largest pressure is
    returned (ties go to the first such part and are recorded in
    ``tied_parts``). A reducible weighted support raises ``ValueError``.
    """
    tab = _table_of(potential)
    sym = as_symbolic(system)
    full = sym.alphabet_size
    parts = _parts(sym)
    if len(parts) == 1:
        return _rpf_single(parts[0][0], tab, q)
    press = [float(pressure_exact_sft(p, _restricted(tab, s, full), q)) for p, s in parts]
    top = max(press)
    tied = tuple(i for i, v in enumerate(press) if top - v <= tie_tol * max(1.0, abs(top)))
    i = tied[0]
    part, symbols = parts[i]
    meas = _rpf_single(part, _restricted(tab, symbols, full), q)
    return MarkovMeasure(
        symbols[meas.states],
        meas.matrix,
        meas.stationary,
        meas.entropy,
        full,
        meas.pressure,
        part=i,
        tied_parts=tied if len(tied) > 1 else (),
    )


# Derivatives ---------------------------------------------------------------------


@dataclass(frozen=True)
class DerivativeReport:
    q: float
    step: float
    fd_slope: float
    left_slope: float
    right_slope: float
    integral: float | None
    discrepancy: float | None
    differentiable: bool
    note: str = ""


def pressure_derivative_check(system, potential: AnyPotential, q: float, step: float = 1e-4) -> DerivativeReport:
    """Compare a central difference of ``T`` with ``int phi d nu_q``.

    When the one-sided difference quotients disagree by more than the
    curvature of a smooth function allows, the point is flagged as
    non-differentiable and no single slope is compared.
    """
    qs = np.array([q - step, q, q + step])
    t = np.asarray(pressure_exact_sft(system, potential, qs))
    left = (t[1] - t[0]) / step
    right = (t[2] - t[1]) / step
    fd = (t[2] - t[0]) / (2 * step)
    smooth = abs(right - left) <= max(1e-6, 50.0 * step * (1.0 + abs(fd)))
    if not smooth:
        return DerivativeReport(q, step, fd, left, right, None, None, False, "one-sided slopes differ")
    try:
        meas = rpf_equilibrium(system, potential, q)
    except ValueError as exc:
        return DerivativeReport(q, step, fd, left, right, None, None, True, str(exc))
    val = meas.integral(potential)
    note = f"tie between parts {meas.tied_parts}" if meas.tied_parts else ""
    return DerivativeReport(q, step, fd, left, right, val, abs(fd - val), True, note)



# Two-parameter pressure and curves ---------------------------------------------


def two_parameter_pressure(system, phi: AnyPotential, log_factor: AnyPotential, q, t, n: int | None = None):
    """``P(q phi - t log a)`` for scalars or broadcastable arrays ``q`` and ``t``.

    Exact when both potentials are locally constant; otherwise the midpoint of
    an ``n``-cylinder bracket (``n`` must then be given).
    """
    if exact_table(phi) is not None and exact_table(log_factor) is not None:
        return pressure_combination(system, [(phi, q), (log_factor, -np.asarray(t, dtype=float))])
    if n is None:
        raise ValueError("non-locally-constant potentials need a cylinder length n")
    qa, ta = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(t, dtype=float))
    out = np.empty(qa.shape)
    for idx in np.ndindex(qa.shape):
        combo = Combination(((phi, float(qa[idx])), (log_factor, -float(ta[idx]))))
        lo, hi = pressure_bracketed(system, combo, 1.0, n)
        out[idx] = 0.5 * (lo + hi)
    return out if out.shape else float(out)


def pressure_curve(system, potential: AnyPotential, q_grid, n: int | None = None, label: str = "",
                   zero_times_inf: float = 0.0, budget: int = DEFAULT_BUDGET) -> PressureCurve:
    """Pressure sampled on ``q_grid``: exact when possible, else bracketed at length ``n``."""
    q = np.asarray(q_grid, dtype=float)
    if np.any(np.diff(q) <= 0):
        raise ValueError("q grid must be strictly increasing")
    notes = []
    if exact_table(potential) is not None:
        vals = np.asarray(pressure_exact_sft(system, potential, q, zero_times_inf), dtype=float)
        sym = as_symbolic(system)
        for i, (part, _) in enumerate(_parts(sym)):
            if not part.irreducible:
                notes.append(f"part {i} has reducible support")
        return PressureCurve(q, vals, vals.copy(), vals.copy(), (Method.EXACT.value,) * len(q), (None,) * len(q), label, tuple(notes))
    if n is None:
        raise ValueError("a pointwise potential needs a cylinder length n")
    lo = np.empty_like(q)
    hi = np.empty_like(q)
    for i, qi in enumerate(q):
        lo[i], hi[i] = pressure_bracketed(system, potential, float(qi), n, budget)
    vals = 0.5 * (lo + hi)
    return PressureCurve(q, vals, lo, hi, (Method.BRACKETED.value,) * len(q), (n,) * len(q), label, tuple(notes))


def variational_lower_bound(measure: MarkovMeasure, potential: AnyPotential, q_grid) -> PressureCurve:
    """The affine minorant ``q -> h(mu) + q int phi d mu`` of the pressure."""
    q = np.asarray(q_grid, dtype=float)
    vals = measure.entropy + q * measure.integral(potential)
    return PressureCurve(q, vals, vals.copy(), np.full_like(q, np.inf), (Method.VARIATIONAL.value,) * len(q), (None,) * len(q))
