"""Potentials, their Birkhoff sums, cylinder brackets and regularity classes.

Three kinds of potential are supported:

* :class:`LocallyConstant` -- a table indexed by words of a fixed depth on a
  symbolic system. Values may be ``+inf`` (singular potentials); ``-inf`` is
  rejected.
* :class:`Pointwise` -- a formula in ``x`` on a piecewise-conformal map.
* :class:`Geometric` -- ``log a(x)`` for a piecewise-conformal map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

from ._perron import log_spectral_radius
from .expressions import Formula
from .systems import GluedSystem, PiecewiseConformalMap, SymbolicSystem, as_symbolic


class RegularityTag(str, Enum):
    CONTINUOUS = "Continuous"
    CLASS_AF = "ClassAf"
    BOUNDED_MEASURABLE = "BoundedMeasurable"
    SINGULAR_ABOVE = "SingularAbove"


@dataclass(frozen=True)
class RegularityClass:
    """Which multifractal result governs a potential.

    ``h0`` is an upper bound for the capacity entropy of the closure of the
    discontinuity set; it only matters for ``BoundedMeasurable``.
    """

    tag: RegularityTag
    h0: float = 0.0
    note: str = ""


@dataclass(frozen=True)
class Discontinuities:
    """Declared structure of the discontinuity set of a potential.

    ``points`` are single points: floats for interval maps, or strings
    ``"prefix(period)"`` for eventually periodic sequences on a shift.
    ``words`` is a set of equal-length words; the closure of the discontinuity
    set is declared to lie in the subshift of sequences all of whose windows
    belong to ``words``.
    """

    points: tuple = ()
    words: tuple[tuple[int, ...], ...] = ()

    @property
    def empty(self) -> bool:
        return not self.points and not self.words


class Potential:
    discontinuities: Discontinuities

    def shifted(self, c: float) -> "Potential":
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LocallyConstant(Potential):
    """Potential depending on the first ``depth`` symbols; ``table`` has shape (m,)*depth.

    Entries for inadmissible words are ignored and may be ``nan``.
    """

    table: np.ndarray
    discontinuities: Discontinuities = field(default_factory=Discontinuities)
    label: str = ""

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim < 1:
            raise ValueError("table needs at least one axis")
        if len(set(t.shape)) != 1:
            raise ValueError("table must have shape (m, m, ..., m)")
        if np.isneginf(t).any():
            raise ValueError("-inf values are not supported; only +inf singularities are")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_vector(cls, values: Sequence[float], **kw) -> "LocallyConstant":
        return cls(np.asarray(values, dtype=float), **kw)

    @property
    def depth(self) -> int:
        return self.table.ndim

    @property
    def alphabet_size(self) -> int:
        return self.table.shape[0]

    @property
    def finite_values(self) -> np.ndarray:
        t = self.table
        return t[np.isfinite(t)]

    @property
    def bound(self) -> float:
        v = self.finite_values
        return float(np.abs(v).max()) if v.size else 0.0

    @property
    def has_infinite(self) -> bool:
        return bool(np.isposinf(self.table).any())

    def value(self, word: Sequence[int]) -> float:
        return float(self.table[tuple(word[: self.depth])])

    def check(self, system) -> list[str]:
        """Problems with this table on ``system`` (missing admissible words)."""
        sym = as_symbolic(system)
        if self.alphabet_size != sym.alphabet_size:
            return [f"table alphabet {self.alphabet_size} != system alphabet {sym.alphabet_size}"]
        words = _all_words(sym, self.depth)
        vals = self.table[tuple(words.T)]
        missing = words[np.isnan(vals)]
        return [f"no value for admissible word {tuple(int(s) for s in w)}" for w in missing[:5]]

    def shifted(self, c: float) -> "LocallyConstant":
        return LocallyConstant(self.table + c, self.discontinuities, self.label)

    def scaled(self, c: float) -> "LocallyConstant":
        return LocallyConstant(_scale_extended(self.table, c), self.discontinuities, self.label)

    def restrict(self, symbols: Sequence[int]) -> "LocallyConstant":
        idx = np.asarray(symbols)
        return LocallyConstant(self.table[np.ix_(*([idx] * self.depth))], label=self.label)


@dataclass(frozen=True, eq=False)
class Pointwise(Potential):
    """Potential given by a formula on the phase space of an interval map."""

    formula: Formula
    cmap: PiecewiseConformalMap
    discontinuities: Discontinuities = field(default_factory=Discontinuities)
    offset: float = 0.0
    label: str = ""

    def __call__(self, x):
        return self.formula(x) + self.offset

    def enclose(self, lo: float, hi: float, branch: int | None = None) -> tuple[float, float]:
        a, b = self.formula.enclose(lo, hi)
        return a + self.offset, b + self.offset

    def enclose_many(self, lo: np.ndarray, hi: np.ndarray, branch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.formula.enclose_many(lo, hi)
        return a + self.offset, b + self.offset

    @property
    def bound(self) -> float:
        encl = [self.enclose(b.left, b.right) for b in self.cmap.branches]
        return max(max(abs(a), abs(b)) for a, b in encl)

    def shifted(self, c: float) -> "Pointwise":
        return Pointwise(self.formula, self.cmap, self.discontinuities, self.offset + c, self.label)


@dataclass(frozen=True, eq=False)
class Geometric(Potential):
    """The geometric potential ``log a(x)`` of a conformal map."""

    cmap: PiecewiseConformalMap
    offset: float = 0.0
    discontinuities: Discontinuities = field(default_factory=Discontinuities)

    def __call__(self, x):
        return math.log(self.cmap.factor(x)) + self.offset

    def enclose(self, lo: float, hi: float, branch: int | None = None) -> tuple[float, float]:
        if branch is None:
            branch = self.cmap.branch_of(0.5 * (lo + hi))
        a, b = self.cmap.branches[branch].factor.enclose(lo, hi)
        return math.log(a) + self.offset, math.log(b) + self.offset

    def enclose_many(self, lo: np.ndarray, hi: np.ndarray, branch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a = np.empty_like(lo)
        b = np.empty_like(hi)
        for s in np.unique(branch):
            sel = branch == s
            a[sel], b[sel] = self.cmap.branches[s].factor.enclose_many(lo[sel], hi[sel])
        with np.errstate(divide="ignore"):
            return np.log(a) + self.offset, np.log(b) + self.offset

    @property
    def bound(self) -> float:
        return max(max(abs(math.log(a)), abs(math.log(b))) for a, b in self.cmap.factor_bounds) + abs(self.offset)

    def shifted(self, c: float) -> "Geometric":
        return Geometric(self.cmap, self.offset + c, self.discontinuities)

    def as_locally_constant(self) -> LocallyConstant:
        """Exact table of ``log a`` on branch cylinders; only for piecewise-linear maps."""
        if not self.cmap.is_linear:
            raise ValueError("log a is not constant on branches of a non-linear map")
        vals = [math.log(float(b.factor(b.left))) + self.offset for b in self.cmap.branches]
        return LocallyConstant.from_vector(vals, label="log a")


@dataclass(frozen=True, eq=False)
class Combination(Potential):
    """Finite linear combination ``sum_j c_j phi_j`` of potentials on one interval map."""

    terms: tuple[tuple[Potential, float], ...]
    discontinuities: Discontinuities = field(default_factory=Discontinuities)

    def __post_init__(self):
        maps = {id(p.cmap) for p, _ in self.terms if hasattr(p, "cmap")}
        if len(maps) != 1:
            raise ValueError("a combination needs its terms on exactly one interval map")

    @property
    def cmap(self) -> PiecewiseConformalMap:
        return next(p.cmap for p, _ in self.terms if hasattr(p, "cmap"))

    def __call__(self, x):
        return sum(c * p(x) for p, c in self.terms)

    def enclose(self, lo: float, hi: float, branch: int | None = None) -> tuple[float, float]:
        a = b = 0.0
        for p, c in self.terms:
            if isinstance(p, LocallyConstant):
                if p.depth != 1:
                    raise ValueError("only depth-1 tables can be combined with pointwise potentials")
                if branch is None:
                    branch = self.cmap.branch_of(0.5 * (lo + hi))
                u = v = float(p.table[branch])
            else:
                u, v = p.enclose(lo, hi, branch)
            a += min(c * u, c * v)
            b += max(c * u, c * v)
        return a, b

    def enclose_many(self, lo: np.ndarray, hi: np.ndarray, branch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a = np.zeros_like(lo)
        b = np.zeros_like(hi)
        for p, c in self.terms:
            if isinstance(p, LocallyConstant):
                if p.depth != 1:
                    raise ValueError("only depth-1 tables can be combined with pointwise potentials")
                u = v = p.table[branch]
            else:
                u, v = p.enclose_many(lo, hi, branch)
            a = a + np.minimum(c * u, c * v)
            b = b + np.maximum(c * u, c * v)
        return a, b

    def shifted(self, c: float) -> "Combination":
        return Combination(self.terms + ((Pointwise(Formula("1"), self.cmap), c),))


AnyPotential = Union[LocallyConstant, Pointwise, Geometric, Combination]


def _scale_extended(values: np.ndarray, c: float) -> np.ndarray:
    """``c * values`` with ``0 * inf = 0``; a positive multiple of ``+inf`` stays ``+inf``."""
    v = np.asarray(values, dtype=float)
    with np.errstate(invalid="ignore"):
        out = c * v
    if c == 0:
        out = np.where(np.isinf(v), 0.0, out)
    return out


def _all_words(system, k: int) -> np.ndarray:
    sym = as_symbolic(system)
    if isinstance(sym, GluedSystem):
        sym = sym.as_symbolic()
    return sym.words(k)


def exact_table(potential: AnyPotential) -> LocallyConstant | None:
    """Locally constant form of ``potential`` when one exists without approximation."""
    if isinstance(potential, LocallyConstant):
        return potential
    if isinstance(potential, Geometric) and potential.cmap.is_linear:
        return potential.as_locally_constant()
    return None


# Birkhoff sums ---------------------------------------------------------------


def birkhoff_sum(potential: AnyPotential, x, n: int) -> float:
    """``S_n phi(x) = sum_{k<n} phi(sigma^k x)`` with ``+inf`` absorbing.

    ``x`` is a word (sequence of symbols) for locally constant potentials and
    a point of [0, 1] for pointwise and geometric ones.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if isinstance(potential, LocallyConstant):
        k = potential.depth
        w = list(x)
        if len(w) < n + k - 1:
            raise ValueError(f"word of length {len(w)} too short for n={n} at depth {k}")
        return float(sum(potential.table[tuple(w[j : j + k])] for j in range(n)))
    cmap = potential.cmap
    total = 0.0
    pt = float(x)
    for _ in range(n):
        total += float(potential(pt))
        pt = cmap(pt)
    return total


def _tail_bounds(potential: LocallyConstant, system) -> tuple[np.ndarray, np.ndarray]:
    """Min and max of the last ``depth - 1`` window terms over admissible continuations.

    Indexed by the base-m code of the final ``depth - 1`` symbols of a word.
    """
    k = potential.depth
    m = potential.alphabet_size
    size = m ** (k - 1)
    lo = np.full(size, np.nan)
    hi = np.full(size, np.nan)
    words = _all_words(system, 2 * (k - 1))
    tail = np.zeros(words.shape[0])
    for i in range(k - 1):
        tail = tail + potential.table[tuple(words[:, i + j] for j in range(k))]
    codes = _codes(words[:, : k - 1], m)
    for c in np.unique(codes):
        sel = tail[codes == c]
        lo[c], hi[c] = sel.min(), sel.max()
    return lo, hi


def _codes(words: np.ndarray, m: int) -> np.ndarray:
    code = np.zeros(words.shape[0], dtype=np.int64)
    for j in range(words.shape[1]):
        code = code * m + words[:, j]
    return code


class BracketEngine:
    """Vectorised brackets ``lo <= S_n phi <= hi`` over n-cylinders of one system.

    Built once per (potential, system) pair; ``__call__`` accepts a (count, n)
    block of admissible words.
    """

    def __init__(self, potential: AnyPotential, system):
        self.potential = potential
        self.system = system
        self.table = exact_table(potential)
        if self.table is not None and self.table.depth > 1:
            self.tail = _tail_bounds(self.table, system)
        else:
            self.tail = None

    def __call__(self, words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        words = np.asarray(words)
        count, n = words.shape
        tab = self.table
        if tab is None:
            return self._pointwise(words)
        k = tab.depth
        if n < k:
            raise ValueError(f"cylinder length {n} is shorter than the potential depth {k}")
        t = tab.table
        exact = np.zeros(count)
        for j in range(n - k + 1):
            exact = exact + t[tuple(words[:, j + i] for i in range(k))]
        if k == 1:
            return exact, exact.copy()
        codes = _codes(words[:, n - k + 1 :], tab.alphabet_size)
        return exact + self.tail[0][codes], exact + self.tail[1][codes]

    def _pointwise(self, words):
        pot = self.potential
        words = np.asarray(words, dtype=np.int64)
        u, v = pot.cmap.suffix_intervals(words)
        a, b = pot.enclose_many(u.ravel(), v.ravel(), words.ravel())
        return a.reshape(words.shape).sum(axis=1), b.reshape(words.shape).sum(axis=1)


def avg_bracket_on_cylinder(potential: AnyPotential, word: Sequence[int], system=None) -> tuple[float, float]:
    """Bounds ``[lo, hi]`` of ``(1/n) S_n phi`` over the cylinder of ``word`` (n = len(word)).

    For a depth-k table the first ``n - k + 1`` terms are exact and the rest
    are bounded by the extremes over admissible continuations. ``system``
    defaults to the full shift on the table's alphabet, or to the map of a
    pointwise potential.
    """
    if system is None:
        if isinstance(potential, LocallyConstant):
            system = SymbolicSystem.full(potential.alphabet_size)
        else:
            system = potential.cmap
    n = len(word)
    lo, hi = BracketEngine(potential, system)(np.asarray([list(word)]))
    return float(lo[0]) / n, float(hi[0]) / n


# Regularity --------------------------------------------------------------------


def _parse_sequence_point(spec: str) -> tuple[list[int], list[int]]:
    s = spec.replace(" ", "")
    if "(" not in s or not s.endswith(")"):
        raise ValueError(f"shift point {spec!r} must look like 'prefix(period)'")
    pre, per = s[:-1].split("(")
    sym = lambda t: [int(c) for c in t.split(",")] if "," in t else [int(c) for c in t]
    prefix = sym(pre) if pre else []
    period = sym(per)
    if not period:
        raise ValueError(f"shift point {spec!r} has an empty period")
    return prefix, period


def _sequence_is_periodic(prefix: list[int], period: list[int]) -> bool:
    p = len(period)
    x = prefix + period * (len(prefix) // p + 2)
    return all(x[i] == x[i + p] for i in range(len(prefix)))


def _map_point_is_periodic(cmap: PiecewiseConformalMap, x: float, max_period: int = 64) -> bool:
    y = x
    for _ in range(max_period):
        try:
            y = cmap(y)
        except ValueError:
            return False
        if abs(y - x) < 1e-12:
            return True
    return False


def _word_subshift_entropy(words: Sequence[Sequence[int]], system) -> float:
    """Entropy of the subshift whose allowed windows are ``words`` (and admissible)."""
    ws = [tuple(int(s) for s in w) for w in words]
    L = len(ws[0])
    if any(len(w) != L for w in ws):
        raise ValueError("declared discontinuity words must share one length")
    sym = as_symbolic(system)
    if isinstance(sym, GluedSystem):
        sym = sym.as_symbolic()
    ws = [w for w in ws if sym.admissible(w)]
    if not ws:
        return -math.inf
    if L == 1:
        idx = sorted({w[0] for w in ws})
        a = np.asarray(sym.transition, dtype=float)[np.ix_(idx, idx)]
    else:
        states = sorted({w[:-1] for w in ws} | {w[1:] for w in ws})
        index = {s: i for i, s in enumerate(states)}
        a = np.zeros((len(states), len(states)))
        for w in ws:
            a[index[w[:-1]], index[w[1:]]] = 1.0
    with np.errstate(divide="ignore"):
        return float(log_spectral_radius(np.log(a)))


def classify(potential: AnyPotential, system=None) -> RegularityClass:
    """Regularity class of ``potential`` from its values and declared discontinuities.

    Membership in the class of bounded potentials whose discontinuity closure
    is null for every invariant measure is not decidable in general; this is
    a conservative syntactic test.
    """
    if isinstance(potential, LocallyConstant):
        if potential.has_infinite:
            return RegularityClass(RegularityTag.SINGULAR_ABOVE, note="table contains +inf")
    elif isinstance(potential, Pointwise):
        lo = min(potential.enclose(b.left, b.right)[0] for b in potential.cmap.branches)
        hi = max(potential.enclose(b.left, b.right)[1] for b in potential.cmap.branches)
        if lo == -math.inf:
            raise ValueError("potentials unbounded below are not supported")
        if hi == math.inf:
            return RegularityClass(RegularityTag.SINGULAR_ABOVE, note="formula unbounded above")
    disc = potential.discontinuities
    if disc.empty:
        return RegularityClass(RegularityTag.CONTINUOUS)
    periodic = []
    for pt in disc.points:
        if isinstance(pt, str):
            prefix, period = _parse_sequence_point(pt)
            if _sequence_is_periodic(prefix, period):
                periodic.append(pt)
        else:
            cmap = getattr(potential, "cmap", None)
            if cmap is None:
                raise ValueError("numeric discontinuity points need an interval map")
            if _map_point_is_periodic(cmap, float(pt)):
                periodic.append(pt)
    h0 = 0.0
    nonempty_cover = False
    if disc.words:
        sysm = system if system is not None else getattr(potential, "cmap", None)
        if sysm is None:
            sysm = SymbolicSystem.full(potential.alphabet_size)
        h = _word_subshift_entropy(disc.words, sysm)
        if h > -math.inf:
            nonempty_cover = True
            h0 = max(h0, max(h, 0.0))
    if not periodic and not nonempty_cover:
        return RegularityClass(RegularityTag.CLASS_AF, 0.0, "finite aperiodic discontinuity set")
    reasons = []
    if periodic:
        reasons.append(f"periodic discontinuity points {periodic}")
    if nonempty_cover:
        reasons.append(f"declared cover carries invariant measures (entropy {h0:.6g})")
    return RegularityClass(RegularityTag.BOUNDED_MEASURABLE, h0, "; ".join(reasons))


def center(potential: AnyPotential, pressure_value: float) -> AnyPotential:
    """The centred potential ``phi - P``; ``+inf`` entries are unchanged."""
    if not math.isfinite(pressure_value):
        raise ValueError("pressure value must be finite")
    return potential.shifted(-pressure_value)
