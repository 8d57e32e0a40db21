"""Symbolic systems, piecewise-conformal Markov interval maps and glued unions.

Everything here is one-sided: a subshift of finite type is given by a 0/1
transition matrix and points are infinite forward itineraries. Interval maps
enter the rest of the toolkit through their branch coding, which is again a
subshift of finite type when the map is Markov.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from ._perron import is_nontrivial, log_spectral_radius, strong_components
from .expressions import Formula

#: above this many words ``word_count`` leaves int64 arithmetic
_INT64_SAFE = 2**62


class BudgetExceeded(RuntimeError):
    """Raised when a cylinder enumeration would exceed the allowed budget."""


@dataclass(frozen=True, eq=False)
class SymbolicSystem:
    """One-sided subshift of finite type on the alphabet ``0 .. m-1``."""

    transition: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.array(self.transition, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError("transition must be a non-empty square matrix")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("transition entries must be 0 or 1")
        a = a.astype(np.int8)
        a.setflags(write=False)
        object.__setattr__(self, "transition", a)

    @classmethod
    def full(cls, m: int, label: str | None = None) -> "SymbolicSystem":
        return cls(np.ones((m, m), dtype=np.int8), label or f"full-{m}")

    @classmethod
    def golden_mean(cls) -> "SymbolicSystem":
        return cls(np.array([[1, 1], [1, 0]]), "golden-mean")

    @property
    def alphabet_size(self) -> int:
        return self.transition.shape[0]

    @property
    def parts(self) -> tuple["SymbolicSystem", ...]:
        return (self,)

    @cached_property
    def components(self) -> list[np.ndarray]:
        """Strongly connected components that carry at least one cycle."""
        sup = self.transition.astype(bool)
        return [c for c in strong_components(sup) if is_nontrivial(sup, c)]

    @cached_property
    def irreducible(self) -> bool:
        comps = self.components
        return len(comps) == 1 and len(comps[0]) == self.alphabet_size

    @cached_property
    def successors(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(row) for row in self.transition)

    def admissible(self, word: Sequence[int]) -> bool:
        w = list(word)
        if any(s < 0 or s >= self.alphabet_size for s in w):
            return False
        return all(self.transition[a, b] for a, b in zip(w, w[1:]))

    def words(self, k: int) -> np.ndarray:
        """All admissible words of length ``k`` as a (count, k) array, lexicographic."""
        return np.concatenate(list(word_blocks(self, k)), axis=0) if k > 0 else np.zeros((1, 0), np.int64)

    def restrict(self, symbols: Sequence[int], label: str = "") -> "SymbolicSystem":
        idx = np.asarray(symbols)
        return SymbolicSystem(self.transition[np.ix_(idx, idx)], label or f"{self.label}|{list(idx)}")

    def __repr__(self) -> str:
        return f"SymbolicSystem(m={self.alphabet_size}, label={self.label!r})"


@dataclass(frozen=True, eq=False)
class GluedSystem:
    """Disjoint union of systems; part ``i`` uses symbols ``offsets[i] ..``."""

    parts: tuple[SymbolicSystem, ...]
    label: str = "glued"

    def __post_init__(self):
        parts = tuple(p.symbolic() if isinstance(p, PiecewiseConformalMap) else p for p in self.parts)
        if not parts:
            raise ValueError("a glued system needs at least one part")
        object.__setattr__(self, "parts", parts)

    @property
    def offsets(self) -> list[int]:
        return list(itertools.accumulate([0] + [p.alphabet_size for p in self.parts[:-1]]))

    @property
    def alphabet_size(self) -> int:
        return sum(p.alphabet_size for p in self.parts)

    @cached_property
    def transition(self) -> np.ndarray:
        a = np.zeros((self.alphabet_size,) * 2, dtype=np.int8)
        for off, p in zip(self.offsets, self.parts):
            m = p.alphabet_size
            a[off : off + m, off : off + m] = p.transition
        a.setflags(write=False)
        return a

    def as_symbolic(self) -> SymbolicSystem:
        return SymbolicSystem(self.transition, self.label)

    def part_symbols(self, i: int) -> np.ndarray:
        return np.arange(self.offsets[i], self.offsets[i] + self.parts[i].alphabet_size)

    @property
    def irreducible(self) -> bool:
        return len(self.parts) == 1 and self.parts[0].irreducible

    @property
    def successors(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(row) for row in self.transition)

    def __repr__(self) -> str:
        return f"GluedSystem({', '.join(repr(p) for p in self.parts)})"


@dataclass(frozen=True)
class Branch:
    """One monotone branch of an interval map, defined on ``[left, right)``."""

    left: float
    right: float
    map: Formula
    factor: Formula

    @classmethod
    def linear(cls, left: float, right: float, image_left: float, image_right: float) -> "Branch":
        slope = (image_right - image_left) / (right - left)
        f = Formula(f"{image_left!r} + ({slope!r}) * (x - {left!r})")
        return cls(left, right, f, Formula(repr(abs(slope))))

    @classmethod
    def from_strings(cls, left, right, map: str, factor: str) -> "Branch":
        return cls(float(left), float(right), Formula(map), Formula(factor))

    @property
    def image(self) -> tuple[float, float]:
        a, b = float(self.map(self.left)), float(self.map(self.right))
        return (a, b) if a <= b else (b, a)

    @property
    def increasing(self) -> bool:
        return float(self.map(self.right)) >= float(self.map(self.left))

    @property
    def is_linear(self) -> bool:
        return self.factor.is_constant()

    def inverse(self, y: float) -> float:
        lo, hi = self.image
        y = min(max(y, lo), hi)
        if self.is_linear:
            s = (float(self.map(self.right)) - float(self.map(self.left))) / (self.right - self.left)
            return self.left + (y - float(self.map(self.left))) / s
        g = lambda x: float(self.map(x)) - y
        ga, gb = g(self.left), g(self.right)
        if ga == 0:
            return self.left
        if gb == 0:
            return self.right
        return brentq(g, self.left, self.right, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _inverse_many(branch: "Branch", y: np.ndarray) -> np.ndarray:
    if branch.is_linear:
        lo, hi = branch.image
        y = np.clip(y, lo, hi)
        f_left = float(branch.map(branch.left))
        s = (float(branch.map(branch.right)) - f_left) / (branch.right - branch.left)
        return branch.left + (y - f_left) / s
    return np.asarray([branch.inverse(float(v)) for v in y])


@dataclass(frozen=True, eq=False)
class PiecewiseConformalMap:
    """Piecewise monotone map of [0, 1] with conformal factor ``a(x)`` per branch."""

    branches: tuple[Branch, ...]
    label: str = "map"
    markov_tol: float = 1e-9
    #: allow gaps between branch domains (a Cantor repeller instead of a tiling)
    repeller: bool = False

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(sorted(self.branches, key=lambda b: b.left)))

    @classmethod
    def linear(cls, breakpoints: Sequence[float], images: Sequence[tuple[float, float]], label="linear-map"):
        """Piecewise-linear map; branch ``i`` sends [b_i, b_{i+1}) onto ``images[i]``."""
        br = [Branch.linear(breakpoints[i], breakpoints[i + 1], *images[i]) for i in range(len(images))]
        return cls(tuple(br), label)

    @classmethod
    def full_branched(cls, slopes: Sequence[float], label: str | None = None):
        """Increasing linear map whose branches all cover [0, 1].

        When the inverse slopes sum to less than one the branches are spread
        out with equal gaps and the result is a Cantor repeller.
        """
        widths = [1.0 / s for s in slopes]
        total = sum(widths)
        if total > 1 + 1e-12:
            raise ValueError("inverse slopes sum to more than 1; branches would overlap")
        gap = (1.0 - total) / (len(slopes) - 1) if len(slopes) > 1 else 0.0
        branches, x = [], 0.0
        for i, w in enumerate(widths):
            right = 1.0 if i == len(widths) - 1 else x + w
            branches.append(Branch.linear(right - w if i == len(widths) - 1 else x, right, 0.0, 1.0))
            x = right + gap
        repeller = gap > 1e-12
        return cls(tuple(branches), label or f"full-branched{tuple(slopes)}", repeller=repeller)

    @property
    def breakpoints(self) -> list[float]:
        pts = []
        for b in self.branches:
            pts += [b.left, b.right]
        return sorted(set(pts))

    @property
    def alphabet_size(self) -> int:
        return len(self.branches)

    def branch_of(self, x: float) -> int:
        for i, b in enumerate(self.branches):
            if b.left <= x < b.right:
                return i
        if x == self.branches[-1].right:
            return len(self.branches) - 1
        raise ValueError(f"{x} is not in any branch domain")

    def __call__(self, x: float) -> float:
        return float(self.branches[self.branch_of(x)].map(x))

    def factor(self, x: float) -> float:
        return float(self.branches[self.branch_of(x)].factor(x))

    @cached_property
    def markov_matrix(self) -> np.ndarray | None:
        """Branch transition matrix, or ``None`` when the map is not Markov.

        Markov means every branch domain either lies inside a branch image or
        meets it in at most an endpoint.
        """
        m = self.alphabet_size
        tol = self.markov_tol
        a = np.zeros((m, m), dtype=np.int8)
        for i, b in enumerate(self.branches):
            lo, hi = b.image
            for j, d in enumerate(self.branches):
                if d.left >= lo - tol and d.right <= hi + tol:
                    a[i, j] = 1
                elif d.right > lo + tol and d.left < hi - tol:
                    return None
        return a

    @property
    def is_markov(self) -> bool:
        return self.markov_matrix is not None

    def symbolic(self) -> SymbolicSystem:
        a = self.markov_matrix
        if a is None:
            raise ValueError(f"{self.label}: map is not Markov; branch images must be unions of branches")
        return SymbolicSystem(a, self.label)

    @cached_property
    def factor_bounds(self) -> list[tuple[float, float]]:
        return [b.factor.enclose(b.left, b.right) for b in self.branches]

    @property
    def min_factor(self) -> float:
        return min(lo for lo, _ in self.factor_bounds)

    @property
    def bounded_contraction(self) -> bool:
        """True when a(x) >= 1 everywhere, so every point has bounded contraction."""
        return self.min_factor >= 1.0 - 1e-12

    @property
    def is_linear(self) -> bool:
        return all(b.is_linear for b in self.branches)

    def cylinder_intervals(self, word: Sequence[int]) -> list[tuple[float, float]]:
        """Intervals of the cylinders of every suffix of ``word``.

        Entry ``j`` is the set of points whose itinerary starts with
        ``word[j:]``; entry 0 is the cylinder of the whole word.
        """
        out = []
        b = self.branches[word[-1]]
        lo, hi = b.left, b.right
        out.append((lo, hi))
        for s in reversed(word[:-1]):
            br = self.branches[s]
            u, v = br.inverse(lo), br.inverse(hi)
            lo, hi = (u, v) if u <= v else (v, u)
            out.append((lo, hi))
        return out[::-1]

    def suffix_intervals(self, words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised :meth:`cylinder_intervals` for a (count, n) word array.

        Returns ``(lo, hi)`` of shape (count, n); column ``j`` bounds the
        cylinder of ``word[j:]``.
        """
        words = np.asarray(words, dtype=np.int64)
        count, n = words.shape
        lo = np.empty((count, n))
        hi = np.empty((count, n))
        lefts = np.array([b.left for b in self.branches])
        rights = np.array([b.right for b in self.branches])
        lo[:, -1] = lefts[words[:, -1]]
        hi[:, -1] = rights[words[:, -1]]
        for j in range(n - 2, -1, -1):
            sym = words[:, j]
            for s in np.unique(sym):
                sel = sym == s
                u = _inverse_many(self.branches[s], lo[sel, j + 1])
                v = _inverse_many(self.branches[s], hi[sel, j + 1])
                lo[sel, j] = np.minimum(u, v)
                hi[sel, j] = np.maximum(u, v)
        return lo, hi

    def __repr__(self) -> str:
        return f"PiecewiseConformalMap({self.label!r}, branches={self.alphabet_size})"


System = Union[SymbolicSystem, GluedSystem, PiecewiseConformalMap]


def as_symbolic(system: System) -> SymbolicSystem | GluedSystem:
    if isinstance(system, PiecewiseConformalMap):
        return system.symbolic()
    return system


def _matrix(system: System) -> np.ndarray:
    return np.asarray(as_symbolic(system).transition)


def validate(system: System) -> list[str]:
    """List the violated invariants of ``system``; an empty list means valid."""
    problems: list[str] = []
    if isinstance(system, GluedSystem):
        for i, p in enumerate(system.parts):
            problems += [f"part {i}: {msg}" for msg in validate(p)]
        return problems
    if isinstance(system, PiecewiseConformalMap):
        tol = system.markov_tol
        br = system.branches
        if not system.repeller and (abs(br[0].left) > tol or abs(br[-1].right - 1.0) > tol):
            problems.append("branch domains do not cover [0, 1]")
        for i, (b, nxt) in enumerate(zip(br, br[1:])):
            if b.right > nxt.left + tol:
                problems.append(f"branches {i} and {i + 1} overlap")
            elif not system.repeller and nxt.left - b.right > tol:
                problems.append(f"branches {i} and {i + 1} leave a gap")
        if br[0].left < -tol or br[-1].right > 1 + tol:
            problems.append("branch domains leave [0, 1]")
        for i, (lo, _) in enumerate(system.factor_bounds):
            if not lo > 0:
                problems.append(f"branch {i}: conformal factor is not bounded away from 0 (critical point)")
        if system.markov_matrix is None:
            problems.append("map is not Markov: some branch image is not a union of branch domains")
            return problems
    a = _matrix(system)
    for i in range(a.shape[0]):
        if not a[i].any():
            problems.append(f"row {i} has no successor")
        if not a[:, i].any():
            problems.append(f"column {i} has no predecessor")
    return problems


def word_blocks(system: System, n: int, max_block: int = 1 << 18) -> Iterator[np.ndarray]:
    """Admissible ``n``-words in lexicographic order, yielded as (count, n) arrays.

    Words are grouped by prefix so each block holds at most about
    ``max_block`` words; the blocking depends only on ``system`` and ``n``.
    """
    if n < 1:
        raise ValueError("word length must be at least 1")
    a = _matrix(system)
    m = a.shape[0]
    ptr = np.concatenate([[0], np.cumsum(a.sum(axis=1))])
    idx = np.concatenate([np.flatnonzero(row) for row in a]) if a.any() else np.zeros(0, np.int64)
    deg = np.diff(ptr)
    # completions[r][s] = number of admissible words of length r+1 starting at s
    comp = [np.ones(m, dtype=np.float64)]
    for _ in range(n - 1):
        comp.append(a.astype(np.float64) @ comp[-1])

    def extend(words: np.ndarray, levels: int) -> np.ndarray:
        for _ in range(levels):
            last = words[:, -1]
            counts = deg[last]
            total = int(counts.sum())
            rep = np.repeat(np.arange(words.shape[0]), counts)
            offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            col = idx[ptr[last][rep] + offs]
            words = np.concatenate([words[rep], col[:, None]], axis=1)
        return words

    def rec(prefix: np.ndarray):
        remaining = n - prefix.shape[1]
        if remaining == 0:
            yield prefix
            return
        if comp[remaining][prefix[0, -1]] <= max_block:
            yield extend(prefix, remaining)
            return
        for s in idx[ptr[prefix[0, -1]] : ptr[prefix[0, -1] + 1]]:
            yield from rec(np.concatenate([prefix, [[s]]], axis=1))

    dtype = np.int64
    for s in range(m):
        start = np.array([[s]], dtype=dtype)
        if comp[n - 1][s] == 0:
            continue
        yield from rec(start)


def cylinders(system: System, n: int) -> Iterator[tuple[int, ...]]:
    """Every admissible word of length ``n``, each exactly once."""
    for block in word_blocks(system, n):
        for row in block:
            yield tuple(int(s) for s in row)


def word_count(system: System, n: int) -> int:
    """Number of admissible words of length ``n`` (sum of entries of A^(n-1)).

    Uses int64 while that is safe and switches to exact Python integers once
    counts approach the int64 range.
    """
    if n < 1:
        raise ValueError("word length must be at least 1")
    a = _matrix(system).astype(np.int64)
    v = np.ones(a.shape[0], dtype=np.int64)
    big = False
    for _ in range(n - 1):
        if not big and int(v.max()) * a.shape[0] >= _INT64_SAFE:
            big = True
            a = a.astype(object)
            v = v.astype(object)
        v = a @ v
    return int(sum(int(x) for x in v))


def log_word_count(system: System, n: int) -> float:
    """``log word_count(n)`` computed with renormalised floats for large ``n``."""
    if n < 1:
        raise ValueError("word length must be at least 1")
    a = _matrix(system).astype(float)
    v = np.ones(a.shape[0])
    acc = 0.0
    for _ in range(n - 1):
        v = a @ v
        s = v.max()
        if s == 0:
            return -math.inf
        acc += math.log(s)
        v /= s
    total = v.sum()
    return acc + math.log(total) if total > 0 else -math.inf


def topological_entropy_exact(system: System) -> float:
    """Topological entropy in nats: log of the spectral radius of the transition matrix.

    For a glued system this is the maximum over its parts.
    """
    sym = as_symbolic(system)
    if isinstance(sym, GluedSystem):
        return max(topological_entropy_exact(p) for p in sym.parts)
    a = np.asarray(sym.transition, dtype=float)
    with np.errstate(divide="ignore"):
        return float(log_spectral_radius(np.log(a)))


def block_presentation(system: SymbolicSystem, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """States and edges of the block graph used for depth-``k`` potentials.

    States are admissible words of length ``s = max(k - 1, 1)``. There is an
    edge ``u -> v`` whenever ``u + v[-1]`` is admissible; the edge carries that
    ``(s + 1)``-word. Returns (states, edges as (src, dst) index arrays, edge
    words).
    """
    s = max(k - 1, 1)
    states = system.words(s)
    words = system.words(s + 1)
    index = {tuple(w): i for i, w in enumerate(states)}
    src = np.array([index[tuple(w[:s])] for w in words], dtype=np.int64)
    dst = np.array([index[tuple(w[1:])] for w in words], dtype=np.int64)
    return states, np.stack([src, dst]), words
