"""One-dimensional convex analysis on sampled functions.

Conventions for a convex ``T`` and a concave ``S``::

    L1: T -> inf_q (T(q) - q a)        L2: S -> sup_a (S(a) + q a)
    L3: T -> inf_q (T(q) + q a)        L4: S -> sup_a (S(a) - q a)

A :class:`SampledConvexFunction` may carry the exact function it samples
(``func``, vectorised over numpy arrays). When present it is used for
sub-grid refinement: golden-section minimisation in the transforms,
Richardson-extrapolated one-sided derivatives and kink localisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
FLAT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SampledConvexFunction:
    """Convex function sampled on a strictly increasing grid.

    ``+inf`` values may only occupy an initial or a final run of the grid.
    ``hard_ends`` marks grid ends that bound the domain of interest, so
    nothing is extrapolated past them.
    """

    grid: np.ndarray
    values: np.ndarray
    func: Callable[[np.ndarray], np.ndarray] | None = None
    tol: float = 1e-8
    label: str = ""
    hard_ends: tuple[bool, bool] = (False, False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 3:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 3")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.isnan(v).any() or np.isneginf(v).any():
            raise ValueError("values must be finite or +inf")
        fin = np.isfinite(v)
        idx = np.flatnonzero(fin)
        if idx.size < 3:
            raise ValueError("need at least three finite samples")
        if not fin[idx[0] : idx[-1] + 1].all():
            raise ValueError("+inf values must form an initial or final run of the grid")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        slopes = np.diff(v[fin]) / np.diff(g[fin])
        worst = float(np.min(np.diff(slopes))) if slopes.size > 1 else 0.0
        if worst < -self.tol * (1.0 + float(np.max(np.abs(slopes)))):
            raise ValueError(f"samples are not convex (secant slopes drop by {-worst:.3g})")

    @classmethod
    def from_curve(cls, curve, func=None, **kw) -> "SampledConvexFunction":
        return cls(np.asarray(curve.q_grid), np.asarray(curve.values), func, **kw)

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def finite_grid(self) -> np.ndarray:
        return self.grid[self.finite]

    @property
    def finite_values(self) -> np.ndarray:
        return self.values[self.finite]

    @property
    def open_left(self) -> bool:
        """Whether the finite region extends to the left end of the grid."""
        return bool(self.finite[0]) and not self.hard_ends[0]

    @property
    def open_right(self) -> bool:
        return bool(self.finite[-1]) and not self.hard_ends[1]

    def __call__(self, q) -> np.ndarray:
        """Exact values when ``func`` is known, else the convex piecewise-linear interpolant."""
        q = np.asarray(q, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(q), dtype=float)
        g, v = self.finite_grid, self.finite_values
        out = np.interp(q, g, v)
        return np.where((q < g[0]) | (q > g[-1]), np.inf, out)


# Derivatives ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SubdifferentialMap:
    """Intervals ``[D-T(q), D+T(q)]`` at each finite grid point.

    ``lower[0]`` and ``upper[-1]`` at an open end of the grid are
    estimates of the asymptotic slopes; ``boundary`` marks them.
    """

    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    boundary: np.ndarray

    def interval(self, i: int) -> tuple[float, float]:
        return float(self.lower[i]), float(self.upper[i])


def _richardson(quotients: np.ndarray) -> np.ndarray:
    """Extrapolate one-sided difference quotients at h, h/2, h/4, ... to h -> 0.

    ``quotients`` has shape (levels, n); the error is a power series in h.
    """
    table = [quotients[j] for j in range(quotients.shape[0])]
    factor = 2.0
    while len(table) > 1:
        table = [(factor * table[j + 1] - table[j]) / (factor - 1.0) for j in range(len(table) - 1)]
        factor *= 2.0
    return table[0]


def _grid_quotients(g: np.ndarray, v: np.ndarray, side: int, levels: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """One-sided quotients at strides 1, 2, 4, ... using grid neighbours.

    Returns (quotients, valid) of shape (levels, n); strides that leave the
    grid are invalid.
    """
    n = g.size
    qs = np.full((levels, n), np.nan)
    for j in range(levels):
        k = 1 << j
        idx = np.arange(n)
        other = idx + side * k
        ok = (other >= 0) & (other < n)
        i, o = idx[ok], other[ok]
        qs[j, ok] = (v[o] - v[i]) / (g[o] - g[i])
    return qs, ~np.isnan(qs).any(axis=0)


def _uniform_neighbourhood(g: np.ndarray, side: int, levels: int) -> np.ndarray:
    """Points whose stride-2^j neighbours on ``side`` are equally spaced (Richardson needs it)."""
    n = g.size
    ok = np.zeros(n, dtype=bool)
    span = 1 << (levels - 1)
    for i in range(n):
        o = i + side * span
        if 0 <= o < n:
            seg = np.diff(g[min(i, o) : max(i, o) + 1])
            ok[i] = np.ptp(seg) <= 1e-9 * seg.mean()
    return ok


def subdifferential(F: SampledConvexFunction, levels: int = 4) -> SubdifferentialMap:
    """One-sided derivatives at every finite grid point.

    With ``F.func`` the quotients use steps ``h, h/2, h/4, h/8`` below the
    local grid spacing; otherwise grid strides 1, 2, 4, 8 on uniform stretches.
    Both are Richardson-extrapolated, then clamped to the secant bounds
    ``left secant <= D- <= D+ <= right secant`` that convexity guarantees, and
    finally made monotone.
    """
    if levels in F._cache:
        return F._cache[levels]
    sd = _subdifferential(F, levels)
    F._cache[levels] = sd
    return sd


def _subdifferential(F: SampledConvexFunction, levels: int) -> SubdifferentialMap:
    g, v = F.finite_grid, F.finite_values
    n = g.size
    left_sec = np.full(n, -np.inf)
    right_sec = np.full(n, np.inf)
    sec = np.diff(v) / np.diff(g)
    left_sec[1:] = sec
    right_sec[:-1] = sec
    est = {}
    for side in (-1, 1):
        if F.func is not None:
            h = np.empty(n)
            h[1:-1] = np.minimum(np.diff(g)[:-1], np.diff(g)[1:])
            h[0] = g[1] - g[0]
            h[-1] = g[-1] - g[-2]
            inside_lo = -np.inf if F.open_left else g[0]
            inside_hi = np.inf if F.open_right else g[-1]
            quot = np.full((levels, n), np.nan)
            for j in range(levels):
                step = h / (1 << j)
                pts = g + side * step
                ok = (pts >= inside_lo) & (pts <= inside_hi)
                if ok.any():
                    fv = np.asarray(F.func(pts[ok]), dtype=float)
                    with np.errstate(invalid="ignore"):
                        quot[j, ok] = (fv - v[ok]) / (side * step[ok])
            quot[~np.isfinite(quot)] = np.nan
            d = _richardson(quot)
            raw = right_sec if side == 1 else left_sec
            d = np.where(np.isnan(d) & np.isfinite(raw), raw, d)
        else:
            quot, valid = _grid_quotients(g, v, side, levels)
            valid &= _uniform_neighbourhood(g, side, levels)
            # strides grow with j, so reverse to get steps h, h/2, h/4, ...
            d = np.where(valid, _richardson(np.nan_to_num(quot[::-1])), np.nan)
            raw = quot[0]
            d = np.where(np.isnan(d), raw, d)
        est[side] = d
    lower, upper = est[-1], est[1]
    boundary = np.zeros(n, dtype=bool)
    # an endpoint without a neighbour on one side borrows the other side
    if np.isnan(lower[0]):
        lower[0] = upper[0] if F.open_left else -np.inf
        boundary[0] = F.open_left
    if np.isnan(upper[-1]):
        upper[-1] = lower[-1] if F.open_right else np.inf
        boundary[-1] = F.open_right
    lower = np.clip(lower, left_sec, right_sec)
    upper = np.clip(upper, left_sec, right_sec)
    swap = lower > upper
    mid = 0.5 * (lower + upper)
    lower = np.where(swap, mid, lower)
    upper = np.where(swap, mid, upper)
    # monotone subdifferential: D+(q_i) <= D-(q_{i+1}) <= D+(q_{i+1})
    flat = np.empty(2 * n)
    flat[0::2] = lower
    flat[1::2] = upper
    with np.errstate(invalid="ignore"):
        flat = np.fmax.accumulate(flat)
    lower, upper = flat[0::2], flat[1::2]
    if not F.open_left:
        lower[0] = -np.inf
    if not F.open_right:
        upper[-1] = np.inf
    return SubdifferentialMap(g, lower, upper, boundary)


def one_sided_derivatives(F: SampledConvexFunction, q: float) -> tuple[float, float]:
    """``(D-T(q), D+T(q))`` at a grid point ``q`` of the finite region."""
    g = F.finite_grid
    i = int(np.searchsorted(g, q))
    if i >= g.size or abs(g[i] - q) > 1e-12 * (1 + abs(q)):
        if F.func is None:
            raise ValueError(f"q = {q} is not a grid point")
        return _func_derivatives(F.func, q, _local_step(g, q))
    sd = subdifferential(F)
    return sd.interval(i)


def _local_step(g: np.ndarray, q: float) -> float:
    i = int(np.clip(np.searchsorted(g, q), 1, g.size - 1))
    return float(g[i] - g[i - 1])


def _func_derivatives(func, q: float, h: float, levels: int = 4) -> tuple[float, float]:
    steps = h / (1 << np.arange(levels))
    f0 = float(func(np.asarray([q]))[0])
    out = []
    for side in (-1, 1):
        fv = np.asarray(func(q + side * steps), dtype=float)
        quot = ((fv - f0) / (side * steps))[:, None]
        out.append(float(_richardson(quot)[0]))
    lo, hi = out
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


# Transforms -----------------------------------------------------------------------


@dataclass(frozen=True)
class TransformValue:
    """Value of a Legendre transform with its minimiser set.

    ``argmin`` is the bracketing interval of minimisers (a degenerate
    interval when the minimiser is isolated). For ``-inf`` values
    ``certificate`` gives the slope evidence.
    """

    value: float
    argmin: tuple[float, float]
    certificate: str = ""

    @property
    def unbounded(self) -> bool:
        return self.value == -math.inf


def _golden_min(fn, a: np.ndarray, b: np.ndarray, iters: int = 80) -> tuple[np.ndarray, np.ndarray]:
    """Batched golden-section search for minima of convex ``fn`` on ``[a, b]``."""
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        left = fc <= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        keep = np.where(left, c, d)
        fkeep = np.where(left, fc, fd)
        probe = np.where(left, b - GOLDEN * (b - a), a + GOLDEN * (b - a))
        fp = np.asarray(fn(probe), dtype=float)
        c = np.where(left, probe, keep)
        fc = np.where(left, fp, fkeep)
        d = np.where(left, keep, probe)
        fd = np.where(left, fkeep, fp)
        if np.all(b - a <= 1e-13 * (1.0 + np.abs(a))):
            break
    x = np.where(fc <= fd, c, d)
    return x, np.minimum(fc, fd)


def transform_L1(F: SampledConvexFunction, alpha, slope_tol: float = 1e-9, max_doublings: int = 12) -> list[TransformValue]:
    """``inf_q (T(q) - q alpha)`` for each ``alpha``; returns one :class:`TransformValue` each.

    The infimum is located on the grid, refined by golden-section search with
    ``F.func`` when available, and followed outward past an open grid end.
    ``-inf`` is returned when ``alpha`` lies beyond the asymptotic slope at an
    open end by more than ``slope_tol``.
    """
    alphas = np.atleast_1d(np.asarray(alpha, dtype=float))
    g, v = F.finite_grid, F.finite_values
    lo_slope = _asymptotic_slope(F, right=False) if F.open_left else -np.inf
    hi_slope = _asymptotic_slope(F, right=True) if F.open_right else np.inf
    out: list[TransformValue | None] = [None] * alphas.size
    refine_a, refine_b, refine_idx = [], [], []
    for j, a in enumerate(alphas):
        if a > hi_slope + slope_tol:
            out[j] = TransformValue(-math.inf, (math.inf, math.inf), f"alpha exceeds right asymptotic slope {hi_slope:.12g}")
            continue
        if a < lo_slope - slope_tol:
            out[j] = TransformValue(-math.inf, (-math.inf, -math.inf), f"alpha below left asymptotic slope {lo_slope:.12g}")
            continue
        h = v - a * g
        i = int(np.argmin(h))
        hmin = h[i]
        flat = np.flatnonzero(h <= hmin + FLAT_TOL * (1.0 + abs(hmin)))
        # the contiguous flat run containing i
        run_lo = run_hi = i
        flat_set = set(flat.tolist())
        while run_lo - 1 in flat_set:
            run_lo -= 1
        while run_hi + 1 in flat_set:
            run_hi += 1
        at_left = run_lo == 0 and F.open_left
        at_right = run_hi == g.size - 1 and F.open_right
        if F.func is not None and (at_left or at_right):
            res = _march(F.func, g, a, at_right)
            if res.value >= hmin - FLAT_TOL * (1.0 + abs(hmin)):
                span = (min(res.argmin[0], g[run_lo]), max(res.argmin[1], g[run_hi]))
                res = TransformValue(res.value, (float(span[0]), float(span[1])), res.certificate)
            out[j] = res
            continue
        if F.func is not None and run_lo == run_hi:
            refine_a.append(g[max(i - 1, 0)])
            refine_b.append(g[min(i + 1, g.size - 1)])
            refine_idx.append(j)
            out[j] = TransformValue(float(hmin), (float(g[i]), float(g[i])))
            continue
        cert = "grid end reached without exact function" if (at_left or at_right) else ""
        out[j] = TransformValue(float(hmin), (float(g[run_lo]), float(g[run_hi])), cert)
    if refine_idx:
        idx = np.asarray(refine_idx)
        a_vals = alphas[idx]
        x, fx = _golden_min(lambda q: np.asarray(F.func(q), dtype=float) - a_vals * q, np.asarray(refine_a), np.asarray(refine_b))
        for k, j in enumerate(idx):
            prev = out[j]
            if fx[k] < prev.value:
                out[j] = TransformValue(float(fx[k]), (float(x[k]), float(x[k])))
    return out  # type: ignore[return-value]


def _march(func, g: np.ndarray, a: float, right: bool, max_doublings: int = 12) -> TransformValue:
    """Follow ``T(q) - q a`` outward from an open grid end until it turns up."""
    sign = 1.0 if right else -1.0
    edge = g[-1] if right else g[0]
    width = max(abs(edge), 1.0)
    prev_q = edge
    prev_v = float(func(np.asarray([edge]))[0]) - a * edge
    inner = g[-2] if right else g[1]
    for _ in range(max_doublings):
        q = edge + sign * width
        val = float(func(np.asarray([q]))[0]) - a * q
        if not np.isfinite(val):
            break
        if val >= prev_v - FLAT_TOL * (1.0 + abs(prev_v)):
            lo, hi = sorted((inner, q))
            x, fx = _golden_min(lambda t: np.asarray(func(t), dtype=float) - a * t, np.asarray([lo]), np.asarray([hi]))
            best = min(float(fx[0]), prev_v)
            if val >= prev_v - FLAT_TOL * (1.0 + abs(prev_v)) and abs(val - prev_v) <= FLAT_TOL * (1.0 + abs(prev_v)):
                # flat all the way out: the infimum is approached at infinity
                return TransformValue(best, (float(prev_q), math.inf) if right else (-math.inf, float(prev_q)), "asymptotic")
            return TransformValue(best, (float(x[0]), float(x[0])))
        inner, prev_q, prev_v = prev_q, q, val
        width *= 2.0
    return TransformValue(prev_v, (float(prev_q), math.inf) if right else (-math.inf, float(prev_q)), "infimum approached at infinity")


def transform_L3(F: SampledConvexFunction, alpha, **kw) -> list[TransformValue]:
    """``inf_q (T(q) + q alpha)``, i.e. ``L1`` evaluated at ``-alpha``."""
    return transform_L1(F, -np.atleast_1d(np.asarray(alpha, dtype=float)), **kw)


def _sup_affine(alpha: np.ndarray, S: np.ndarray, q: np.ndarray, sign: float, chunk: int = 512) -> np.ndarray:
    fin = np.isfinite(S)
    a, s = alpha[fin], S[fin]
    if a.size == 0:
        return np.full(q.shape, -np.inf)
    out = np.empty(q.size)
    for start in range(0, q.size, chunk):
        qq = q[start : start + chunk]
        out[start : start + chunk] = np.max(s[None, :] + sign * qq[:, None] * a[None, :], axis=1)
    return out


def transform_L2(alpha: Sequence[float], S: Sequence[float], q) -> np.ndarray:
    """``sup_alpha (S(alpha) + q alpha)`` over the sampled points (``-inf`` samples ignored)."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    return _sup_affine(np.asarray(alpha, float), np.asarray(S, float), q, 1.0)


def transform_L4(alpha: Sequence[float], S: Sequence[float], q) -> np.ndarray:
    """``sup_alpha (S(alpha) - q alpha)`` over the sampled points."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    return _sup_affine(np.asarray(alpha, float), np.asarray(S, float), q, -1.0)


def concave_hull(alpha: Sequence[float], S: Sequence[float]) -> np.ndarray:
    """Least concave majorant of a sampled function, evaluated on its own grid.

    This is the ``L2`` then ``L1`` round trip with the conjugate variable
    restricted to the hull edge slopes, which makes it exact. Samples equal
    to ``-inf`` are ignored; the hull is ``-inf`` outside their range.
    """
    a = np.asarray(alpha, dtype=float)
    s = np.asarray(S, dtype=float)
    fin = np.flatnonzero(np.isfinite(s))
    out = np.full(a.shape, -np.inf)
    if fin.size == 0:
        return out
    hull: list[int] = []
    for i in fin:
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # drop i1 when it lies on or below the chord from i0 to i
            if (s[i1] - s[i0]) * (a[i] - a[i0]) <= (s[i] - s[i0]) * (a[i1] - a[i0]):
                hull.pop()
            else:
                break
        hull.append(int(i))
    for i0, i1 in zip(hull, hull[1:]):
        seg = np.arange(i0, i1 + 1)
        t = (a[seg] - a[i0]) / (a[i1] - a[i0])
        out[seg] = s[i0] + t * (s[i1] - s[i0])
        out[i0], out[i1] = s[i0], s[i1]
    if len(hull) == 1:
        out[hull[0]] = s[hull[0]]
    # rounding in the interpolation must not dip below the samples it majorises
    inside = np.arange(fin[0], fin[-1] + 1)
    below = np.isfinite(s[inside]) & (out[inside] < s[inside])
    if below.any():
        bad = inside[below]
        gap = np.max(s[bad] - out[bad])
        if gap > 1e-12 * (1.0 + np.max(np.abs(s[fin]))):
            raise AssertionError("hull construction failed")
        out[bad] = s[bad]
    return out


def is_concave(alpha: Sequence[float], S: Sequence[float], tol: float = 1e-9) -> bool:
    """Discrete concavity of the finite samples.

    Secant slopes must be nonincreasing up to ``tol`` times the largest slope
    magnitude, which absorbs rounding on collinear stretches. An interior
    ``-inf`` sample makes the samples non-concave.
    """
    a = np.asarray(alpha, dtype=float)
    s = np.asarray(S, dtype=float)
    fin = np.isfinite(s)
    idx = np.flatnonzero(fin)
    if idx.size and not fin[idx[0] : idx[-1] + 1].all():
        return False
    a, s = a[fin], s[fin]
    if a.size < 3:
        return True
    slopes = np.diff(s) / np.diff(a)
    return bool(np.all(np.diff(slopes) <= tol * (1.0 + np.max(np.abs(slopes)))))


# Domain and kinks --------------------------------------------------------------------


def alpha_bounds(F: SampledConvexFunction) -> tuple[float, float]:
    """``(alpha_min, alpha_max)`` as the extreme subdifferential values on the grid.

    At an open grid end these are estimates of the asymptotic slopes.
    """
    sd = subdifferential(F)
    lo = _asymptotic_slope(F, right=False) if F.open_left else sd.upper[0]
    hi = _asymptotic_slope(F, right=True) if F.open_right else sd.lower[-1]
    return float(lo) + 0.0, float(hi) + 0.0


def _asymptotic_slope(F: SampledConvexFunction, right: bool, max_doublings: int = 12) -> float:
    """Limit of the slope of ``F`` at an open end.

    Without ``F.func`` this is the one-sided derivative at the last grid point.
    With it, secants over ``[q, 2q]`` are followed outward until they settle.
    """
    key = ("asymptotic", right)
    if key in F._cache:
        return F._cache[key]
    sd = subdifferential(F)
    slope = float(sd.upper[-1] if right else sd.lower[0])
    if F.func is not None:
        g = F.finite_grid
        edge = float(g[-1] if right else g[0])
        sign = 1.0 if right else -1.0
        q0 = edge
        width = max(abs(edge), 1.0)
        prev = None
        for _ in range(max_doublings):
            q1 = q0 + sign * width
            f0, f1 = np.asarray(F.func(np.asarray([q0, q1])), dtype=float)
            if not (np.isfinite(f0) and np.isfinite(f1)):
                break
            s = (f1 - f0) / (q1 - q0)
            slope = float(max(slope, s) if right else min(slope, s))
            if prev is not None and abs(s - prev) <= 1e-14 * (1.0 + abs(s)):
                break
            prev = s
            q0 = q1
            width *= 2.0
    F._cache[key] = slope
    return slope


@dataclass(frozen=True)
class PhaseTransition:
    """A point where ``T`` is not differentiable; the transform is affine on ``[left, right]``."""

    q: float
    left_slope: float
    right_slope: float
    refined: bool

    @property
    def gap(self) -> tuple[float, float]:
        return self.left_slope, self.right_slope


def _gap_fit(g: np.ndarray, v: np.ndarray, strides=(1, 2, 4, 8, 16)) -> np.ndarray:
    """Per grid point, the intercept G of ``gap_k = G + c * width_k`` fitted over strides."""
    n = g.size
    G = np.zeros(n)
    for i in range(n):
        ws, gs = [], []
        for k in strides:
            if i - k < 0 or i + k >= n:
                break
            right = (v[i + k] - v[i]) / (g[i + k] - g[i])
            left = (v[i] - v[i - k]) / (g[i] - g[i - k])
            ws.append(g[i + k] - g[i - k])
            gs.append(right - left)
        if len(ws) >= 3:
            c1, c0 = np.polyfit(ws, gs, 1)
            G[i] = c0
        elif ws:
            G[i] = gs[0]
    return G


def _locate_kink(func, a: float, b: float, tol: float) -> tuple[float, float, float] | None:
    """Bisect for a kink of ``func`` in ``[a, b]``; returns (q, D-, D+) when confirmed."""
    h = (b - a) * 1e-3
    dl = _func_derivatives(func, a, h)[1]
    dr = _func_derivatives(func, b, h)[0]
    if dr - dl <= tol:
        return None
    mid_slope = 0.5 * (dl + dr)
    lo, hi = a, b
    for _ in range(60):
        m = 0.5 * (lo + hi)
        step = max((hi - lo) * 1e-3, 1e-9 * (1 + abs(m)))
        dm, dp = _func_derivatives(func, m, step)
        if dp - dm > tol:
            lo = hi = m
            break
        if 0.5 * (dm + dp) < mid_slope:
            lo = m
        else:
            hi = m
        if hi - lo <= 1e-12 * (1 + abs(m)):
            break
    q0 = 0.5 * (lo + hi)
    # gaps at five scales; a kink keeps a stable positive gap as the scale shrinks
    f0 = float(func(np.asarray([q0]))[0])
    deltas = []
    for j in range(5):
        s = (b - a) * 0.25 / (4 ** j)
        fp = float(func(np.asarray([q0 + s]))[0])
        fm = float(func(np.asarray([q0 - s]))[0])
        deltas.append((fp - f0) / s - (f0 - fm) / s)
    extrap = 2.0 * deltas[4] - deltas[3]
    if extrap <= tol or deltas[4] <= tol:
        return None
    dm, dp = _func_derivatives(func, q0, 0.05 * (b - a))
    return q0, dm, dp


def phase_transitions(F: SampledConvexFunction, tol: float = 1e-3) -> list[PhaseTransition]:
    """Kinks of ``T`` whose derivative jump exceeds ``tol``.

    Candidates come from a multi-scale fit of secant gaps on the grid (a
    smooth function has a gap proportional to the stencil width, a kink a
    positive intercept). With ``F.func`` each candidate is localised by
    bisection and confirmed at five shrinking scales; without it the grid
    estimate is reported with ``refined=False``.
    """
    g, v = F.finite_grid, F.finite_values
    G = _gap_fit(g, v)
    cand = np.flatnonzero(G > tol)
    groups: list[list[int]] = []
    for i in cand:
        if groups and i - groups[-1][-1] <= 2:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    out: list[PhaseTransition] = []
    for grp in groups:
        i0, i1 = max(grp[0] - 1, 0), min(grp[-1] + 1, g.size - 1)
        # a run touching a hard end cannot be probed on both sides
        if (F.hard_ends[0] and i0 == 0) or (F.hard_ends[1] and i1 == g.size - 1):
            continue
        if F.func is not None:
            found = _locate_kink(F.func, float(g[i0]), float(g[i1]), tol)
            if found is not None:
                q0, dm, dp = found
                out.append(PhaseTransition(q0, dm, dp, True))
            continue
        # secants just outside the candidate run; wider stencils would straddle the kink
        best = max(grp, key=lambda i: G[i])
        a0, a1 = max(i0 - 1, 0), min(i1 + 1, g.size - 1)
        left = (v[a0 + 1] - v[a0]) / (g[a0 + 1] - g[a0])
        right = (v[a1] - v[a1 - 1]) / (g[a1] - g[a1 - 1])
        out.append(PhaseTransition(float(g[best]), float(left), float(right), False))
    return out


# Grids ----------------------------------------------------------------------------


def default_q_grid(func: Callable[[np.ndarray], np.ndarray] | None = None, half_width: float = 20.0,
                   points: int = 4001, slope_tol: float = 1e-4, max_extensions: int = 5) -> np.ndarray:
    """``[-20, 20]`` with 4001 points, extended while boundary secants still move.

    Each extension doubles the covered range with 1000 further points per side
    until the boundary secant slope changes by less than ``slope_tol``.
    """
    grid = np.linspace(-half_width, half_width, points)
    if func is None:
        return grid
    for _ in range(max_extensions):
        lo, hi = grid[0], grid[-1]
        step_l = grid[1] - grid[0]
        step_r = grid[-1] - grid[-2]

        def secant(a, b):
            fa, fb = np.asarray(func(np.asarray([a, b])), dtype=float)
            return (fb - fa) / (b - a) if np.isfinite(fa) and np.isfinite(fb) else np.nan

        moved_r = abs(secant(2 * hi - step_r, 2 * hi) - secant(hi - step_r, hi))
        moved_l = abs(secant(2 * lo, 2 * lo + step_l) - secant(lo, lo + step_l))
        ext = []
        if not moved_l <= slope_tol:
            ext.append(np.linspace(2 * lo, lo, 1001)[:-1])
        ext.append(grid)
        if not moved_r <= slope_tol:
            ext.append(np.linspace(hi, 2 * hi, 1001)[1:])
        if len(ext) == 1:
            break
        grid = np.concatenate(ext)
    return grid
