"""Perron roots of small nonnegative matrices by shifted power iteration.

Every routine works on log-weights so that matrices whose entries span many
orders of magnitude (``exp(q * phi)`` at large ``|q|``) stay representable.
Bounds come from the Collatz-Wielandt inequality

    min_i (W x)_i / x_i  <=  rho(W)  <=  max_i (W x)_i / x_i,   x > 0,

so the iteration stops on a certified relative bracket rather than on a
heuristic change in the iterate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

TOL = 1e-12
MAX_ITER = 100_000


class ConvergenceError(RuntimeError):
    pass


def strong_components(support: np.ndarray) -> list[np.ndarray]:
    """Strongly connected components of a boolean adjacency matrix.

    Components are returned sorted by their smallest vertex so the order is
    reproducible.
    """
    n = support.shape[0]
    if n == 0:
        return []
    _, labels = connected_components(support.astype(np.int8), directed=True, connection="strong")
    comps = [np.flatnonzero(labels == lab) for lab in np.unique(labels)]
    comps.sort(key=lambda c: int(c[0]))
    return comps


def is_nontrivial(support: np.ndarray, comp: np.ndarray) -> bool:
    """A component carries a cycle unless it is a single vertex without a loop."""
    return len(comp) > 1 or bool(support[comp[0], comp[0]])


def _bracket(w: np.ndarray, x: np.ndarray):
    y = np.einsum("bij,bj->bi", w, x)
    ratio = y / x
    return y, ratio.min(axis=1), ratio.max(axis=1)


def _power_block(w: np.ndarray, tol: float, max_iter: int, plain_steps: int = 30, squarings: int = 10):
    """Batched power iteration on irreducible blocks ``w`` of shape (B, k, k).

    A short run of plain iterations settles easy members. The rest iterate
    with ``(w + c I)^(2^squarings)`` built by repeated squaring, where the
    shift ``c`` (inside the Collatz-Wielandt bracket) makes the matrix
    primitive even for periodic ``w``. Every stopping decision uses the
    bracket of ``w`` itself.

    Returns (lo, hi, x, done): the bracket of the Perron root, the final
    positive iterate and a convergence flag.
    """
    B, k, _ = w.shape
    lo = np.zeros(B)
    hi = np.zeros(B)
    done = np.zeros(B, dtype=bool)
    out_x = np.ones((B, k))
    x = np.ones((B, k))
    active = np.arange(B)
    wa = w
    used = 0

    def settle(conv, rlo, rhi):
        nonlocal active, wa, x
        idx = active[conv]
        lo[idx], hi[idx], out_x[idx] = rlo[conv], rhi[conv], x[conv]
        done[idx] = True
        keep = ~conv
        active, wa, x = active[keep], wa[keep], x[keep]
        return keep

    for _ in range(min(plain_steps, max_iter)):
        y, rlo, rhi = _bracket(wa, x)
        keep = settle((rhi - rlo) <= tol * rlo, rlo, rhi)
        if active.size == 0:
            break
        x = y[keep]
        x = x / x.max(axis=1, keepdims=True)
        np.maximum(x, 1e-300, out=x)
        used += 1
    if active.size:
        _, rlo, rhi = _bracket(wa, x)
        c = np.sqrt(np.maximum(rlo, 1e-300) * rhi)
        p = wa + c[:, None, None] * np.eye(k)[None]
        p = p / p.max(axis=(1, 2), keepdims=True)
        for _ in range(squarings):
            p = p @ p
            p = p / p.max(axis=(1, 2), keepdims=True)
        step = 1 << squarings
        while active.size and used < max_iter:
            x = np.einsum("bij,bj->bi", p, x)
            x = x / x.max(axis=1, keepdims=True)
            np.maximum(x, 1e-300, out=x)
            used += step
            _, rlo, rhi = _bracket(wa, x)
            keep = settle((rhi - rlo) <= tol * rlo, rlo, rhi)
            p = p[keep]
    if active.size:
        _, rlo, rhi = _bracket(wa, x)
        lo[active], hi[active], out_x[active] = rlo, rhi, x
    return lo, hi, out_x, done


def _balance(logw: np.ndarray, rounds: int = 64) -> np.ndarray:
    """Diagonal similarity ``D^-1 W D`` in log space, ``D`` a rough Perron vector.

    The vector comes from iterating ``x <- W x + x / 10`` in log space, so it never
    underflows; after balancing the Perron vector of the result is close to
    constant and the linear-space iteration stays well scaled.
    """
    B, d, _ = logw.shape
    lx = np.zeros((B, d))
    active = np.arange(B)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for _ in range(rounds):
            z = logw[active] + lx[active][:, None, :]
            top = np.max(z, axis=2)
            top = np.where(np.isfinite(top), top, 0.0)
            y = top + np.log(np.sum(np.exp(z - top[:, :, None]), axis=2))
            y = y - np.max(y, axis=1, keepdims=True)
            old = lx[active]
            nxt = np.logaddexp(old - np.log(10.0), y)
            nxt -= nxt.max(axis=1, keepdims=True)
            lx[active] = nxt
            moving = np.max(np.abs(nxt - old), axis=1) > 0.05
            active = active[moving]
            if active.size == 0:
                break
    return logw + lx[:, None, :] - lx[:, :, None]


def log_spectral_radius(logw: np.ndarray, tol: float = TOL, max_iter: int = MAX_ITER) -> np.ndarray:
    """Log of the spectral radius for a batch of nonnegative matrices.

    ``logw`` has shape (..., d, d); entries equal to ``-inf`` are structural
    zeros. The result has the leading shape of ``logw``; a matrix without
    cycles has spectral radius 0 and log-radius ``-inf``.
    """
    logw = np.asarray(logw, dtype=float)
    lead = logw.shape[:-2]
    d = logw.shape[-1]
    flat = logw.reshape((-1, d, d))
    B = flat.shape[0]
    out = np.full(B, -np.inf)
    if d == 0 or B == 0:
        return out.reshape(lead)
    with np.errstate(invalid="ignore"):
        any_finite = np.isfinite(flat).any(axis=(1, 2))
    if any_finite.any():
        flat = flat.copy()
        flat[any_finite] = _balance(flat[any_finite])
    with np.errstate(invalid="ignore"):
        scale = np.max(np.where(np.isfinite(flat), flat, -np.inf), axis=(1, 2))
    ok = np.isfinite(scale)
    scale_safe = np.where(ok, scale, 0.0)
    w = np.exp(flat - scale_safe[:, None, None])
    w[~ok] = 0.0
    # group batch members by their numerical support so underflow is treated
    # as a genuine structural zero
    support = w > 0
    keys = {}
    for b in range(B):
        if ok[b]:
            keys.setdefault(support[b].tobytes(), []).append(b)
    for members in keys.values():
        members = np.asarray(members)
        sup = support[members[0]]
        best = np.full(members.size, -np.inf)
        for comp in strong_components(sup):
            if not is_nontrivial(sup, comp):
                continue
            block = w[np.ix_(members, comp, comp)]
            lo, hi, _, _ = _power_block(block, tol, max_iter)
            best = np.maximum(best, np.log(0.5 * (lo + hi)))
        out[members] = best + scale_safe[members]
    return out.reshape(lead)


@dataclass(frozen=True)
class PerronData:
    log_rho: float
    right: np.ndarray
    left: np.ndarray
    bracket: tuple[float, float]
    converged: bool


def perron_vectors(logw: np.ndarray, tol: float = TOL, max_iter: int = MAX_ITER) -> PerronData:
    """Perron root with right and left eigenvectors of one irreducible matrix.

    Vectors are normalised so that ``left @ right == 1`` and ``right.max() == 1``.
    """
    logw = np.asarray(logw, dtype=float)
    finite = np.isfinite(logw)
    if not finite.any():
        raise ValueError("matrix has no nonzero entries")
    scale = logw[finite].max()
    w = np.where(finite, np.exp(np.where(finite, logw, 0.0) - scale), 0.0)
    comps = [c for c in strong_components(w > 0) if is_nontrivial(w > 0, c)]
    if len(comps) != 1 or len(comps[0]) != w.shape[0]:
        raise ValueError("matrix is not irreducible")
    lo_r, hi_r, xr, dr = _power_block(w[None], tol, max_iter)
    lo_l, hi_l, xl, dl = _power_block(w.T[None], tol, max_iter)
    right = xr[0] / xr[0].max()
    left = xl[0] / (xl[0] @ right)
    lo = max(lo_r[0], lo_l[0])
    hi = min(hi_r[0], hi_l[0])
    rho = 0.5 * (lo + hi)
    return PerronData(
        log_rho=float(np.log(rho) + scale),
        right=right,
        left=left,
        bracket=(float(np.log(lo) + scale), float(np.log(hi) + scale)),
        converged=bool(dr[0] and dl[0]),
    )
