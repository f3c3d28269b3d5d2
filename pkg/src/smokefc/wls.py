"""Weighted-least-squares edge-preserving smoothing.

Solves ``(I + lambda * L_g) u = g`` where ``L_g = Dx' Ax Dx + Dy' Ay Dy`` is a
five-point graph Laplacian whose edge weights come from the log-luminance
gradients of a guide image.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import ConvergenceError
from .image import as_plane

LOG_GUARD = 1e-4


@dataclass(frozen=True)
class WlsParams:
    lam: float = 1.0
    alpha: float = 1.2
    eps_w: float = 1e-4
    solver_tol: float = 1e-6
    solver_max_iter: int = 1000

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.alpha <= 0 or self.eps_w <= 0 or self.solver_tol <= 0:
            raise ValueError("alpha, eps_w and solver_tol must be positive")
        if self.solver_max_iter < 1:
            raise ValueError("solver_max_iter must be >= 1")


@dataclass(frozen=True)
class SmoothnessWeights:
    """Edge weights; ``ax[i, j]`` couples (i, j)-(i, j+1), ``ay[i, j]`` couples (i, j)-(i+1, j)."""

    ax: np.ndarray
    ay: np.ndarray


@dataclass(frozen=True)
class SparseSystem:
    """Five-point stencil of ``I + lambda * L_g``.

    ``off_x[i, j]`` is the matrix entry between pixel (i, j) and (i, j+1);
    ``off_y[i, j]`` the entry between (i, j) and (i+1, j). Both are <= 0 and
    zero on the last column/row respectively.
    """

    diag: np.ndarray
    off_x: np.ndarray
    off_y: np.ndarray
    rhs: np.ndarray

    @property
    def shape(self):
        return self.diag.shape

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = np.empty(self.shape)
        _stencil_apply(self.diag, self.off_x, self.off_y, np.ascontiguousarray(u, dtype=np.float64), out)
        return out

    def to_sparse(self) -> sp.csr_matrix:
        """Explicit matrix, row-major pixel ordering."""
        h, w = self.shape
        idx = np.arange(h * w).reshape(h, w)
        rows = [idx.ravel()]
        cols = [idx.ravel()]
        vals = [self.diag.ravel()]
        for a, b, v in (
            (idx[:, :-1], idx[:, 1:], self.off_x[:, :-1]),
            (idx[:-1, :], idx[1:, :], self.off_y[:-1, :]),
        ):
            rows += [a.ravel(), b.ravel()]
            cols += [b.ravel(), a.ravel()]
            vals += [v.ravel(), v.ravel()]
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(h * w, h * w),
        )


def build_weights(guide, params: WlsParams) -> SmoothnessWeights:
    guide = as_plane(guide)
    ell = np.log10(guide + LOG_GUARD)
    ax = np.zeros_like(ell)
    ay = np.zeros_like(ell)
    ax[:, :-1] = 1.0 / (np.abs(np.diff(ell, axis=1)) ** params.alpha + params.eps_w)
    ay[:-1, :] = 1.0 / (np.abs(np.diff(ell, axis=0)) ** params.alpha + params.eps_w)
    return SmoothnessWeights(ax, ay)


def assemble_system(weights: SmoothnessWeights, channel, lam: float) -> SparseSystem:
    channel = as_plane(channel)
    if weights.ax.shape != channel.shape or weights.ay.shape != channel.shape:
        raise ValueError(
            f"weight shape {weights.ax.shape} does not match channel shape {channel.shape}"
        )
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    off_x = -lam * weights.ax
    off_y = -lam * weights.ay
    # each row of L_g sums to zero: diagonal collects the incident edge weights
    lap = weights.ax + weights.ay
    lap[:, 1:] += weights.ax[:, :-1]
    lap[1:, :] += weights.ay[:-1, :]
    diag = 1.0 + lam * lap
    return SparseSystem(diag, off_x + 0.0, off_y + 0.0, channel.copy())


@njit(cache=True)
def _stencil_apply(diag, ox, oy, u, out):
    h, w = diag.shape
    for i in range(h):
        for j in range(w):
            acc = diag[i, j] * u[i, j]
            if j + 1 < w:
                acc += ox[i, j] * u[i, j + 1]
            if j > 0:
                acc += ox[i, j - 1] * u[i, j - 1]
            if i + 1 < h:
                acc += oy[i, j] * u[i + 1, j]
            if i > 0:
                acc += oy[i - 1, j] * u[i - 1, j]
            out[i, j] = acc


@njit(cache=True)
def _pcg(diag, ox, oy, b, x, tol, max_iter):
    h, w = diag.shape
    r = np.empty_like(b)
    z = np.empty_like(b)
    p = np.empty_like(b)
    q = np.empty_like(b)
    bnorm = np.sqrt(np.sum(b * b))
    target = tol * bnorm
    _stencil_apply(diag, ox, oy, x, q)
    rr = 0.0
    rz = 0.0
    for i in range(h):
        for j in range(w):
            r[i, j] = b[i, j] - q[i, j]
            z[i, j] = r[i, j] / diag[i, j]
            p[i, j] = z[i, j]
            rr += r[i, j] * r[i, j]
            rz += r[i, j] * z[i, j]
    if np.sqrt(rr) <= target:
        return 0, np.sqrt(rr) / bnorm
    for it in range(1, max_iter + 1):
        _stencil_apply(diag, ox, oy, p, q)
        pq = 0.0
        for i in range(h):
            for j in range(w):
                pq += p[i, j] * q[i, j]
        step = rz / pq
        rr = 0.0
        rz_new = 0.0
        for i in range(h):
            for j in range(w):
                x[i, j] += step * p[i, j]
                r[i, j] -= step * q[i, j]
                z[i, j] = r[i, j] / diag[i, j]
                rr += r[i, j] * r[i, j]
                rz_new += r[i, j] * z[i, j]
        if np.sqrt(rr) <= target:
            # guard against drift of the recursive residual
            _stencil_apply(diag, ox, oy, x, q)
            rr = 0.0
            rz_new = 0.0
            for i in range(h):
                for j in range(w):
                    r[i, j] = b[i, j] - q[i, j]
                    z[i, j] = r[i, j] / diag[i, j]
                    rr += r[i, j] * r[i, j]
                    rz_new += r[i, j] * z[i, j]
            if np.sqrt(rr) <= target:
                return it, np.sqrt(rr) / bnorm
        beta = rz_new / rz
        rz = rz_new
        for i in range(h):
            for j in range(w):
                p[i, j] = z[i, j] + beta * p[i, j]
    return -1, np.sqrt(rr) / bnorm


def solve(system: SparseSystem, params: WlsParams, x0=None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradient on the stencil.

    Stops once ``||A u - g|| / ||g|| <= params.solver_tol``; raises
    ConvergenceError carrying the achieved residual otherwise. ``x0`` is an
    optional warm start; by default the iteration starts from the input
    itself, which is already the solution on flat regions. Reductions run in a fixed order, so results are
    deterministic.
    """
    b = np.ascontiguousarray(system.rhs, dtype=np.float64)
    if not np.any(b):
        return np.zeros_like(b)
    if not np.any(system.off_x) and not np.any(system.off_y):
        return b / system.diag
    x = b.copy() if x0 is None else np.array(x0, dtype=np.float64)
    iters, residual = _pcg(
        np.ascontiguousarray(system.diag),
        np.ascontiguousarray(system.off_x),
        np.ascontiguousarray(system.off_y),
        b,
        x,
        float(params.solver_tol),
        int(params.solver_max_iter),
    )
    if iters < 0:
        raise ConvergenceError(
            f"conjugate gradient did not reach relative residual {params.solver_tol:g} "
            f"in {params.solver_max_iter} iterations (achieved {residual:.3e})",
            residual=residual,
            iterations=params.solver_max_iter,
        )
    return x


def wls_filter(channel, guide, params: WlsParams, x0=None) -> np.ndarray:
    channel = as_plane(channel)
    guide = as_plane(guide)
    if channel.shape != guide.shape:
        raise ValueError(f"channel {channel.shape} and guide {guide.shape} differ in shape")
    if params.lam == 0:
        return channel.copy()
    system = assemble_system(build_weights(guide, params), channel, params.lam)
    return solve(system, params, x0=x0)
