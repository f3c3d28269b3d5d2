"""Linear soft-margin SVM.

Both solvers work on the dual ``min 1/2 a'Qa - e'a  s.t. y'a = 0, 0 <= a <= C``
with an unregularised bias:

* ``ipm`` (default): primal-dual interior point. ``Q = Z Z'`` has rank equal
  to the feature dimension, so each Newton system is solved through the
  Woodbury identity at O(n d^2) cost and the iteration count does not grow
  with C.
* ``smo``: sequential minimal optimisation with second-order working-set
  selection; stops when the maximal KKT violation falls below ``tol``. Fine
  for small or well-conditioned problems, slow for large C on overlapping
  classes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, TrainingError

_TAU = 1e-12
# Precompute the full Gram matrix while it fits in this many bytes.
GRAM_CACHE_BYTES = 256 * 2**20


@dataclass(frozen=True)
class Scaler:
    """Per-dimension min-max scaling to [0, 1], clamped at transform time."""

    lo: np.ndarray
    hi: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.lo.shape[0]:
            raise ValueError(f"expected {self.lo.shape[0]} features, got {X.shape[-1]}")
        span = self.hi - self.lo
        live = span > 0
        out = np.zeros_like(X)
        np.divide(X - self.lo, np.where(live, span, 1.0), out=out, where=np.broadcast_to(live, X.shape))
        return np.clip(out, 0.0, 1.0)


def fit_scaler(X) -> Scaler:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    return Scaler(X.min(axis=0), X.max(axis=0))


@dataclass(frozen=True)
class LinearModel:
    w: np.ndarray
    b: float
    scaler: Scaler
    c: float

    def save(self, path) -> None:
        def row(v):
            return " ".join(repr(float(x)) for x in v)

        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{float(self.c)!r}\n{float(self.b)!r}\n")
            fh.write(row(self.w) + "\n" + row(self.scaler.lo) + "\n" + row(self.scaler.hi) + "\n")

    @classmethod
    def load(cls, path) -> "LinearModel":
        with open(path, encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if len(lines) != 5:
            raise ValueError(f"{path}: expected 5 lines in model file, found {len(lines)}")
        c = float(lines[0])
        b = float(lines[1])
        w, lo, hi = (np.array([float(t) for t in ln.split()]) for ln in lines[2:])
        if not (w.shape == lo.shape == hi.shape):
            raise ValueError(f"{path}: weight and scaler rows differ in length")
        return cls(w=w, b=b, scaler=Scaler(lo, hi), c=c)


@dataclass
class TrainResult:
    model: LinearModel
    alpha: np.ndarray
    iterations: int
    kkt_gap: float


def _smo(X, y, c, tol, max_iter):
    """Solve min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q = (y y') * (X X')."""
    n = X.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    w = np.zeros(X.shape[1])
    diag_k = np.einsum("ij,ij->i", X, X)
    if n * n * 8 <= GRAM_CACHE_BYTES:
        gram = X @ X.T

        def kernel_row(t):
            return gram[t]
    else:

        def kernel_row(t):
            return X @ X[t]

    pos = y > 0
    for it in range(max_iter):
        at_upper = alpha >= c
        at_lower = alpha <= 0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        score = -y * grad
        if not up.any() or not low.any():
            return alpha, w, 0.0, it
        up_scores = np.where(up, score, -np.inf)
        i = int(np.argmax(up_scores))
        m_up = up_scores[i]
        m_low = np.min(np.where(low, score, np.inf))
        gap = m_up - m_low
        if gap < tol:
            return alpha, w, gap, it
        k_i = kernel_row(i)
        b_it = m_up - score
        cand = low & (b_it > 0)
        a_it = diag_k[i] + diag_k - 2.0 * k_i
        a_it = np.where(a_it > 0, a_it, _TAU)
        gain = np.where(cand, -(b_it * b_it) / a_it, np.inf)
        j = int(np.argmin(gain))
        k_j = kernel_row(j)
        yi, yj = y[i], y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        quad = max(diag_k[i] + diag_k[j] - 2.0 * k_i[j], _TAU)
        if yi != yj:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > c:
                    ai, aj = c, c - diff
            elif aj > c:
                aj, ai = c, c + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > c:
                if ai > c:
                    ai, aj = c, total - c
            elif aj < 0:
                aj, ai = 0.0, total
            if total > c:
                if aj > c:
                    aj, ai = c, total - c
            elif ai < 0:
                ai, aj = 0.0, total
        d_i, d_j = ai - ai_old, aj - aj_old
        alpha[i], alpha[j] = ai, aj
        grad += y * (yi * d_i * k_i + yj * d_j * k_j)
        w += (yi * d_i) * X[i] + (yj * d_j) * X[j]
    raise ConvergenceError(
        f"SMO stopped after {max_iter} iterations with KKT gap {gap:.3e} (tolerance {tol:g})",
        residual=gap,
        iterations=max_iter,
    )


def _duality_gap(Z, y, alpha, nu, c):
    """Relative gap between the hinge primal at (w, nu) and the dual at alpha."""
    w = Z.T @ alpha
    ww = float(w @ w)
    primal = 0.5 * ww + c * float(np.maximum(0.0, 1.0 - (Z @ w + y * nu)).sum())
    dual = float(alpha.sum()) - 0.5 * ww
    return (primal - dual) / (1.0 + abs(primal))


def _ipm(Z, y, c, tol, max_iter, accept=1e-4):
    """Primal-dual path following with Mehrotra predictor-corrector.

    Returns (alpha, nu, gap, iterations) where ``nu`` is the multiplier of the
    equality constraint, i.e. the bias of the decision function, and ``gap``
    the relative primal-dual gap of the returned point. Iteration stops at
    ``gap <= tol``; if progress stalls first, the best iterate is returned
    provided its gap is within ``accept``.
    """
    n, d = Z.shape
    e = np.ones(n)
    # t = C - alpha is carried separately so it keeps full precision near the bound
    alpha = np.full(n, c / 2.0)
    t = np.full(n, c / 2.0)
    z = np.ones(n)
    u = np.ones(n)
    nu = 0.0
    eye = np.eye(d)
    best = (np.inf, alpha, nu, 0)

    for it in range(max_iter + 1):
        w = Z.T @ alpha
        r_d = Z @ w - e + y * nu - z + u
        r_p = float(y @ alpha)
        comp = float(alpha @ z + t @ u)
        gap = _duality_gap(Z, y, alpha, nu, c) if abs(r_p) <= 1e-6 * (1.0 + c) else np.inf
        if gap < best[0]:
            best = (gap, alpha.copy(), nu, it)
        if gap <= tol or it == max_iter:
            break

        dinv = 1.0 / (z / alpha + u / t)
        zd = Z * dinv[:, None]
        small = eye + Z.T @ zd
        # I + Z'D^-1 Z has spectrum >= 1; round-off with barrier weights near
        # 1e15 can break that, so factor by eigh and restore the bound
        evals, evecs = np.linalg.eigh((small + small.T) / 2.0)
        evals = np.maximum(evals, 1.0)

        def m_inv(v):
            return dinv * v - zd @ (evecs @ ((evecs.T @ (zd.T @ v)) / evals))

        m_y = m_inv(y)
        y_m_y = float(y @ m_y)

        def direction(r_za, r_tu):
            # r_za, r_tu: targets for alpha*z and t*u after the step
            rhs = -r_d + r_za / alpha - r_tu / t
            m_rhs = m_inv(rhs)
            dnu = (float(y @ m_rhs) + r_p) / y_m_y
            da = m_rhs - dnu * m_y
            dz = (r_za - z * da) / alpha
            du = (r_tu + u * da) / t
            return da, dnu, dz, du

        def max_step(da, dz, du):
            step = 1.0
            for v, dv in ((alpha, da), (t, -da), (z, dz), (u, du)):
                neg = dv < 0
                if neg.any():
                    step = min(step, float(np.min(-v[neg] / dv[neg])))
            return step

        mu = comp / (2 * n)
        # predictor (affine scaling)
        da, dnu, dz, du = direction(-alpha * z, -t * u)
        step = max_step(da, dz, du)
        comp_aff = float((alpha + step * da) @ (z + step * dz) + (t - step * da) @ (u + step * du))
        sigma = (comp_aff / comp) ** 3
        # corrector
        da, dnu, dz, du = direction(
            sigma * mu - alpha * z - da * dz,
            sigma * mu - t * u + da * du,
        )
        step = min(1.0, 0.995 * max_step(da, dz, du))
        if step < 1e-12 or not np.all(np.isfinite(da)):
            break
        alpha = alpha + step * da
        t = t - step * da
        nu += step * dnu
        z = z + step * dz
        u = u + step * du
    gap, alpha, nu, it = best
    if gap > tol:
        polished = _crossover(Z, y, alpha, c)
        if polished is not None:
            p_gap = _duality_gap(Z, y, polished[0], polished[1], c)
            if p_gap < gap and abs(float(y @ polished[0])) <= 1e-9 * (1.0 + c):
                alpha, nu = polished
                gap = p_gap
    if gap > accept:
        raise ConvergenceError(
            f"interior point stalled with relative duality gap {gap:.3e} (tolerance {accept:g})",
            residual=gap,
            iterations=it,
        )
    return alpha, nu, gap, it


def _crossover(Z, y, alpha, c, rel=1e-6):
    """Exact KKT solve on the free set guessed from an interior-point iterate.

    Multipliers close to a bound are fixed there; the free ones and the bias
    solve ``y_i (w . z_i + b) = 1`` together with ``y'a = 0``. Returns None
    when the guessed active set is inconsistent.
    """
    upper = alpha >= c * (1.0 - rel)
    free = ~upper & (alpha > c * rel)
    fixed = np.where(upper, c, 0.0)
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return None
    zf = Z[idx]
    w_fixed = Z.T @ fixed
    k = idx.size
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = zf @ zf.T
    lhs[:k, k] = y[idx]
    lhs[k, :k] = y[idx]
    rhs = np.empty(k + 1)
    rhs[:k] = 1.0 - zf @ w_fixed
    rhs[k] = -float(y @ fixed)
    sol = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    a_free = sol[:k]
    if np.any(a_free < 0) or np.any(a_free > c):
        return None
    out = fixed
    out[idx] = a_free
    return out, float(sol[k])


def _refit_bias(s, y):
    """Midpoint of the b minimising sum_i max(0, 1 - y_i (s_i + b)).

    For fixed w this is the set of optimal offsets. It is a single point when
    a free support vector exists and an interval when every multiplier sits
    at a bound, where the midpoint matches libsvm's convention. Both solvers
    go through here so they agree on degenerate problems.
    """
    kinks = y - s
    pos = np.sort(kinks[y > 0])
    neg = np.sort(kinks[y < 0])
    cand = np.sort(kinks)
    # slope just right / left of each kink
    right = -(pos.size - np.searchsorted(pos, cand, side="right")) + np.searchsorted(neg, cand, side="right")
    left = -(pos.size - np.searchsorted(pos, cand, side="left")) + np.searchsorted(neg, cand, side="left")
    lo = cand[np.argmax(right >= 0)]
    hi = cand[len(cand) - 1 - np.argmax((left <= 0)[::-1])]
    return float((lo + hi) / 2.0)


SOLVERS = ("ipm", "smo")


def train_detailed(X, labels, c: float = 1e4, tol: float | None = None,
                   max_iter: int | None = None, solver: str = "ipm") -> TrainResult:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.asarray(labels)
    if X.shape[0] != labels.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows but {labels.shape[0]} labels")
    if c <= 0:
        raise ValueError(f"C must be positive, got {c}")
    bad = set(np.unique(labels).tolist()) - {0, 1}
    if bad:
        raise TrainingError(f"labels must be 0 or 1, found {sorted(bad)}")
    for cls in (0, 1):
        if not np.any(labels == cls):
            raise TrainingError(f"training set has no examples of class {cls}")
    scaler = fit_scaler(X)
    Xs = scaler.transform(X)
    y = np.where(labels == 1, 1.0, -1.0)
    if solver == "ipm":
        alpha, _, gap, iters = _ipm(
            Xs * y[:, None], y, float(c), 1e-10 if tol is None else tol, 100 if max_iter is None else max_iter
        )
        w = Xs.T @ (alpha * y)
    elif solver == "smo":
        alpha, w, gap, iters = _smo(
            Xs, y, float(c), 1e-4 if tol is None else tol, 10_000_000 if max_iter is None else max_iter
        )
    else:
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    b = _refit_bias(Xs @ w, y)
    model = LinearModel(w=w, b=b, scaler=scaler, c=float(c))
    return TrainResult(model=model, alpha=alpha, iterations=iters, kkt_gap=gap)


def train(X, labels, c: float = 1e4, solver: str = "ipm", **kwargs) -> LinearModel:
    return train_detailed(X, labels, c=c, solver=solver, **kwargs).model


def decision_score(model: LinearModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.w.shape[0]:
        raise ValueError(f"model expects {model.w.shape[0]} features, got {x.shape[-1]}")
    out = model.scaler.transform(x) @ model.w + model.b
    return float(out) if out.ndim == 0 else out


def predict(model: LinearModel, x):
    score = decision_score(model, x)
    if isinstance(score, float):
        return int(score > 0)
    return (score > 0).astype(int)


def objective(model: LinearModel, X, labels) -> float:
    """Primal value 1/2 |w|^2 + C * sum of hinge losses on raw (unscaled) rows."""
    y = np.where(np.asarray(labels) == 1, 1.0, -1.0)
    margins = y * decision_score(model, np.atleast_2d(X))
    return 0.5 * float(model.w @ model.w) + model.c * float(np.maximum(0.0, 1.0 - margins).sum())
