"""Constrained-optimization primitives shared by the solvers.

Three operations live here:

* :func:`project_simplex` -- exact Euclidean projection onto the probability
  simplex by the sort-and-threshold method (O(K log K)).
* :func:`solve_row_qp` -- minimizer of a strictly convex quadratic
  ``1/2 u' H u - c' u`` over the simplex via projected gradient with fixed
  step 1/L; this is the per-row subproblem of the assignment update.
* :func:`nnls` -- nonnegative least squares ``argmin_{m>=0} ||A m - b||``
  by the Lawson-Hanson active-set method (exact termination), with a ridge
  fallback for degenerate normal equations.

All functions are pure and re-entrant; callers may run rows or columns in
parallel and results do not depend on the schedule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceWarning,
    DimensionError,
    NumericalError,
    RidgeFallbackWarning,
    ValidationError,
)

RIDGE_DELTA = 1e-10


def _project_rows(y: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean projection onto the simplex (no input validation)."""
    k = y.shape[1]
    s = -np.sort(-y, axis=1)
    css = np.cumsum(s, axis=1) - 1.0
    idx = np.arange(1, k + 1, dtype=np.float64)
    cond = s - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(y.shape[0]), rho] / (rho + 1.0)
    out = np.maximum(y - tau[:, None], 0.0)
    out /= out.sum(axis=1, keepdims=True)
    return out


def project_simplex(y) -> np.ndarray:
    """Project ``y`` onto ``{u : u >= 0, sum(u) = 1}``.

    Returns ``argmin_{u in simplex} ||u - y||^2``; the output satisfies the
    constraints exactly (the row sum is renormalized at the end).
    """
    v = np.asarray(y, dtype=np.float64).ravel()
    if v.size < 1:
        raise DimensionError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValidationError("cannot project a vector with non-finite entries")
    return _project_rows(v[None, :])[0]


def gershgorin_bound(h: np.ndarray) -> float:
    """Row-sum upper bound on the largest eigenvalue of a symmetric matrix."""
    return float(np.max(np.sum(np.abs(h), axis=1)))


@dataclass(frozen=True)
class RowQP:
    """Quadratic-minimization data for one assignment row.

    ``h`` is the K x K symmetric positive-definite Hessian
    (``2 * (sum_v w_v M_v M_v' + eta I)``) and ``c`` the linear term built
    from the data row.
    """

    h: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        c = np.asarray(self.c, dtype=np.float64).ravel()
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DimensionError(f"H must be square, got shape {h.shape}")
        if c.shape[0] != h.shape[0]:
            raise DimensionError(
                f"c has length {c.shape[0]}, H is {h.shape[0]} x {h.shape[0]}"
            )
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(c))):
            raise ValidationError("RowQP inputs must be finite")
        if np.max(np.abs(h - h.T)) > 1e-10 * max(1.0, np.max(np.abs(h))):
            raise ValidationError("H must be symmetric")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)

    @property
    def k(self) -> int:
        return self.h.shape[0]


def _pgd_rows(
    u0: np.ndarray,
    h: np.ndarray,
    c: np.ndarray,
    step: float,
    tol: float,
    max_inner: int,
) -> tuple:
    """Projected gradient on rows of ``u0``; each row minimizes its own QP.

    Returns ``(u, converged, n_iters)``.  The fixed-point residual
    ``||u - P(u - step * (u H - c))||`` is non-increasing along the iterates,
    so the returned iterate certifies the tolerance when ``converged``.
    """
    u = u0
    for it in range(max_inner):
        grad = u @ h - c
        u_next = _project_rows(u - step * grad)
        res = np.max(np.sqrt(np.sum((u_next - u) ** 2, axis=1)))
        u = u_next
        if res <= tol:
            return u, True, it + 1
    return u, False, max_inner


def solve_row_qp(qp: RowQP, u0, tol: float = 1e-10, max_inner: int = 100_000) -> np.ndarray:
    """Minimize ``1/2 u' H u - c' u`` over the probability simplex.

    ``u0`` must lie on the simplex; the objective never increases relative to
    ``u0``.  Raises :class:`NumericalError` when ``H`` is not positive
    definite; warns (and returns the best iterate) when ``max_inner`` runs out
    before the projected-gradient fixed-point residual drops below ``tol``.
    """
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    try:
        np.linalg.cholesky(qp.h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("row QP Hessian is not positive definite") from exc
    start = np.asarray(u0, dtype=np.float64).ravel()
    if start.shape[0] != qp.k:
        raise DimensionError(f"u0 has length {start.shape[0]}, expected {qp.k}")
    if np.any(start < -1e-9) or abs(float(start.sum()) - 1.0) > 1e-6:
        raise ValidationError("u0 must lie on the probability simplex")
    start = _project_rows(start[None, :])
    lmax = float(np.linalg.eigvalsh(qp.h)[-1])
    step = 1.0 / max(lmax * (1.0 + 1e-12), np.finfo(float).tiny)
    u, converged, _ = _pgd_rows(start, qp.h, qp.c[None, :], step, tol, max_inner)
    if not converged:
        warnings.warn(
            f"row QP unconverged after {max_inner} projected-gradient steps",
            ConvergenceWarning,
            stacklevel=2,
        )
    return u[0]


def _ls_on_support(a: np.ndarray, b: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Least squares restricted to the support columns via normal equations;
    falls back to a ridge-regularized solve (flagged) when they are singular."""
    sub = a[:, support]
    g = sub.T @ sub
    try:
        cf = np.linalg.cholesky(g)
        y = np.linalg.solve(cf, sub.T @ b)
        return np.linalg.solve(cf.T, y)
    except np.linalg.LinAlgError:
        warnings.warn(
            f"nnls normal equations are rank-deficient; applying ridge fallback "
            f"(delta={RIDGE_DELTA})",
            RidgeFallbackWarning,
            stacklevel=3,
        )
        return np.linalg.solve(g + RIDGE_DELTA * np.eye(g.shape[0]), sub.T @ b)


def nnls(a, b, tol: float = 1e-10) -> np.ndarray:
    """Solve ``argmin_{m >= 0} ||A m - b||^2`` by Lawson-Hanson active sets.

    The KKT conditions hold within ``tol`` at the solution: ``m >= 0``,
    ``g = A'(A m - b) >= -tol`` and ``m * g <= tol`` element-wise.  Degenerate
    normal equations fall back to a ridge-regularized system (delta = 1e-10)
    and emit :class:`RidgeFallbackWarning`.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.ndim != 2:
        raise DimensionError(f"A must be 2-D, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"b has length {b.shape[0]}, A has {a.shape[0]} rows")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValidationError("nnls inputs must be finite")

    k = a.shape[1]
    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    scale = max(1.0, float(np.max(np.abs(a.T @ b), initial=0.0)))
    dual_tol = min(tol, 10.0 * np.finfo(float).eps * max(a.shape) * scale)
    budget = 200 * (k + 1)
    while budget > 0:
        budget -= 1
        w = a.T @ (b - a @ x)
        candidates = np.where(~passive, w, -np.inf)
        j = int(np.argmax(candidates))
        if candidates[j] <= dual_tol:
            break
        passive[j] = True
        while budget > 0:
            budget -= 1
            support = np.flatnonzero(passive)
            z = _ls_on_support(a, b, support)
            if np.all(z > 0):
                x[:] = 0.0
                x[support] = z
                break
            x_s = x[support]
            blocking = z <= 0
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = x_s[blocking] / (x_s[blocking] - z[blocking])
            ratios = np.nan_to_num(ratios, nan=0.0, posinf=0.0, neginf=0.0)
            alpha = float(np.min(ratios))
            x[support] = x_s + alpha * (z - x_s)
            drop = support[x[support] <= 1e-14]
            passive[drop] = False
            x[drop] = 0.0
    else:
        warnings.warn(
            "nnls hit its iteration budget before exact termination",
            ConvergenceWarning,
            stacklevel=2,
        )
    return x


def solve_ridge_normal(g: np.ndarray, rhs: np.ndarray, what: str = "system") -> np.ndarray:
    """Solve ``G x = rhs`` for symmetric PSD ``G``; ridge-fallback when singular."""
    try:
        cf = np.linalg.cholesky(g)
        y = np.linalg.solve(cf, rhs)
        return np.linalg.solve(cf.T, y)
    except np.linalg.LinAlgError:
        warnings.warn(
            f"singular {what}; applying ridge fallback (delta={RIDGE_DELTA})",
            RidgeFallbackWarning,
            stacklevel=2,
        )
        return np.linalg.solve(g + RIDGE_DELTA * np.eye(g.shape[0]), rhs)
