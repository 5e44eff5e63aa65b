"""Online regularized K-means for streaming multi-view data.

The solver warm-starts on an initial batch of ``chushi`` samples, then
consumes arrivals one at a time: the new sample's assignment row is obtained
by a few projected-gradient steps on its simplex-constrained QP, the winning
cluster's centers move by a counts-weighted running mean, and the view weights
are refreshed from the cumulative per-view residuals.  Per-arrival work is
O(n_grad * K * sum(J_v)) and the state holds only sufficient statistics plus
the rows emitted so far.

An :class:`OnlineState` is single-writer: steps mutate it sequentially in
arrival order.  Distinct states may run in parallel.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import metrics
from ._util import select_initial_rows
from .errors import ConfigError, ValidationError
from .kernels import _pgd_rows, gershgorin_bound
from .model import (
    AssignmentMatrix,
    CenterSet,
    ClusterResult,
    HyperParams,
    MultiViewDataset,
    ViewWeights,
)

DEFAULT_N_GRAD = 10


def _resolve_n_grad(hyper: HyperParams, n_grad: Optional[int]) -> int:
    if n_grad is None:
        return min(DEFAULT_N_GRAD, hyper.max_iter)
    if n_grad < 1:
        raise ConfigError(f"n_grad must be >= 1, got {n_grad}")
    return n_grad


def weights_from_residuals(d: np.ndarray, r: float) -> np.ndarray:
    """Stationary view weights of the r-weighted residual sum on the simplex.

    ``alpha_v propto D_v ** (1/(1-r))`` for ``r != 1`` (computed in log space);
    ``r = 1`` gives uniform weights; views with zero residual split the whole
    weight among themselves.
    """
    d = np.asarray(d, dtype=np.float64)
    v = d.shape[0]
    if v == 1:
        return np.ones(1)
    if r == 1.0:
        return np.full(v, 1.0 / v)
    zero = d <= 0.0
    if np.any(zero):
        return zero.astype(np.float64) / zero.sum()
    log_a = np.log(d) / (1.0 - r)
    log_a -= log_a.max()
    a = np.exp(log_a)
    return a / a.sum()


def _project_vec(y: np.ndarray, idx: np.ndarray) -> np.ndarray:
    s = np.sort(y)[::-1]
    css = np.cumsum(s) - 1.0
    rho = np.nonzero(s - css / idx > 0)[0][-1]
    out = np.maximum(y - css[rho] / (rho + 1.0), 0.0)
    out /= out.sum()
    return out


@dataclass
class OnlineState:
    """Streaming solver state; ``t`` arrivals processed so far."""

    hyper: HyperParams
    t: int
    U_rows: list
    centers: CenterSet
    weights: ViewWeights
    counts: np.ndarray
    resid_sums: np.ndarray
    u_sq_sum: float
    n_grad: int
    frozen: bool = False
    stats: dict = field(default_factory=lambda: {"steps": 0, "grad_steps": 0, "rows_touched": 0})

    def surrogate_objective(self) -> float:
        """Cumulative weighted at-assignment residual plus the regularizer.

        Tracked incrementally so reporting stays O(V) per chunk regardless of
        how many samples have streamed past.
        """
        a = self.weights.alpha ** self.weights.r
        return float(a @ self.resid_sums + self.hyper.eta * self.u_sq_sum)


def _step_matrices(state: OnlineState):
    a = state.weights.alpha ** state.weights.r
    k = state.hyper.k
    b = np.zeros((k, k))
    for av, mv in zip(a, state.centers.centers):
        b += av * (mv @ mv.T)
    h = 2.0 * (b + state.hyper.eta * np.eye(k))
    return a, b, h


def orkmc_init(
    data_prefix: MultiViewDataset,
    hyper: HyperParams,
    n_grad: Optional[int] = None,
    enforce_center_nonneg: Optional[bool] = None,
) -> OnlineState:
    """Warm-start on the initial batch.

    Centers are seeded from K distinct prefix rows, the view weights start
    uniform at 1/V, and every prefix row receives the same projected-gradient
    assignment update (from the uniform row) that streamed arrivals get.
    """
    k = hyper.k
    t0 = data_prefix.n_samples
    if t0 < k:
        raise ConfigError(f"initial batch has {t0} rows; need chushi >= k ({k})")
    if hyper.chushi is not None and hyper.chushi != t0:
        raise ConfigError(
            f"prefix has {t0} rows but chushi={hyper.chushi}"
        )
    n_grad = _resolve_n_grad(hyper, n_grad)
    nonneg = (
        all(float(x.min()) >= 0.0 for x in data_prefix.views)
        if enforce_center_nonneg is None
        else enforce_center_nonneg
    )
    idx = select_initial_rows(data_prefix.stacked(), k, hyper.seed, "orkmc-init")
    centers = CenterSet(
        tuple(x[idx].copy() for x in data_prefix.views), nonneg_enforced=nonneg
    )
    weights = ViewWeights.uniform(data_prefix.n_views, r=hyper.r)
    state = OnlineState(
        hyper=hyper,
        t=0,
        U_rows=[],
        centers=centers,
        weights=weights,
        counts=np.zeros(k, dtype=np.int64),
        resid_sums=np.zeros(data_prefix.n_views),
        u_sq_sum=0.0,
        n_grad=n_grad,
    )

    # Warm-start loop on the batch: every prefix row gets the same
    # projected-gradient update (from the uniform row) that streamed arrivals
    # get, then the centers move to their assigned means -- so that the
    # per-arrival running-mean recurrence (step c of orkmc_step) stays exact:
    # a center with count n_k is the mean of the n_k samples assigned to it.
    u = np.full((t0, k), 1.0 / k)
    hard = np.zeros(t0, dtype=np.intp)
    for _ in range(hyper.max_iter):
        a, _, h = _step_matrices(state)
        c = np.zeros((t0, k))
        for av, x, mv in zip(a, data_prefix.views, centers.centers):
            c += 2.0 * av * (x @ mv.T)
        step = hyper.gamma
        if step is None:
            step = 1.0 / max(gershgorin_bound(h), np.finfo(float).tiny)
        u, _, _ = _pgd_rows(np.full((t0, k), 1.0 / k), h, c, step, 0.0, n_grad)
        hard = np.argmax(u, axis=1)
        drift = 0.0
        for kk in range(k):
            mask = hard == kk
            if mask.any():
                for x, mv in zip(data_prefix.views, centers.centers):
                    mean = x[mask].mean(axis=0)
                    if nonneg:
                        mean = np.maximum(mean, 0.0)
                    drift = max(drift, float(np.linalg.norm(mean - mv[kk])))
                    mv[kk] = mean
        if drift <= hyper.epsilon:
            break

    state.counts = np.bincount(hard, minlength=k).astype(np.int64)
    for v, (x, mv) in enumerate(zip(data_prefix.views, centers.centers)):
        resid = x - u @ mv
        state.resid_sums[v] = float(np.dot(resid.ravel(), resid.ravel()))
    state.u_sq_sum = float(np.dot(u.ravel(), u.ravel()))
    state.U_rows = [u[i] for i in range(t0)]
    state.t = t0
    return state


def orkmc_step(state: OnlineState, arrival: Sequence[np.ndarray]) -> OnlineState:
    """Process one arrival (one sample per view); mutates and returns ``state``.

    A non-finite arrival is rejected with :class:`ValidationError` before any
    mutation.  When the state is frozen (center drift fell below epsilon) the
    sample is still assigned and counted, but centers and weights stay fixed.
    """
    xs = [np.asarray(x, dtype=np.float64).ravel() for x in arrival]
    if len(xs) != state.centers.n_views:
        raise ValidationError(
            f"arrival has {len(xs)} views, state has {state.centers.n_views}"
        )
    for v, (x, mv) in enumerate(zip(xs, state.centers.centers)):
        if x.shape[0] != mv.shape[1]:
            raise ValidationError(
                f"arrival view {v} has {x.shape[0]} features, expected {mv.shape[1]}"
            )
        if not np.all(np.isfinite(x)):
            raise ValidationError(f"arrival view {v} has non-finite entries")

    hyper = state.hyper
    k = hyper.k
    a, b, h = _step_matrices(state)
    c = np.zeros(k)
    for av, x, mv in zip(a, xs, state.centers.centers):
        c += av * (mv @ x)
    step = hyper.gamma
    if step is None:
        step = 1.0 / max(gershgorin_bound(h), np.finfo(float).tiny)

    idx = np.arange(1.0, k + 1.0)
    u = np.full(k, 1.0 / k)
    eta = hyper.eta
    for _ in range(state.n_grad):
        g = 2.0 * (b @ u + eta * u - c)
        u = _project_vec(u - step * g, idx)

    k_star = int(np.argmax(u))
    state.counts[k_star] += 1
    for v, (x, mv) in enumerate(zip(xs, state.centers.centers)):
        resid = x - u @ mv
        state.resid_sums[v] += float(resid @ resid)
    if not state.frozen:
        for x, mv in zip(xs, state.centers.centers):
            mv[k_star] += (x - mv[k_star]) / state.counts[k_star]
            if state.centers.nonneg_enforced:
                np.maximum(mv[k_star], 0.0, out=mv[k_star])
        state.weights = ViewWeights(
            weights_from_residuals(state.resid_sums, hyper.r), hyper.r
        )
    state.u_sq_sum += float(u @ u)
    state.U_rows.append(u)
    state.t += 1
    state.stats["steps"] += 1
    state.stats["grad_steps"] += state.n_grad
    state.stats["rows_touched"] = 1
    return state


def orkmc_run(
    data: MultiViewDataset,
    hyper: HyperParams,
    chunk_size: int = 1,
    n_grad: Optional[int] = None,
    progress: Optional[Callable[[int, float, np.ndarray], None]] = None,
) -> ClusterResult:
    """Stream the dataset through the online solver in arrival order.

    Rows ``1..chushi`` form the warm-start batch; the rest arrive one by one
    (``chunk_size`` only groups steps for reporting).  After any chunk whose
    maximum view-center change is at most ``epsilon`` the centers and weights
    freeze and the remaining arrivals are assigned against them.  ``progress``
    is called as ``progress(t, objective, alpha)`` at the end of the warm start
    and of every chunk.
    """
    if chunk_size < 1:
        raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    if hyper.chushi is None:
        raise ConfigError("the online solver requires chushi (initial batch size)")
    n = data.n_samples
    if hyper.chushi > n:
        raise ConfigError(f"chushi={hyper.chushi} exceeds the sample count {n}")

    t_start = time.perf_counter()
    state = orkmc_init(data.take_rows(np.arange(hyper.chushi)), hyper, n_grad=n_grad)
    trace = [state.surrogate_objective()]
    if progress is not None:
        progress(state.t, trace[-1], state.weights.alpha.copy())

    frozen_at = None
    i = hyper.chushi
    while i < n:
        j = min(i + chunk_size, n)
        snapshot = None
        if not state.frozen:
            snapshot = [mv.copy() for mv in state.centers.centers]
        for row in range(i, j):
            orkmc_step(state, [x[row] for x in data.views])
        trace.append(state.surrogate_objective())
        if progress is not None:
            progress(state.t, trace[-1], state.weights.alpha.copy())
        if snapshot is not None:
            drift = max(
                float(np.linalg.norm(mv - s))
                for mv, s in zip(state.centers.centers, snapshot)
            )
            if drift <= hyper.epsilon:
                state.frozen = True
                frozen_at = state.t
        i = j
    elapsed = time.perf_counter() - t_start

    u = np.array(state.U_rows) if state.U_rows else np.zeros((0, hyper.k))
    assignment = AssignmentMatrix(u)
    score = None
    if data.labels is not None:
        score = metrics.nmi(assignment.hard_labels, data.labels)
    return ClusterResult(
        assignment=assignment,
        centers=state.centers,
        weights=state.weights,
        objective_trace=tuple(trace),
        elapsed_seconds=elapsed,
        nmi=score,
        metadata={
            "algorithm": "orkmc",
            "hyper": hyper.as_dict(),
            "n_grad": state.n_grad,
            "chunk_size": int(chunk_size),
            "frozen_at": frozen_at,
            "counts": state.counts.tolist(),
        },
    )
