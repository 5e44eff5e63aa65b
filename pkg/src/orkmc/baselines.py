"""Comparison algorithms behind the same fit interface.

* :func:`kmeans_fit` -- Lloyd iterations on the column-concatenation of views.
* :func:`pkmeans_fit` -- power K-means: majorization-minimization on the
  power-mean objective with the power annealed toward hard assignments.
* :func:`ogd_fit` -- online gradient-descent K-means (per-arrival nearest
  center, count-decayed steps).
* :func:`omu_fit` -- online multiplicative-update NMF clustering with
  streaming sufficient statistics.

Each returns a :class:`~orkmc.model.ClusterResult` that passes
:func:`~orkmc.model.validate`.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import metrics
from ._util import rng_for, select_initial_rows
from .errors import ConfigError, DataWarning
from .model import (
    AssignmentMatrix,
    CenterSet,
    ClusterResult,
    MultiViewDataset,
    ViewWeights,
)

MU_DELTA = 1e-12
ZERO_DIST = 1e-30


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (
        (x * x).sum(axis=1)[:, None]
        - 2.0 * x @ centers.T
        + (centers * centers).sum(axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def nearest_center_labels(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of each row's nearest center (lowest index on ties)."""
    return np.argmin(_sq_dists(x, centers), axis=1)


def _one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    u = np.zeros((labels.shape[0], k))
    u[np.arange(labels.shape[0]), labels] = 1.0
    return u


def _split_centers(centers: np.ndarray, data: MultiViewDataset, nonneg: bool = False) -> CenterSet:
    parts = np.split(centers, np.cumsum(data.feature_counts)[:-1], axis=1)
    return CenterSet(tuple(np.ascontiguousarray(p) for p in parts), nonneg_enforced=nonneg)


def _result(data, labels, u, centers, trace, elapsed, algorithm, extra=None) -> ClusterResult:
    score = None
    if data.labels is not None:
        score = metrics.nmi(labels, data.labels)
    meta = {"algorithm": algorithm}
    if extra:
        meta.update(extra)
    return ClusterResult(
        assignment=AssignmentMatrix(u, labels),
        centers=centers,
        weights=ViewWeights.uniform(data.n_views),
        objective_trace=tuple(trace),
        elapsed_seconds=elapsed,
        nmi=score,
        metadata=meta,
    )


def kmeans_fit(
    data: MultiViewDataset,
    k: int,
    max_iter: int = 100,
    epsilon: float = 1e-6,
    seed: int = 0,
) -> ClusterResult:
    """Lloyd K-means on the stacked views; hard one-hot assignments.

    Stops on a label fixpoint, a center change of at most ``epsilon``, or
    ``max_iter``.  Empty clusters are re-seeded at the point farthest from its
    assigned center, which only lowers the within-cluster SSE.
    """
    if k > data.n_samples:
        raise ConfigError(f"k={k} exceeds the number of samples ({data.n_samples})")
    x = data.stacked()
    t0 = time.perf_counter()
    centers = x[select_initial_rows(x, k, seed, "kmeans-init")].copy()
    labels = None
    trace: list[float] = []
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        new_labels = np.argmin(d, axis=1)
        own = d[np.arange(x.shape[0]), new_labels]
        reseeded = False
        for empty in np.flatnonzero(np.bincount(new_labels, minlength=k) == 0):
            far = int(np.argmax(own))
            centers[empty] = x[far]
            new_labels[far] = empty
            own[far] = 0.0
            reseeded = True
        fixpoint = labels is not None and np.array_equal(new_labels, labels) and not reseeded
        labels = new_labels
        new_centers = centers.copy()
        for kk in range(k):
            mask = labels == kk
            if mask.any():
                new_centers[kk] = x[mask].mean(axis=0)
        trace.append(float(np.sum((x - new_centers[labels]) ** 2)))
        delta = float(np.linalg.norm(new_centers - centers))
        centers = new_centers
        if fixpoint or delta <= epsilon:
            break
    elapsed = time.perf_counter() - t0
    return _result(
        data, labels, _one_hot(labels, k), _split_centers(centers, data),
        trace, elapsed, "kmeans",
    )


@dataclass(frozen=True)
class PowerSchedule:
    """Annealing schedule of the power parameter: |s| grows by ``step_factor``
    each iteration from ``s0`` (< 0) down to the floor ``s_min``."""

    s0: float = -1.0
    step_factor: float = 1.1
    s_min: float = -100.0

    def __post_init__(self):
        if not self.s0 < 0:
            raise ConfigError(f"s0 must be < 0, got {self.s0}")
        if not self.step_factor > 1:
            raise ConfigError(f"step_factor must be > 1, got {self.step_factor}")
        if not self.s_min <= self.s0:
            raise ConfigError("s_min must be <= s0")


def _log_power_mean(d: np.ndarray, s: float) -> np.ndarray:
    """Row-wise log of the power mean M_s of squared distances (s < 0).

    Rows containing a zero distance get ``-inf`` (the limit of M_s is 0).
    """
    k = d.shape[1]
    out = np.full(d.shape[0], -np.inf)
    ok = d.min(axis=1) > ZERO_DIST
    if np.any(ok):
        ld = np.log(d[ok])
        z = s * ld
        m = z.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
        out[ok] = (lse - np.log(k)) / s
    return out


def power_mean_objective(x: np.ndarray, centers: np.ndarray, s: float) -> float:
    """Sum over samples of the power mean of squared center distances."""
    lpm = _log_power_mean(_sq_dists(x, centers), s)
    vals = np.exp(lpm[np.isfinite(lpm)])
    return float(vals.sum())


def _power_weights(d: np.ndarray, s: float) -> np.ndarray:
    """Majorizer coefficients d_ik^(s-1) * M_s(d_i)^(1-s); zero-distance rows
    collapse their mass onto the touching cluster."""
    w = np.zeros_like(d)
    zero_rows = d.min(axis=1) <= ZERO_DIST
    if np.any(zero_rows):
        w[zero_rows, np.argmin(d[zero_rows], axis=1)] = 1.0
    ok = ~zero_rows
    if np.any(ok):
        ld = np.log(d[ok])
        lpm = _log_power_mean(d[ok], s)
        w[ok] = np.exp((s - 1.0) * (ld - lpm[:, None]))
    return w


def power_mm_step(x: np.ndarray, centers: np.ndarray, s: float) -> np.ndarray:
    """One majorization-minimization step at fixed ``s``: centers move to the
    coefficient-weighted means.  The power-mean objective never increases."""
    w = _power_weights(_sq_dists(x, centers), s)
    wsum = w.sum(axis=0)
    out = centers.copy()
    live = wsum > 0
    out[live] = (w.T[live] @ x) / wsum[live, None]
    return out


def pkmeans_fit(
    data: MultiViewDataset,
    k: int,
    schedule: Optional[PowerSchedule] = None,
    max_iter: int = 100,
    seed: int = 0,
) -> ClusterResult:
    """Power K-means (single view): anneal ``s`` toward ``s_min`` while running
    MM steps; as ``s`` grows negative the assignments approach nearest-center."""
    if data.n_views != 1:
        raise ConfigError("power K-means is a single-view algorithm")
    if k > data.n_samples:
        raise ConfigError(f"k={k} exceeds the number of samples ({data.n_samples})")
    schedule = schedule or PowerSchedule()
    x = data.views[0]
    t0 = time.perf_counter()
    centers = x[select_initial_rows(x, k, seed, "pkmeans-init")].copy()
    s = schedule.s0
    trace: list[float] = []
    for _ in range(max_iter):
        new_centers = power_mm_step(x, centers, s)
        trace.append(power_mean_objective(x, new_centers, s))
        delta = float(np.linalg.norm(new_centers - centers))
        centers = new_centers
        if delta <= 1e-8 and s == schedule.s_min:
            break
        s = max(schedule.s_min, s * schedule.step_factor)
    elapsed = time.perf_counter() - t0
    labels = nearest_center_labels(x, centers)
    return _result(
        data, labels, _one_hot(labels, k), _split_centers(centers, data),
        trace, elapsed, "pkmeans", {"final_s": s},
    )


def ogd_fit(
    data: MultiViewDataset,
    k: int,
    gamma_schedule: Optional[Callable[[int], float]] = None,
    chushi: Optional[int] = None,
    seed: int = 0,
) -> ClusterResult:
    """Online gradient-descent K-means (single view).

    K centers are seeded from the first ``chushi`` rows; every other row
    arrives in order, is labeled by its nearest center, and moves that center
    by ``gamma_t * (x - center)`` with ``gamma_t = 1 / (n_k + 1)`` by default.
    """
    if data.n_views != 1:
        raise ConfigError("online gradient descent is a single-view algorithm")
    x = data.views[0]
    n = x.shape[0]
    chushi = k if chushi is None else chushi
    if not k <= chushi <= n:
        raise ConfigError(f"need k <= chushi <= n, got k={k}, chushi={chushi}, n={n}")
    if gamma_schedule is None:
        gamma_schedule = lambda n_k: 1.0 / (n_k + 1.0)
    t0 = time.perf_counter()
    seeds = select_initial_rows(x[:chushi], k, seed, "ogd-init")
    centers = x[seeds].copy()
    counts = np.ones(k)
    labels = np.zeros(n, dtype=np.intp)
    labels[seeds] = np.arange(k)
    seed_mask = np.zeros(n, dtype=bool)
    seed_mask[seeds] = True
    cum = 0.0
    trace: list[float] = []
    for i in range(n):
        if seed_mask[i]:
            continue
        d = ((centers - x[i]) ** 2).sum(axis=1)
        k_star = int(np.argmin(d))
        labels[i] = k_star
        cum += float(d[k_star])
        trace.append(cum)
        centers[k_star] += gamma_schedule(counts[k_star]) * (x[i] - centers[k_star])
        counts[k_star] += 1.0
    elapsed = time.perf_counter() - t0
    return _result(
        data, labels, _one_hot(labels, k), _split_centers(centers, data),
        trace, elapsed, "ogd",
    )


def mu_update_rows(u: np.ndarray, views, center_mats, delta: float = MU_DELTA) -> np.ndarray:
    """Multiplicative update of assignment rows for the joint reconstruction
    error over views; preserves nonnegativity."""
    numer = np.zeros_like(u)
    gram = np.zeros((u.shape[1], u.shape[1]))
    for x, m in zip(views, center_mats):
        numer += x @ m.T
        gram += m @ m.T
    return u * numer / (u @ gram + delta)


def mu_update_centers(m: np.ndarray, utx: np.ndarray, utu: np.ndarray, delta: float = MU_DELTA) -> np.ndarray:
    """Multiplicative update of one view's centers from (accumulated)
    sufficient statistics U'X and U'U; preserves nonnegativity."""
    return m * utx / (utu @ m + delta)


def _normalize_rows(u: np.ndarray) -> np.ndarray:
    sums = u.sum(axis=1, keepdims=True)
    out = np.where(sums > 0, u / np.where(sums > 0, sums, 1.0), 1.0 / u.shape[1])
    return out


def omu_fit(
    data: MultiViewDataset,
    k: int,
    chushi: Optional[int] = None,
    max_iter: int = 50,
    seed: int = 0,
) -> ClusterResult:
    """Online multiplicative-update NMF clustering.

    Negative inputs are min-shifted per view (flagged).  The first ``chushi``
    rows are fitted as a batch with alternating multiplicative updates; each
    later arrival gets its own row updates against the current centers, and the
    centers follow via streaming U'X / U'U accumulators.  Assignment rows are
    renormalized to the simplex when the result is assembled, keeping the
    batch iterations on the plain multiplicative descent path.
    """
    if k > data.n_samples:
        raise ConfigError(f"k={k} exceeds the number of samples ({data.n_samples})")
    n = data.n_samples
    chushi = n if chushi is None else chushi
    if not k <= chushi <= n:
        raise ConfigError(f"need k <= chushi <= n, got k={k}, chushi={chushi}, n={n}")

    shifts = []
    views = []
    for v, x in enumerate(data.views):
        lo = float(x.min())
        if lo < 0:
            warnings.warn(
                f"view {v} has negative entries; min-shifting by {-lo:g} for the "
                "multiplicative updates",
                DataWarning,
                stacklevel=2,
            )
            views.append(x - lo)
            shifts.append(-lo)
        else:
            views.append(x)
            shifts.append(0.0)

    t0 = time.perf_counter()
    rng = rng_for(seed, "omu-init")
    u_batch = rng.uniform(0.1, 1.0, size=(chushi, k))
    center_mats = []
    for x in views:
        avg = np.sqrt(max(float(x.mean()), 0.0) / k)
        center_mats.append(avg * np.abs(rng.standard_normal((k, x.shape[1]))) + 1e-9)

    batch_views = [x[:chushi] for x in views]
    trace: list[float] = []
    for _ in range(max_iter):
        u_batch = mu_update_rows(u_batch, batch_views, center_mats)
        for v, x in enumerate(batch_views):
            center_mats[v] = mu_update_centers(
                center_mats[v], u_batch.T @ x, u_batch.T @ u_batch
            )
        err = sum(
            float(np.sum((x - u_batch @ m) ** 2))
            for x, m in zip(batch_views, center_mats)
        )
        trace.append(err)

    rows = [_normalize_rows(u_batch)]
    u_norm = rows[0]
    suu = u_norm.T @ u_norm
    sxv = [u_norm.T @ x for x in batch_views]
    inner = max(1, min(10, max_iter))
    for i in range(chushi, n):
        xs = [x[i] for x in views]
        u = np.full(k, 1.0 / k)
        for _ in range(inner):
            u = mu_update_rows(u[None, :], [x[None, :] for x in xs], center_mats)[0]
        u = _normalize_rows(u[None, :])[0]
        suu += np.outer(u, u)
        for v, x in enumerate(xs):
            sxv[v] += np.outer(u, x)
            center_mats[v] = mu_update_centers(center_mats[v], sxv[v], suu)
        rows.append(u[None, :])
    elapsed = time.perf_counter() - t0

    u_all = np.vstack(rows)
    labels = np.argmax(u_all, axis=1)
    centers = CenterSet(tuple(center_mats), nonneg_enforced=True)
    return _result(
        data, labels, u_all, centers, trace, elapsed, "omu",
        {"min_shift": shifts, "chushi": int(chushi)},
    )
