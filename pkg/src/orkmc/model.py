"""Core data types, objective evaluations and invariant checks.

The solvers all speak in terms of these types:

* :class:`MultiViewDataset` -- V aligned per-view sample matrices (one row per
  sample in every view) plus optional ground-truth labels.
* :class:`AssignmentMatrix` -- the N x K row-stochastic soft-assignment matrix
  with derived hard labels (row argmax, lowest index on ties).
* :class:`CenterSet` -- per-view K x J_v center matrices.
* :class:`ViewWeights` -- simplex-constrained view weights with balance exponent.
* :class:`ClusterResult` -- everything a fit returns.

``MultiViewDataset`` validates eagerly (bad data should fail at the door);
the result-side types are cheap containers whose numeric invariants are checked
by :func:`validate`, which reports violations instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, ValidationError

ROW_SUM_TOL = 1e-9
ROW_NONNEG_TOL = -1e-12


def _as_matrix(a, what: str) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{what} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{what} must be nonempty, got shape {m.shape}")
    return np.ascontiguousarray(m)


@dataclass(frozen=True)
class MultiViewDataset:
    """V aligned sample matrices; view v has shape (N, J_v)."""

    views: tuple
    labels: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        if len(self.views) < 1:
            raise DimensionError("dataset needs at least one view")
        views = tuple(_as_matrix(v, f"view {i}") for i, v in enumerate(self.views))
        n = views[0].shape[0]
        for i, v in enumerate(views):
            if v.shape[0] != n:
                raise DimensionError(
                    f"view {i} has {v.shape[0]} rows, expected {n} (all views share samples)"
                )
            if not np.all(np.isfinite(v)):
                bad = np.argwhere(~np.isfinite(v))[0]
                raise ValidationError(
                    f"view {i} has a non-finite entry at row {bad[0]}, column {bad[1]}"
                )
        object.__setattr__(self, "views", views)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1:
                raise DimensionError("labels must be a 1-D sequence")
            if labels.shape[0] != n:
                raise ValidationError(
                    f"labels have length {labels.shape[0]}, expected {n}"
                )
            object.__setattr__(self, "labels", labels.copy())

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def feature_counts(self) -> tuple:
        return tuple(v.shape[1] for v in self.views)

    def stacked(self) -> np.ndarray:
        """Column-concatenation of all views (N x sum(J_v))."""
        return np.hstack(self.views)

    def take_rows(self, idx) -> "MultiViewDataset":
        idx = np.asarray(idx)
        return MultiViewDataset(
            views=tuple(v[idx] for v in self.views),
            labels=None if self.labels is None else self.labels[idx],
            name=self.name,
        )

    def single_view(self, v: int) -> "MultiViewDataset":
        return MultiViewDataset(views=(self.views[v],), labels=self.labels, name=self.name)


def hard_labels_of(u: np.ndarray) -> np.ndarray:
    """Row argmax with lowest-index tie-break."""
    return np.argmax(u, axis=1)


@dataclass(frozen=True)
class AssignmentMatrix:
    """N x K nonnegative soft assignments; rows sum to one."""

    entries: np.ndarray
    hard_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        u = _as_matrix(self.entries, "assignment matrix")
        object.__setattr__(self, "entries", u)
        if self.hard_labels is None:
            object.__setattr__(self, "hard_labels", hard_labels_of(u))
        else:
            h = np.asarray(self.hard_labels, dtype=np.intp)
            if h.shape != (u.shape[0],):
                raise DimensionError("hard_labels length must equal the row count")
            object.__setattr__(self, "hard_labels", h)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class CenterSet:
    """Per-view K x J_v center matrices."""

    centers: tuple
    nonneg_enforced: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "centers", tuple(_as_matrix(m, f"center matrix {v}") for v, m in enumerate(self.centers))
        )

    @property
    def k(self) -> int:
        return self.centers[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.centers)

    def copy(self) -> "CenterSet":
        return CenterSet(tuple(m.copy() for m in self.centers), self.nonneg_enforced)


@dataclass(frozen=True)
class ViewWeights:
    """Simplex vector alpha of per-view weights with balance exponent r."""

    alpha: np.ndarray
    r: float = 0.5

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64).ravel()
        object.__setattr__(self, "alpha", a)

    @property
    def n_views(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def uniform(cls, n_views: int, r: float = 0.5) -> "ViewWeights":
        return cls(np.full(n_views, 1.0 / n_views), r)


@dataclass(frozen=True)
class HyperParams:
    """Solver hyperparameters, named after the original interface.

    ``gamma=None`` selects an automatic per-row step length (the inverse of a
    Gershgorin bound on the row Hessian); an explicit positive value is used
    verbatim.  ``chushi`` is the initial batch size and only meaningful for the
    online solvers.
    """

    k: int
    eta: float = 1.0
    r: float = 0.5
    gamma: Optional[float] = None
    epsilon: float = 1e-4
    max_iter: int = 100
    chushi: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 1):
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}")
        if not (np.isfinite(self.eta) and self.eta >= 0):
            raise ConfigError(f"eta must be >= 0, got {self.eta!r}")
        if not (np.isfinite(self.r) and self.r > 0):
            raise ConfigError(f"r must be > 0, got {self.r!r}")
        if self.gamma is not None and not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigError(f"gamma must be > 0 (or None for automatic), got {self.gamma!r}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not (isinstance(self.max_iter, (int, np.integer)) and self.max_iter >= 1):
            raise ConfigError(f"max_iter must be an integer >= 1, got {self.max_iter!r}")
        if self.chushi is not None:
            if not (isinstance(self.chushi, (int, np.integer)) and self.chushi >= 1):
                raise ConfigError(f"chushi must be an integer >= 1, got {self.chushi!r}")
            if self.chushi < self.k:
                raise ConfigError(
                    f"chushi must be >= k (need at least k points to seed k centers), "
                    f"got chushi={self.chushi}, k={self.k}"
                )
        if not (isinstance(self.seed, (int, np.integer)) and self.seed >= 0):
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")

    def as_dict(self) -> dict:
        return {
            "k": int(self.k),
            "eta": float(self.eta),
            "r": float(self.r),
            "gamma": None if self.gamma is None else float(self.gamma),
            "epsilon": float(self.epsilon),
            "max_iter": int(self.max_iter),
            "chushi": None if self.chushi is None else int(self.chushi),
            "seed": int(self.seed),
        }


@dataclass(frozen=True)
class ClusterResult:
    """Everything a fit returns; see :func:`validate` for the invariants."""

    assignment: AssignmentMatrix
    centers: CenterSet
    weights: ViewWeights
    objective_trace: tuple = ()
    elapsed_seconds: float = 0.0
    nmi: Optional[float] = None
    metadata: dict = field(default_factory=dict)


def _conforming(data: MultiViewDataset, u: np.ndarray, centers: Sequence[np.ndarray]) -> None:
    if len(centers) != data.n_views:
        raise DimensionError(
            f"{len(centers)} center matrices for {data.n_views} views"
        )
    n, k = u.shape
    if n != data.n_samples:
        raise DimensionError(f"assignment has {n} rows, dataset has {data.n_samples}")
    for v, m in enumerate(centers):
        if m.shape != (k, data.views[v].shape[1]):
            raise DimensionError(
                f"center matrix {v} has shape {m.shape}, expected {(k, data.views[v].shape[1])}"
            )
    if not np.all(np.isfinite(u)):
        raise ValidationError("assignment matrix has non-finite entries")
    for v, m in enumerate(centers):
        if not np.all(np.isfinite(m)):
            raise ValidationError(f"center matrix {v} has non-finite entries")


def objective_rkmc(
    data: MultiViewDataset, u: AssignmentMatrix, m: CenterSet, eta: float
) -> float:
    """Squared reconstruction error summed over views plus ``eta * sum(U**2)``."""
    uu = u.entries if isinstance(u, AssignmentMatrix) else np.asarray(u, dtype=np.float64)
    cents = m.centers if isinstance(m, CenterSet) else tuple(m)
    _conforming(data, uu, cents)
    total = 0.0
    for x, mv in zip(data.views, cents):
        resid = x - uu @ mv
        total += float(np.dot(resid.ravel(), resid.ravel()))
    total += float(eta) * float(np.dot(uu.ravel(), uu.ravel()))
    return total


def objective_online(
    data_prefix: MultiViewDataset,
    u: AssignmentMatrix,
    m: CenterSet,
    w: ViewWeights,
    eta: float,
) -> float:
    """View-weighted reconstruction error over the processed prefix plus the
    same quadratic regularizer; reduces to :func:`objective_rkmc` when V = 1
    and alpha = [1]."""
    uu = u.entries if isinstance(u, AssignmentMatrix) else np.asarray(u, dtype=np.float64)
    cents = m.centers if isinstance(m, CenterSet) else tuple(m)
    _conforming(data_prefix, uu, cents)
    if w.n_views != data_prefix.n_views:
        raise DimensionError(
            f"{w.n_views} weights for {data_prefix.n_views} views"
        )
    total = 0.0
    for alpha_v, x, mv in zip(w.alpha, data_prefix.views, cents):
        resid = x - uu @ mv
        total += float(alpha_v) ** float(w.r) * float(np.dot(resid.ravel(), resid.ravel()))
    total += float(eta) * float(np.dot(uu.ravel(), uu.ravel()))
    return total


def _check_assignment(u: AssignmentMatrix, out: list) -> None:
    entries = u.entries
    for i, k in np.argwhere(entries < ROW_NONNEG_TOL):
        out.append(("row-nonneg", (int(i), int(k))))
    sums = entries.sum(axis=1)
    for i in np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL):
        out.append(("row-sum", int(i)))
    derived = hard_labels_of(entries)
    for i in np.flatnonzero(derived != np.asarray(u.hard_labels)):
        out.append(("hard-labels", int(i)))


def _check_centers(c: CenterSet, out: list) -> None:
    k = c.centers[0].shape[0]
    for v, m in enumerate(c.centers):
        if m.shape[0] != k:
            out.append(("center-k", int(v)))
        for idx in np.argwhere(~np.isfinite(m)):
            out.append(("center-finite", (int(v), int(idx[0]), int(idx[1]))))
        if c.nonneg_enforced:
            for idx in np.argwhere(m < 0):
                out.append(("center-nonneg", (int(v), int(idx[0]), int(idx[1]))))


def _check_weights(w: ViewWeights, out: list) -> None:
    for v in np.flatnonzero(w.alpha < ROW_NONNEG_TOL):
        out.append(("weight-nonneg", int(v)))
    if abs(float(w.alpha.sum()) - 1.0) > ROW_SUM_TOL:
        out.append(("weight-sum", None))
    if w.n_views == 1 and abs(float(w.alpha[0]) - 1.0) > ROW_SUM_TOL:
        out.append(("weight-single-view", None))


def validate(obj) -> list:
    """Check every invariant of a :class:`ClusterResult` (or of an online
    solver state) and return ``(invariant-name, offending-index)`` pairs.

    Reports instead of raising; an empty list means the object is well formed.
    """
    out: list = []
    if hasattr(obj, "U_rows"):  # online state (duck-typed to avoid an import cycle)
        if len(obj.U_rows) != obj.t:
            out.append(("t-count", None))
        counts = np.asarray(obj.counts)
        if counts.sum() != obj.t:
            out.append(("counts-sum", None))
        for k in np.flatnonzero(counts < 0):
            out.append(("counts-nonneg", int(k)))
        _check_centers(obj.centers, out)
        _check_weights(obj.weights, out)
        for i, row in enumerate(obj.U_rows):
            row = np.asarray(row)
            if np.any(row < ROW_NONNEG_TOL) or abs(float(row.sum()) - 1.0) > ROW_SUM_TOL:
                out.append(("row-sum", int(i)))
        return out

    _check_assignment(obj.assignment, out)
    _check_centers(obj.centers, out)
    _check_weights(obj.weights, out)
    if obj.assignment.k != obj.centers.k:
        out.append(("shape", None))
    if obj.weights.n_views != obj.centers.n_views:
        out.append(("weight-length", None))
    if obj.elapsed_seconds < 0:
        out.append(("elapsed", None))
    if obj.nmi is not None and not (0.0 <= obj.nmi <= 1.0):
        out.append(("nmi-range", None))
    if obj.metadata.get("algorithm") == "rkmc":
        skip = set(obj.metadata.get("reseed_steps", ()))
        trace = obj.objective_trace
        for i in range(1, len(trace)):
            if i in skip:
                continue
            if trace[i] > trace[i - 1] + 1e-9:
                out.append(("objective-trace", int(i)))
    return out
