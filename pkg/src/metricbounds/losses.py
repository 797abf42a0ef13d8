"""Distance-based losses on pairs and triplets.

Both losses are clipped to ``[0, 1]`` and are ``lam``-Lipschitz in the
distance argument.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InputError
from .metric import as_matrix


@dataclass(frozen=True)
class LossSpec:
    """Parameters of the clipped pairwise hinge.

    Attributes
    ----------
    lam : float
        Penalty slope; the loss is ``lam``-Lipschitz.
    U : float
        Same-class pairs are penalised once their distance exceeds ``U``.
    L : float
        Different-class pairs are penalised while closer than ``L``.
    """

    lam: float = 1.0
    U: float = 0.0
    L: float = 1.0

    def __post_init__(self):
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise InputError(f"lam must be finite and >= 0, got {self.lam}")
        if not (0 <= self.U < self.L):
            raise InputError(f"need 0 <= U < L, got U={self.U}, L={self.L}")


def _label_array(y, m, name):
    y = np.asarray(y)
    if y.shape != (m,):
        raise DimensionError(f"{name} must have shape ({m},), got {y.shape}")
    return y


@dataclass(frozen=True)
class PairedSample:
    """``m`` labelled pairs, stored as indices into a shared point array.

    Sharing ``points`` keeps the gradient cost tied to the number of distinct
    observations rather than the number of pairs.  Use :meth:`from_arrays`
    to build one from explicit ``(x1, y1, x2, y2)`` columns.
    """

    points: np.ndarray
    first: np.ndarray
    second: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim != 2:
            raise DimensionError("points must be a 2-d array")
        if not np.all(np.isfinite(X)):
            raise InputError("points must be finite")
        i = np.asarray(self.first, dtype=np.intp)
        j = np.asarray(self.second, dtype=np.intp)
        m = i.shape[0]
        if m < 1:
            raise InputError("a paired sample needs at least one pair")
        if j.shape != (m,) or i.ndim != 1:
            raise DimensionError("first and second must be equal-length 1-d")
        if i.min() < 0 or j.min() < 0 or max(i.max(), j.max()) >= len(X):
            raise InputError("pair index out of range")
        y1 = _label_array(self.y1, m, "y1")
        y2 = _label_array(self.y2, m, "y2")
        w = self.weights
        if w is not None:
            w = np.asarray(w, dtype=float)
            if w.shape != (m,) or np.any(w < 0) or w.sum() <= 0:
                raise InputError("weights must be non-negative with positive sum")
        for name, val in (("points", X), ("first", i), ("second", j),
                          ("y1", y1), ("y2", y2), ("weights", w)):
            object.__setattr__(self, name, val)

    @classmethod
    def from_arrays(cls, x1, y1, x2, y2, weights=None):
        x1 = np.atleast_2d(np.asarray(x1, dtype=float))
        x2 = np.atleast_2d(np.asarray(x2, dtype=float))
        if x1.shape != x2.shape:
            raise DimensionError(f"x1 {x1.shape} and x2 {x2.shape} differ")
        m = len(x1)
        idx = np.arange(m)
        return cls(np.vstack([x1, x2]), idx, idx + m,
                   np.asarray(y1).reshape(m), np.asarray(y2).reshape(m), weights)

    @property
    def m(self):
        return self.first.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def x1(self):
        return self.points[self.first]

    @property
    def x2(self):
        return self.points[self.second]

    @property
    def diffs(self):
        return self.points[self.first] - self.points[self.second]

    @property
    def same(self):
        """Pair agreement ``Y = 1[y1 == y2]`` as a bool array."""
        return self.y1 == self.y2

    def normalized_weights(self):
        if self.weights is None:
            return np.full(self.m, 1.0 / self.m)
        return self.weights / self.weights.sum()


@dataclass(frozen=True)
class TripletSample:
    """``m`` labelled triplets as indices into a shared point array."""

    points: np.ndarray
    first: np.ndarray
    second: np.ndarray
    third: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim != 2:
            raise DimensionError("points must be a 2-d array")
        idx = [np.asarray(a, dtype=np.intp) for a in (self.first, self.second, self.third)]
        m = idx[0].shape[0]
        if m < 1 or any(a.shape != (m,) for a in idx):
            raise DimensionError("triplet index arrays must be equal-length and non-empty")
        labels = np.asarray(self.labels)
        if labels.shape != (m, 3):
            raise DimensionError(f"labels must have shape ({m}, 3)")
        for name, val in zip(("points", "first", "second", "third", "labels"),
                             (X, *idx, labels)):
            object.__setattr__(self, name, val)

    @property
    def m(self):
        return self.first.shape[0]


def _out(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def pair_loss(spec, rho, Y):
    """Clipped hinge ``min(1, lam [rho - U]_+)`` if ``Y`` else ``min(1, lam [L - rho]_+)``.

    Vectorised over ``rho`` and ``Y``.
    """
    rho_a = np.asarray(rho, dtype=float)
    Y = np.asarray(Y, dtype=bool)
    same = np.minimum(1.0, spec.lam * np.maximum(0.0, rho_a - spec.U))
    diff = np.minimum(1.0, spec.lam * np.maximum(0.0, spec.L - rho_a))
    return _out(np.where(Y, same, diff))


def pair_loss_subgradient(spec, rho, Y):
    """A subgradient of :func:`pair_loss` in ``rho``.

    Nonzero only strictly inside the linear pieces: ``lam`` on
    ``U < rho < U + 1/lam`` for same-class pairs and ``-lam`` on
    ``L - 1/lam < rho < L`` otherwise.  Every kink returns 0.
    """
    rho_a = np.asarray(rho, dtype=float)
    Y = np.asarray(Y, dtype=bool)
    lam = spec.lam
    if lam == 0:
        return _out(np.zeros(np.broadcast(rho_a, Y).shape))
    width = 1.0 / lam
    up = (rho_a > spec.U) & (rho_a < spec.U + width)
    down = (rho_a > spec.L - width) & (rho_a < spec.L)
    g = np.where(Y, np.where(up, lam, 0.0), np.where(down, -lam, 0.0))
    return _out(g)


def triplet_loss(spec, rho12, rho13, labels):
    """``min(1, lam [rho12 - rho13]_+)`` when ``y1 == y2 != y3``, else 0.

    ``labels`` is a ``(y1, y2, y3)`` triple or an ``(m, 3)`` array.  No margin
    term; ``U`` and ``L`` are unused.
    """
    lab = np.asarray(labels)
    active = (lab[..., 0] == lab[..., 1]) & (lab[..., 1] != lab[..., 2])
    gap = np.asarray(rho12, dtype=float) - np.asarray(rho13, dtype=float)
    out = np.where(active, np.minimum(1.0, spec.lam * np.maximum(0.0, gap)), 0.0)
    return _out(out)


def pair_distances(M, S):
    """Squared distances ``rho_i`` of every pair in ``S`` under ``M``."""
    A = as_matrix(M)
    if A.shape != (S.dim, S.dim):
        raise DimensionError(f"metric {A.shape} vs sample dimension {S.dim}")
    Z = S.points @ A.T
    d = Z[S.first] - Z[S.second]
    return np.einsum("ij,ij->i", d, d)


def empirical_distance_error(M, S, spec):
    """Weighted mean pair loss of ``S`` under ``M``."""
    rho = pair_distances(M, S)
    return float(S.normalized_weights() @ pair_loss(spec, rho, S.same))


def empirical_triplet_error(M, T, spec):
    """Mean triplet loss of ``T`` under ``M``."""
    A = as_matrix(M)
    Z = T.points @ A.T
    d12 = Z[T.first] - Z[T.second]
    d13 = Z[T.first] - Z[T.third]
    r12 = np.einsum("ij,ij->i", d12, d12)
    r13 = np.einsum("ij,ij->i", d13, d13)
    return float(np.mean(triplet_loss(spec, r12, r13, T.labels)))
