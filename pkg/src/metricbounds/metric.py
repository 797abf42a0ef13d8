"""Weighting metrics and the linear algebra around them.

A metric here is the *linear* form ``M`` (a ``D x D`` matrix); distances are
``||M (x - x')||**2`` and the quadratic form ``M.T @ M`` is PSD by
construction.  Metrics are capped at spectral norm 1.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DimensionError, InputError

SPECTRAL_CAP_TOL = 1e-9


def _finite_square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    return A


@dataclass(frozen=True)
class Metric:
    """A ``D x D`` weighting matrix with ``sigma_max <= 1``.

    The stored array is a read-only copy.
    """

    matrix: np.ndarray

    def __post_init__(self):
        A = _finite_square(self.matrix).copy()
        if A.size and np.linalg.norm(A, 2) > 1.0 + SPECTRAL_CAP_TOL:
            raise InputError(
                f"spectral norm {np.linalg.norm(A, 2):.6g} exceeds 1; "
                "use spectral_project first")
        A.flags.writeable = False
        object.__setattr__(self, "matrix", A)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros((dim, dim)))

    def transform(self, X):
        """Map row-vector observations ``X`` to ``X @ M.T``."""
        return np.asarray(X, dtype=float) @ self.matrix.T

    def __eq__(self, other):
        if not isinstance(other, Metric):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    __hash__ = None


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(M):
    """Return the plain ndarray behind a :class:`Metric` or array-like."""
    if isinstance(M, Metric):
        return M.matrix
    return np.asarray(M, dtype=float)


def mahalanobis_sq(M, x, x2):
    """Squared weighted distance ``||M (x - x2)||**2``."""
    A = as_matrix(M)
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape or x.shape[-1:] != (A.shape[1],):
        raise DimensionError(
            f"metric is {A.shape}, points are {x.shape} and {x2.shape}")
    z = (x - x2) @ A.T
    return float(z @ z) if z.ndim == 1 else np.einsum("...i,...i->...", z, z)


def clip_singular_values(A):
    """Clip every singular value of ``A`` at 1; ndarray in, ndarray out.

    Works from the eigendecomposition of ``A.T @ A``: if
    ``A = U diag(s) V.T`` then ``A V diag(min(1, 1/s)) V.T`` has singular
    values ``min(s, 1)`` with the same singular vectors.  Returns ``A``
    itself (no copy) when nothing needs clipping.
    """
    if A.size == 0:
        return A
    # Frobenius norm bounds the spectral norm; skip the eigensolve when safe.
    if np.einsum("ij,ij->", A, A) <= 1.0:
        return A
    w, V = np.linalg.eigh(A.T @ A)
    if w[-1] <= 1.0 + 1e-12:
        return A
    big = w > 1.0
    f = np.ones_like(w)
    f[big] = 1.0 / np.sqrt(w[big])
    Vb = V[:, big]
    # A V diag(f) V.T, touching only the clipped directions
    return A + (A @ Vb) * (f[big] - 1.0) @ Vb.T


def spectral_project(A):
    """Nearest matrix (in spectral or Frobenius norm) with ``sigma_max <= 1``.

    Inputs already inside the unit spectral ball come back unchanged.
    """
    A = _finite_square(A)
    return Metric(clip_singular_values(A))


def frobenius_complexity(M):
    """Return ``(f2, d)`` with ``f2 = ||M.T M||_F**2`` and ``d = max(1, ceil(f2))``.

    ``d`` is the index of the smallest norm-bounded class containing ``M``.
    The ceiling ignores excess below ``1e-9`` so that, e.g., a unit-rank
    projector lands in class 1 rather than 2 because of rounding.
    """
    A = as_matrix(M)
    G = A.T @ A
    f2 = float(np.einsum("ij,ij->", G, G))
    d = max(1, math.ceil(f2 - 1e-9))
    return f2, d


def sym_eig(S):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Ties keep the order ``numpy.linalg.eigh`` produced them in.
    """
    S = _finite_square(S, "symmetric matrix")
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > 1e-8 * scale:
        raise InputError("matrix is not symmetric")
    w, V = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    return Spectrum(w[order], V[:, order])


def format_metric(M):
    """Text form of ``M``: a line with ``D``, then ``D`` rows of 17-digit decimals."""
    A = as_matrix(M)
    rows = (" ".join(f"{v:.17g}" for v in row) for row in A)
    return f"{A.shape[0]}\n" + "".join(r + "\n" for r in rows)


def save_metric(path, M):
    """Write :func:`format_metric` output to ``path``."""
    with open(path, "w") as fh:
        fh.write(format_metric(M))


def load_metric(path):
    """Read a metric written by :func:`save_metric`."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines:
        raise InputError(f"{path}: empty metric file")
    try:
        D = int(lines[0][0])
        rows = [[float(v) for v in ln] for ln in lines[1:]]
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if len(rows) != D or any(len(r) != D for r in rows):
        raise InputError(f"{path}: expected {D} rows of {D} values")
    return Metric(np.array(rows).reshape(D, D))
