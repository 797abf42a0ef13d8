"""Norm-regularised ERM over metrics and the structural-risk selection rule.

The objective is::

    err(M, S) + Lambda * ||M.T M||_F**2,    sigma_max(M) <= 1.

``erm_fit`` runs projected subgradient descent with steps ``step0 / sqrt(t)``.
The loss contributes a subgradient step.  The penalty and the spectral cap
both act on singular values only, so they are applied together, exactly,
per singular value: ``s -> min(1, r)`` where ``r + 4 eta Lambda r**3 = s``
(the proximal map of the quartic penalty).  This keeps the iteration stable
for arbitrarily large ``Lambda``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InputError, NumericalError
from .losses import (PairedSample, pair_loss, pair_loss_subgradient,
                     empirical_distance_error)
from .metric import Metric, as_matrix, clip_singular_values, frobenius_complexity

# Regularisation path swept by srm_select: {0} u {1e-4..10} u {0, 0.1, ..., 1}.
DEFAULT_SRM_GRID = tuple(sorted(
    {0.0} | {10.0 ** k for k in range(-4, 2)} | {round(0.1 * i, 1) for i in range(11)}))


@dataclass(frozen=True)
class FitOptions:
    """Optimiser settings.

    ``patience`` is the window over which the best objective must improve by
    at least ``tol`` for the run to continue.
    """

    max_iters: int = 2000
    step0: float = 1.0
    tol: float = 1e-7
    seed: int = 0
    patience: int = 100

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")
        if not self.step0 > 0:
            raise InputError("step0 must be > 0")
        if not self.tol > 0:
            raise InputError("tol must be > 0")


@dataclass(frozen=True)
class SrmParams:
    """Constants of the adaptive complexity penalty.

    ``mu[d - 1]`` is the prior mass of the class ``{M : ||M.T M||_F**2 <= d}``.
    """

    B: float
    lam: float
    delta: float
    C: float
    mu: tuple

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size == 0 or np.any(mu < 0):
            raise InputError("mu must be a non-empty non-negative vector")
        if abs(mu.sum() - 1.0) > 1e-9:
            raise InputError(f"mu must sum to 1, sums to {mu.sum()}")
        if not (0 < self.delta < 1):
            raise InputError("delta must lie in (0, 1)")
        if not (self.B > 0 and self.C > 0 and self.lam >= 0):
            raise InputError("need B > 0, C > 0, lam >= 0")
        object.__setattr__(self, "mu", tuple(float(v) for v in mu))

    @classmethod
    def uniform(cls, B, lam, delta, D, C=None):
        """Uniform prior ``mu_d = 1/D`` for ``d = 1..D`` and ``C = B`` by default."""
        return cls(B=B, lam=lam, delta=delta, C=B if C is None else C,
                   mu=(1.0 / D,) * D)


def make_pairs(points, labels):
    """Pair consecutive observations: ``(z1, z2), (z3, z4), ...``.

    A trailing odd observation is dropped.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(labels)
    if len(X) != len(y):
        raise InputError("points and labels differ in length")
    if len(X) < 2:
        raise InputError("need at least two observations to form a pair")
    m = len(X) // 2
    i = np.arange(0, 2 * m, 2)
    return PairedSample(X, i, i + 1, y[i], y[i + 1])


def shuffled_pairs(points, labels, rng, passes=1):
    """Concatenate ``passes`` rounds of :func:`make_pairs` over fresh shuffles."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(labels)
    n = len(X)
    if n < 2:
        raise InputError("need at least two observations to form a pair")
    firsts, seconds = [], []
    for _ in range(passes):
        perm = rng.permutation(n)[: 2 * (n // 2)]
        firsts.append(perm[0::2])
        seconds.append(perm[1::2])
    i = np.concatenate(firsts)
    j = np.concatenate(seconds)
    return PairedSample(X, i, j, y[i], y[j])


class _PairObjective:
    """Loss value and loss gradient for a fixed sample, reused across iterations."""

    def __init__(self, S, spec):
        self.S = S
        self.spec = spec
        self.X = S.points
        self.i = S.first
        self.j = S.second
        self.same = S.same
        self.w = S.normalized_weights()
        self.diffs = S.diffs

    def loss_and_grad(self, A):
        X, i, j = self.X, self.i, self.j
        Z = X @ A.T
        d = Z[i] - Z[j]
        rho = np.einsum("ij,ij->i", d, d)
        loss = float(self.w @ pair_loss(self.spec, rho, self.same))
        c = self.w * pair_loss_subgradient(self.spec, rho, self.same)
        active = np.flatnonzero(c)
        D = A.shape[0]
        n = X.shape[0]
        if active.size == 0:
            return loss, np.zeros_like(A)
        # d/dA sum_k c_k ||A xbar_k||^2 = 2 sum_k c_k (A xbar_k) xbar_k^T
        if active.size * D <= n * (n + D):
            ca = c[active]
            grad = 2.0 * (d[active] * ca[:, None]).T @ self.diffs[active]
        else:
            W = np.zeros((n, n))
            np.add.at(W, (i[active], j[active]), c[active])
            W = W + W.T
            lap = np.diag(W.sum(axis=1)) - W
            grad = 2.0 * Z.T @ (lap @ X)
        return loss, grad


def _penalty(A):
    G = A.T @ A
    return float(np.einsum("ij,ij->", G, G))


def objective(M, S, spec, Lambda):
    """``err(M, S) + Lambda * ||M.T M||_F**2``."""
    return empirical_distance_error(M, S, spec) + Lambda * _penalty(as_matrix(M))


def objective_gradient(M, S, spec, Lambda):
    """Subgradient of :func:`objective` with respect to ``M``.

    ``(1/m) sum_i phi'(rho_i) 2 M xbar_i xbar_i^T + 4 Lambda M M^T M``.
    """
    A = as_matrix(M)
    _, g = _PairObjective(S, spec).loss_and_grad(A)
    return g + 4.0 * Lambda * A @ (A.T @ A)


def _prox_quartic(s, a):
    """Solve ``r + a r**3 = s`` for ``r >= 0`` elementwise (``a > 0``, ``s >= 0``)."""
    r = np.minimum(s, np.cbrt(s / a))
    for _ in range(60):
        f = r + a * r ** 3 - s
        step = f / (1.0 + 3.0 * a * r ** 2)
        r = r - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(r, 1e-300)):
            break
    return np.maximum(r, 0.0)


def prox_project(A, eta_lambda):
    """Apply the penalty proximal map with weight ``eta_lambda`` and the spectral cap.

    Singular values ``s`` become ``min(1, r)`` with ``r + 4 eta_lambda r**3 = s``.
    """
    if eta_lambda <= 0:
        return clip_singular_values(A)
    w, V = np.linalg.eigh(A.T @ A)
    s = np.sqrt(np.maximum(w, 0.0))
    r = np.minimum(1.0, _prox_quartic(s, 4.0 * eta_lambda))
    f = np.ones_like(s)
    ok = s > 1e-150
    f[ok] = r[ok] / s[ok]
    return (A @ V) * f @ V.T


def _descend(value_and_grad, A0, Lambda, opts, callback=None):
    """Shared projected-subgradient loop; returns the best iterate seen."""
    A = A0
    best_obj = math.inf
    best_A = A0
    history = []
    for t in range(1, opts.max_iters + 1):
        loss, grad = value_and_grad(A)
        obj = loss + Lambda * _penalty(A)
        if not math.isfinite(obj) or not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite objective at iteration {t}; step0 too large?")
        if obj < best_obj:
            best_obj, best_A = obj, A
        history.append(best_obj)
        if callback is not None:
            callback(t, A, obj, best_obj)
        if t > opts.patience and history[-1 - opts.patience] - best_obj < opts.tol:
            break
        # Feasible point, zero subgradient, no penalty: every later iterate is this one.
        if Lambda == 0 and not grad.any():
            break
        eta = opts.step0 / math.sqrt(t)
        A = prox_project(A - eta * grad, eta * Lambda)
    return best_A, best_obj


def erm_fit(S, spec, Lambda, opts=FitOptions(), init=None, callback=None):
    """Minimise the regularised pair objective over ``sigma_max(M) <= 1``.

    Parameters
    ----------
    S : PairedSample
    spec : LossSpec
    Lambda : float
        Weight of ``||M.T M||_F**2``.
    opts : FitOptions
    init : Metric or array, optional
        Starting metric; the identity by default.  Projected if needed.
    callback : callable, optional
        Called as ``callback(t, M, objective, best_objective)`` for every
        evaluated iterate.

    Returns
    -------
    Metric
        The iterate with the lowest objective seen, which is never worse
        than the starting point.
    """
    if not isinstance(S, PairedSample):
        raise InputError("erm_fit expects a PairedSample")
    if Lambda < 0:
        raise InputError("Lambda must be >= 0")
    D = S.dim
    A0 = np.eye(D) if init is None else clip_singular_values(np.array(as_matrix(init), dtype=float))
    if A0.shape != (D, D):
        raise InputError(f"init has shape {A0.shape}, sample dimension is {D}")
    prob = _PairObjective(S, spec)
    best, _ = _descend(prob.loss_and_grad, A0, Lambda, opts, callback)
    return Metric(best)


def srm_penalty(d, m, p):
    """Per-unit complexity price ``C B lam sqrt(ln(1 / (delta mu_d)) / m)``."""
    if d < 1 or m < 1:
        raise InputError("d and m must be >= 1")
    mu_d = p.mu[d - 1] if d <= len(p.mu) else 0.0
    if mu_d <= 0:
        raise InputError(f"mu_{d} = 0: the class has infinite penalty")
    return p.C * p.B * p.lam * math.sqrt(max(0.0, math.log(1.0 / (p.delta * mu_d))) / m)


def srm_score(err, d, m, p):
    """Selection criterion ``err + srm_penalty(d) * d``."""
    return err + srm_penalty(d, m, p) * d


@dataclass(frozen=True)
class SrmCandidate:
    Lambda: float
    metric: Metric
    err: float
    f2: float
    d: int
    score: float


def srm_candidates(S, spec, p, opts=FitOptions(), grid=DEFAULT_SRM_GRID):
    """Fit one metric per ``Lambda`` in ``grid`` and score each."""
    out = []
    for Lam in grid:
        try:
            M = erm_fit(S, spec, Lam, opts)
        except NumericalError:
            continue
        err = empirical_distance_error(M, S, spec)
        f2, d = frobenius_complexity(M)
        out.append(SrmCandidate(Lam, M, err, f2, d, srm_score(err, d, S.m, p)))
    return out


def select_candidate(candidates):
    """Lowest score wins; ties go to the smaller complexity, then to the earlier entry."""
    if not candidates:
        raise NumericalError("no finite candidate to select from")
    return min(enumerate(candidates), key=lambda ic: (ic[1].score, ic[1].d, ic[0]))[1]


def srm_select(S, spec, p, opts=FitOptions(), grid=DEFAULT_SRM_GRID):
    """Structural risk minimisation over a regularisation path.

    Returns ``(metric, d_hat)`` for the candidate minimising
    ``err(M, S) + srm_penalty(d_M) * d_M``.
    """
    best = select_candidate(srm_candidates(S, spec, p, opts, grid))
    return best.metric, best.d
