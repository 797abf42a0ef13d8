"""Two-layer networks with l1-bounded weights, applied after a metric.

A hypothesis is ``x -> sum_i w_i tanh(gamma v_i . x)`` with ``||w||_1 <= 1`` and
``||v_i||_1 <= 1``, so outputs lie in ``[-1, 1]``.  Scores used as
probabilities are mapped to ``[0, 1]`` by ``(h + 1) / 2``.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._rng import make_rng, normals
from .errors import DimensionError, InputError, NumericalError
from .metric import Metric, as_matrix
from .optimizer import FitOptions, _penalty, prox_project

L1_TOL = 1e-9
KEY_NET_INIT = 301


@dataclass(frozen=True)
class NetHypothesis:
    """Output weights ``w`` (K,), hidden rows ``V`` (K, D) and activation scale ``gamma``."""

    w: np.ndarray
    V: np.ndarray
    gamma: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        if V.shape[0] != w.shape[0]:
            raise DimensionError(f"w has {w.shape[0]} units, V has {V.shape[0]} rows")
        if not self.gamma > 0:
            raise InputError("gamma must be > 0")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(V))):
            raise InputError("network weights must be finite")
        if np.abs(w).sum() > 1 + L1_TOL or np.any(np.abs(V).sum(axis=1) > 1 + L1_TOL):
            raise InputError("l1 constraint violated: need ||w||_1 <= 1 and ||v_i||_1 <= 1")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "V", V)

    @property
    def K(self):
        return self.w.shape[0]

    @property
    def dim(self):
        return self.V.shape[1]


def activation(gamma, t):
    """``tanh(gamma t)``: odd, increasing, ``gamma``-Lipschitz, zero at zero."""
    return np.tanh(gamma * np.asarray(t, dtype=float))


def net_forward(h, x):
    """``sum_i w_i tanh(gamma v_i . x)`` for one point or each row of ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != h.dim:
        raise DimensionError(f"network expects dimension {h.dim}, got {x.shape[-1]}")
    out = activation(h.gamma, x @ h.V.T) @ h.w
    return float(out) if np.ndim(out) == 0 else out


def project_l1_ball(v, radius=1.0):
    """Euclidean projection onto ``{u : ||u||_1 <= radius}``.

    Sort-based simplex projection of ``|v|`` with the signs restored.
    """
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = np.flatnonzero(u - (css - radius) / j > 0)[-1]
    theta = (css[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _xy(S):
    X = np.atleast_2d(np.asarray(S.points, dtype=float))
    y = np.asarray(S.labels, dtype=float)
    if X.shape[0] == 0:
        raise InputError("empty sample")
    if not np.all((y == 0) | (y == 1)):
        raise InputError("labels must be bits 0/1")
    return X, y


def scores(h, M, X):
    """``(h(M x) + 1) / 2`` for each row of ``X``."""
    return (net_forward(h, np.atleast_2d(X) @ as_matrix(M).T) + 1.0) / 2.0


def margins(h, M, S):
    """``p - 1/2`` for label 1 and ``1/2 - p`` for label 0, with ``p`` the score."""
    X, y = _xy(S)
    p = scores(h, M, X)
    return np.where(y == 1, p - 0.5, 0.5 - p)


def margin_empirical_error(h, M, S, gamma_margin):
    """Fraction of ``S`` whose margin falls below ``gamma_margin``."""
    if not 0 < gamma_margin < 0.5:
        raise InputError("gamma_margin must lie in (0, 1/2)")
    return float(np.mean(margins(h, M, S) < gamma_margin))


def classifier_loss(spec, p, y):
    """``min(1, lam |p - y|)``."""
    return np.minimum(1.0, spec.lam * np.abs(np.asarray(p, float) - np.asarray(y, float)))


def classifier_loss_error(h, M, S, spec):
    """Mean of ``min(1, lam |p_i - y_i|)`` over ``S``."""
    X, y = _xy(S)
    return float(np.mean(classifier_loss(spec, scores(h, M, X), y)))


def zero_one_error(h, M, S):
    """Fraction misclassified when thresholding the score at 1/2."""
    X, y = _xy(S)
    return float(np.mean((scores(h, M, X) > 0.5) != (y == 1)))


def _loss_grads(A, w, V, gamma, X, y, spec, clipped=True):
    """Loss value and its subgradients in ``(A, w, V)``.

    With ``clipped=False`` the subgradient is that of the unclipped
    ``lam |p - y|``, which stays informative where the clipped loss is flat.
    """
    Z = X @ A.T
    H = np.tanh(gamma * (Z @ V.T))
    p = (H @ w + 1.0) / 2.0
    r = p - y
    loss = float(np.mean(np.minimum(1.0, spec.lam * np.abs(r))))
    live = (r != 0) & (spec.lam * np.abs(r) < 1.0) if clipped else (r != 0)
    dp = np.where(live, spec.lam * np.sign(r), 0.0)
    g_out = dp / (2.0 * X.shape[0])
    g_w = H.T @ g_out
    g_pre = np.outer(g_out, w) * gamma * (1.0 - H * H)
    g_V = g_pre.T @ Z
    g_A = (g_pre @ V).T @ X
    return loss, g_A, g_w, g_V


def joint_fit(S, K, gamma, spec, Lambda, opts=FitOptions(), callback=None, warmup=None):
    """Jointly fit a metric and a network by alternating projected subgradient steps.

    Each iteration takes one step on ``M`` (with the penalty
    ``Lambda ||M^T M||_F^2`` and the spectral cap) and then one step on
    ``(w, V)`` followed by l1-ball projections, both with step
    ``step0 / sqrt(t)``.  Starts from ``M = I``, ``w = 0`` and random unit-l1
    rows ``V`` seeded by ``opts.seed``.

    At ``w = 0`` every score is 1/2, where the clipped loss is flat once
    ``lam > 2``.  The first ``warmup`` iterations (default
    ``min(200, max_iters // 2)``) therefore step along the unclipped loss;
    the best iterate is still judged by the clipped objective throughout.

    Returns
    -------
    (Metric, NetHypothesis)
        The iterate with the lowest objective seen.
    """
    X, y = _xy(S)
    if K < 1:
        raise InputError("K must be >= 1")
    if Lambda < 0:
        raise InputError("Lambda must be >= 0")
    D = X.shape[1]
    A = np.eye(D)
    w = np.zeros(K)
    V = normals(make_rng(opts.seed, KEY_NET_INIT), (K, D))
    V /= np.maximum(np.abs(V).sum(axis=1, keepdims=True), 1e-300)

    if warmup is None:
        warmup = min(200, opts.max_iters // 2)
    best = (math.inf, A, w, V)
    history = []
    for t in range(1, opts.max_iters + 1):
        clipped = t > warmup
        loss, g_A, _, _ = _loss_grads(A, w, V, gamma, X, y, spec, clipped)
        obj = loss + Lambda * _penalty(A)
        if not math.isfinite(obj):
            raise NumericalError(f"non-finite objective at iteration {t}")
        if obj < best[0]:
            best = (obj, A, w, V)
        history.append(best[0])
        if callback is not None:
            callback(t, A, w, V, obj)
        if t > warmup + opts.patience and history[-1 - opts.patience] - best[0] < opts.tol:
            break
        eta = opts.step0 / math.sqrt(t)
        A = prox_project(A - eta * g_A, eta * Lambda)
        _, _, g_w, g_V = _loss_grads(A, w, V, gamma, X, y, spec, clipped)
        w = project_l1_ball(w - eta * g_w)
        V = np.array([project_l1_ball(row) for row in V - eta * g_V])
    _, A, w, V = best
    return Metric(A), NetHypothesis(w, V, gamma)


def save_net(path, h):
    """Text format: ``K D gamma``, then ``w``, then the ``K`` rows of ``V``."""
    with open(path, "w") as fh:
        fh.write(f"{h.K} {h.dim} {h.gamma:.17g}\n")
        fh.write(" ".join(f"{v:.17g}" for v in h.w) + "\n")
        for row in h.V:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_net(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    try:
        K, D, gamma = int(lines[0][0]), int(lines[0][1]), float(lines[0][2])
        w = [float(v) for v in lines[1]]
        V = [[float(v) for v in ln] for ln in lines[2:]]
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed network file ({exc})") from None
    if len(w) != K or len(V) != K or any(len(r) != D for r in V):
        raise InputError(f"{path}: expected w of length {K} and {K} rows of {D}")
    return NetHypothesis(np.array(w), np.array(V).reshape(K, D), gamma)
