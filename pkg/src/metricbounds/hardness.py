"""Lower-bound constructions on the regular simplex.

The adversarial family puts uniform mass on the ``D + 1`` vertices of a
regular simplex in ``R^D``.  Each vertex ``i`` carries a label biased towards
a bit ``P_i``.  Every quantity here can be computed exactly, because the
support is finite.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._rng import make_rng
from .complexity import lemma2_threshold
from .data_io import LabeledDataset
from .errors import InputError
from .losses import LossSpec, PairedSample, empirical_distance_error, pair_loss
from .metric import Metric, as_matrix
from .optimizer import FitOptions, erm_fit

KEY_ADVERSARIAL = 201
KEY_COIN = 202
KEY_LOWERBOUND = 203


def simplex_vertices(n):
    """Vertices ``v_0 .. v_n`` of a regular simplex inscribed in the unit sphere of ``R^n``.

    Returns an ``(n + 1, n)`` array.  ``v_0`` is ``-1/sqrt(n)`` in every
    coordinate; ``v_i`` for ``i >= 1`` has ``((n-1) sqrt(n+1) + 1) / (n sqrt(n))``
    at position ``i`` and ``-(sqrt(n+1) - 1) / (n sqrt(n))`` elsewhere.
    """
    if int(n) != n or n < 1:
        raise InputError(f"n must be a positive integer, got {n}")
    n = int(n)
    rn, rn1 = math.sqrt(n), math.sqrt(n + 1)
    V = np.full((n + 1, n), -(rn1 - 1.0) / (n * rn))
    V[0] = -1.0 / rn
    V[np.arange(1, n + 1), np.arange(n)] = ((n - 1) * rn1 + 1.0) / (n * rn)
    return V


def centroid_gap(n, k):
    """Squared distance ``(n+1)^2 / (k n (n+1-k))`` between the centroids of a
    ``k`` / ``n+1-k`` split of the simplex vertices."""
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    return (n + 1) ** 2 / (k * n * (n + 1 - k))


def empirical_centroid_gap(vertices, part):
    """Squared centroid distance of the bipartition given by boolean ``part``."""
    V = np.asarray(vertices, dtype=float)
    part = np.asarray(part, dtype=bool)
    if part.all() or not part.any():
        raise InputError("both sides of the bipartition must be non-empty")
    g = V[part].mean(axis=0) - V[~part].mean(axis=0)
    return float(g @ g)


@dataclass(frozen=True)
class SimplexDistribution:
    """Uniform vertex law on the simplex with vertex-wise biased labels.

    ``P(y = 1 | v_i) = (1 + sqrt(alpha)) / 2`` if ``P_i = 1`` and
    ``(1 - sqrt(alpha)) / 2`` otherwise.
    """

    dim: int
    alpha: float
    P: np.ndarray
    vertices: np.ndarray = field(default=None)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        P = np.asarray(self.P, dtype=np.int64)
        if P.shape != (self.dim + 1,) or not np.all((P == 0) | (P == 1)):
            raise InputError(f"P must be a bit vector of length {self.dim + 1}")
        V = self.vertices
        V = simplex_vertices(self.dim) if V is None else np.asarray(V, dtype=float)
        if V.shape != (self.dim + 1, self.dim):
            raise InputError("vertices must be (dim + 1, dim)")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "vertices", V)

    @property
    def label_prob(self):
        """``P(y = 1)`` at each vertex."""
        b = math.sqrt(self.alpha)
        return np.where(self.P == 1, (1 + b) / 2, (1 - b) / 2)


def _draw(dist, n, rng):
    idx = rng.integers(0, dist.dim + 1, size=n)
    y = (rng.random(n) < dist.label_prob[idx]).astype(np.int64)
    return idx, y


def adversarial_sample(dist, m, seed, *keys):
    """``m`` i.i.d. labelled draws from ``dist``."""
    idx, y = _draw(dist, m, make_rng(seed, KEY_ADVERSARIAL, *keys))
    return LabeledDataset(dist.vertices[idx], y, "simplex")


def bayes_optimal_metric(P, vertices):
    """Rank-one metric ``a a^T`` with ``a`` the unit direction between the class centroids.

    ``a`` joins the centroid of the ``P_i = 0`` vertices to that of the
    ``P_i = 1`` vertices.  A constant ``P`` gives the zero metric.
    """
    P = np.asarray(P).astype(bool)
    V = np.asarray(vertices, dtype=float)
    D = V.shape[1]
    if P.all() or not P.any():
        return Metric.zeros(D)
    a = V[P].mean(axis=0) - V[~P].mean(axis=0)
    a /= np.linalg.norm(a)
    return Metric(np.outer(a, a))


def coin_failure_bound(eps, m):
    """``(1 - sqrt(1 - exp(-2 ceil(m/2) eps^2 / (1 - eps^2)))) / 4``.

    Lower bound on the probability that any estimator misidentifies a coin
    bias drawn uniformly from ``{1/2 - eps/2, 1/2 + eps/2}`` after ``m`` flips.
    """
    if not 0 < eps < 1:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    if m < 0:
        raise InputError("m must be >= 0")
    e = math.exp(-2.0 * math.ceil(m / 2) * eps * eps / (1.0 - eps * eps))
    return 0.25 * (1.0 - math.sqrt(1.0 - e))


def coin_mc_failure(eps, m, trials, seed=0):
    """Monte Carlo failure rate of the majority-vote estimator of the coin bias.

    Ties (even ``m``) are broken uniformly at random.
    """
    if trials < 1000:
        raise InputError("need at least 1000 trials")
    if not 0 <= eps < 1 or m < 1:
        raise InputError("need 0 <= eps < 1 and m >= 1")
    rng = make_rng(seed, KEY_COIN)
    hi = rng.random(trials) < 0.5
    p = np.where(hi, 0.5 + eps / 2, 0.5 - eps / 2)
    heads = rng.binomial(m, p)
    coin = rng.random(trials) < 0.5
    guess_hi = np.where(2 * heads == m, coin, 2 * heads > m)
    return float(np.mean(guess_hi != hi))


def lowerbound_loss(D):
    """Loss used by the lower-bound construction: ``U = 0``, ``L = 4/D``, ``lam = D/4``."""
    return LossSpec(lam=D / 4.0, U=0.0, L=4.0 / D)


def exact_risk(M, dist, spec):
    """Expected pair loss of ``M`` under ``dist``, by enumerating the support."""
    A = as_matrix(M)
    Z = dist.vertices @ A.T
    diff = Z[:, None, :] - Z[None, :, :]
    rho = np.einsum("ijk,ijk->ij", diff, diff)
    eta = dist.label_prob
    p_same = np.outer(eta, eta) + np.outer(1 - eta, 1 - eta)
    risk = p_same * pair_loss(spec, rho, True) + (1 - p_same) * pair_loss(spec, rho, False)
    return float(risk.mean())


def _aggregate_pairs(dist, idx, y):
    """Collapse a paired draw onto the simplex into a weighted sample of distinct pairs."""
    i, j = idx[0::2], idx[1::2]
    y1, y2 = y[0::2], y[1::2]
    nv = dist.dim + 1
    code = ((i * nv + j) * 2 + y1) * 2 + y2
    uniq, counts = np.unique(code, return_counts=True)
    y2u = uniq % 2
    y1u = (uniq // 2) % 2
    ij = uniq // 4
    return PairedSample(dist.vertices, ij // nv, ij % nv, y1u, y2u, weights=counts.astype(float))


def _majority_bits(dist, idx, y, rng):
    nv = dist.dim + 1
    ones = np.bincount(idx, weights=y, minlength=nv)
    total = np.bincount(idx, minlength=nv)
    coin = rng.integers(0, 2, size=nv)
    return np.where(2 * ones == total, coin, (2 * ones > total).astype(np.int64))


def erm_multistart(S, spec, starts, opts):
    """Unregularised ERM from each start; lowest empirical error wins, earlier start on ties."""
    best = None
    for M0 in starts:
        M = erm_fit(S, spec, 0.0, opts, init=M0)
        err = empirical_distance_error(M, S, spec)
        if best is None or err < best[0]:
            best = (err, M)
    return best[1]


def lowerbound_experiment(D, alpha, m_grid, trials, eps=0.05, seed=0, opts=None):
    """Failure rate of ERM on the adversarial simplex family.

    For each ``m`` a label-bit vector ``P`` is drawn at random.  ``trials``
    paired samples of ``m`` pairs are drawn and ERM is run on each with three
    starts: the identity, ``1e-3 I`` and the plug-in metric built from the
    majority label seen at each vertex.  A trial fails when the exact excess
    risk over the best metric exceeds ``eps``.

    Returns
    -------
    list of dict
        One row per ``m`` with keys ``D, alpha, m, trials, failure_fraction,
        threshold_m``.
    """
    if not m_grid or any(int(m) != m or m < 1 for m in m_grid):
        raise InputError("m_grid must be a non-empty list of positive integers")
    if trials < 1:
        raise InputError("trials must be >= 1")
    opts = FitOptions() if opts is None else opts
    spec = lowerbound_loss(D)
    V = simplex_vertices(D)
    rows = []
    for gi, m in enumerate(m_grid):
        m = int(m)
        rng_p = make_rng(seed, KEY_LOWERBOUND, gi)
        dist = SimplexDistribution(D, alpha, rng_p.integers(0, 2, size=D + 1), V)
        best_risk = exact_risk(bayes_optimal_metric(dist.P, V), dist, spec)
        fails = 0
        for t in range(trials):
            rng = make_rng(seed, KEY_LOWERBOUND, gi, t + 1)
            idx, y = _draw(dist, 2 * m, rng)
            S = _aggregate_pairs(dist, idx, y)
            plug_in = bayes_optimal_metric(_majority_bits(dist, idx, y, rng), V)
            starts = (np.eye(D), 1e-3 * np.eye(D), plug_in)
            M = erm_multistart(S, spec, starts, opts)
            if exact_risk(M, dist, spec) - best_risk > eps:
                fails += 1
        rows.append({"D": D, "alpha": alpha, "m": m, "trials": trials,
                     "failure_fraction": fails / trials,
                     "threshold_m": lemma2_threshold(D, eps, strict=False)})
    return rows
