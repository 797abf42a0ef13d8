"""Empirical Rademacher complexity of the distance class and bound evaluators.

For a paired sample with differences ``xbar_i`` and signs ``sigma_i`` the
inner supremum over metrics reduces to an eigenvalue problem on
``S = sum_i sigma_i xbar_i xbar_i^T``:

    sup_M (1/m) sum_i sigma_i ||M xbar_i||^2 = (1/m) sup_G <G, S>,

with ``G = M^T M`` ranging over PSD matrices whose top eigenvalue is 1.
Placing eigenvalue 1 on every positive direction of ``S`` is optimal; if
``S`` has none, the unit direction must go on the largest eigenvalue.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np

from ._rng import make_rng
from .errors import DimensionError, InputError
from .losses import PairedSample

_RADEMACHER_KEY = 0x5AD


@dataclass(frozen=True)
class BoundInputs:
    """Quantities shared by the bound evaluators.

    Attributes
    ----------
    B : float
        Bound on ``||x||`` over the support.
    lam : float
        Lipschitz constant of the loss.
    D : int
        Ambient dimension.
    m : int
        Number of pairs.
    delta : float
        Failure probability.
    d : float, optional
        Cap on ``||M^T M||_F**2``; defaults to ``D``.
    gamma : float
        Activation Lipschitz scale (network bound only).
    """

    B: float
    lam: float
    D: int
    m: int
    delta: float
    d: float = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise InputError("m must be >= 1")
        if not (0 < self.delta < 1):
            raise InputError("delta must lie in (0, 1)")
        if self.D < 1 or self.B <= 0 or self.lam < 0 or self.gamma < 0:
            raise InputError("need D >= 1, B > 0, lam >= 0, gamma >= 0")
        if self.d is None:
            object.__setattr__(self, "d", float(self.D))
        elif self.d <= 0:
            raise InputError("d must be > 0")


def _diffs(S):
    if isinstance(S, PairedSample):
        return S.diffs
    X = np.asarray(S, dtype=float)
    if X.ndim != 2:
        raise DimensionError("diffs must be an (m, D) array")
    return X


def _sup_from_eigs(w, m):
    """Closed-form supremum given eigenvalues ``w`` (last axis) of ``S``."""
    pos = np.where(w > 0, w, 0.0).sum(axis=-1)
    has_pos = np.any(w > 0, axis=-1)
    return np.where(has_pos, pos, w.max(axis=-1)) / m


def _sup_batch(sigmas, X):
    """Closed-form supremum for each row of ``sigmas`` (shape ``(n, m)``)."""
    m = X.shape[0]
    S = np.matmul(X.T, sigmas[:, :, None] * X)
    return _sup_from_eigs(np.linalg.eigvalsh(S), m)


def rademacher_sup_closed_form(signs, diffs):
    """Exact ``sup_M (1/m) sum_i sigma_i ||M xbar_i||**2`` over unit-spectral-norm metrics.

    Parameters
    ----------
    signs : array of +-1, shape (m,)
    diffs : array, shape (m, D)
        Pair differences ``xbar_i``.
    """
    s = np.asarray(signs, dtype=float)
    X = _diffs(diffs)
    if s.shape != (X.shape[0],):
        raise DimensionError(f"{s.shape[0] if s.ndim else 0} signs for {X.shape[0]} diffs")
    return float(_sup_batch(s[None, :], X)[0])


def rademacher_estimate(S, n_draws, seed=0, batch=512):
    """Monte Carlo estimate of the empirical Rademacher complexity.

    Returns
    -------
    mean, stderr : float
        Average of the closed-form supremum over ``n_draws`` uniform sign
        vectors, and its standard error ``std / sqrt(n_draws)``.
    """
    if n_draws < 2:
        raise InputError("n_draws must be >= 2")
    X = _diffs(S)
    m = X.shape[0]
    rng = make_rng(seed, _RADEMACHER_KEY)
    vals = []
    left = n_draws
    while left > 0:
        b = min(batch, left)
        sig = 2.0 * rng.integers(0, 2, size=(b, m)) - 1.0
        vals.append(_sup_batch(sig, X))
        left -= b
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n_draws))


def rademacher_exact(S, max_m=16):
    """Empirical Rademacher complexity by enumerating all ``2**m`` sign vectors."""
    X = _diffs(S)
    m = X.shape[0]
    if m > max_m:
        raise InputError(f"exact enumeration over 2**{m} sign vectors refused (max_m={max_m})")
    sig = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    return float(_sup_batch(sig, X).mean())


def rademacher_chain_bound(B, D, m):
    """``4 B**2 sqrt(D / m)``, the data-free cap on the distance-class complexity."""
    return 4.0 * B * B * math.sqrt(D / m)


def _confidence_term(delta, m):
    return math.sqrt(2.0 * math.log(1.0 / delta) / m)


def lemma1_bound(b):
    """Uniform deviation bound ``2 lam 4B^2 sqrt(D/m) + sqrt(2 ln(1/delta)/m)``.

    The loss range constant is 1 since the losses are clipped to ``[0, 1]``.
    """
    return 2.0 * b.lam * rademacher_chain_bound(b.B, b.D, b.m) + _confidence_term(b.delta, b.m)


def lemma5_bound(b):
    """:func:`lemma1_bound` with ``D`` replaced by the Frobenius cap ``d``."""
    return 2.0 * b.lam * rademacher_chain_bound(b.B, b.d, b.m) + _confidence_term(b.delta, b.m)


def lemma6_bound(b):
    """Network-class bound ``B lam gamma sqrt(d ln(D/delta) / m)`` (unit leading constant)."""
    return b.B * b.lam * b.gamma * math.sqrt(b.d * math.log(b.D / b.delta) / b.m)


def corollary_bound(d, m, p):
    """Adaptive bound ``C B lam sqrt(d ln(1/(delta mu_d)) / m)``."""
    if d < 1 or m < 1:
        raise InputError("d and m must be >= 1")
    mu_d = p.mu[d - 1] if d <= len(p.mu) else 0.0
    if mu_d <= 0:
        raise InputError(f"mu_{d} = 0: the bound is infinite")
    return p.C * p.B * p.lam * math.sqrt(d * max(0.0, math.log(1.0 / (p.delta * mu_d))) / m)


def lemma2_threshold(D, eps, strict=True):
    """Sample size ``(D + 1) / (512 eps**2)`` below which ERM can fail.

    The guarantee behind it needs ``0 < eps <= 1/64``; ``strict=False`` only
    requires ``eps > 0`` so the number can be reported alongside experiments
    run at larger ``eps``.
    """
    if not eps > 0 or (strict and not eps <= 1.0 / 64):
        raise InputError(f"eps must lie in (0, 1/64], got {eps}")
    if D < 1:
        raise InputError("D must be >= 1")
    return (D + 1) / (512.0 * eps * eps)
