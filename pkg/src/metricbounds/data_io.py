"""Labelled datasets: CSV loading, correlated-noise augmentation and splits."""

from dataclasses import dataclass
import csv
import math

import numpy as np

from ._rng import make_rng, normals
from .errors import (DimensionError, EmptyFileError, InputError, NonNumericError,
                     RaggedRowError, SplitError)

# Stream identifiers for make_rng; kept distinct so streams never collide.
KEY_WISHART = 101
KEY_NOISE = 102
KEY_SPLIT = 103


@dataclass(frozen=True)
class LabeledDataset:
    """Observations ``points`` (n, D) with integer class ids ``labels`` (n,)."""

    points: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        if X.ndim != 2:
            raise DimensionError("points must be 2-d")
        y = np.asarray(self.labels)
        if y.shape != (X.shape[0],):
            raise DimensionError(f"{X.shape[0]} points but labels of shape {y.shape}")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise InputError("labels must be integer class ids")
            y = y.astype(np.int64)
        X.flags.writeable = False
        y = y.copy()
        y.flags.writeable = False
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def D(self):
        return self.points.shape[1]

    def subset(self, idx):
        return LabeledDataset(self.points[idx], self.labels[idx], self.name)

    def support_bound(self):
        """``max_i ||x_i||``, the support radius ``B`` seen on this data."""
        if self.n == 0:
            return 0.0
        return float(np.sqrt(np.einsum("ij,ij->i", self.points, self.points).max()))


def load_csv(path, has_header=False, label_column=-1, name=None):
    """Read comma-separated features with one label column.

    Labels (any strings) become dense integer ids in first-appearance order.

    Raises
    ------
    EmptyFileError
        No data rows.
    RaggedRowError
        A row whose field count differs from the first row's.
    NonNumericError
        A feature that does not parse as a decimal.
    """
    with open(path, newline="") as fh:
        rows = [(ln, r) for ln, r in enumerate(csv.reader(fh), start=1)
                if r and any(f.strip() for f in r)]
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise EmptyFileError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width < 2:
        raise InputError(f"{path}: need at least one feature and one label column")
    col = label_column if label_column >= 0 else width + label_column
    if not 0 <= col < width:
        raise InputError(f"{path}: label column {label_column} out of range")
    ids = {}
    X = np.empty((len(rows), width - 1))
    y = np.empty(len(rows), dtype=np.int64)
    for r, (ln, fields) in enumerate(rows):
        if len(fields) != width:
            raise RaggedRowError(
                f"{path}: line {ln} has {len(fields)} fields, expected {width}")
        feats = fields[:col] + fields[col + 1:]
        for c, f in enumerate(feats):
            try:
                X[r, c] = float(f)
            except ValueError:
                raise NonNumericError(
                    f"{path}: line {ln}, field {c + 1}: {f.strip()!r} is not a number") from None
        y[r] = ids.setdefault(fields[col].strip(), len(ids))
    if not np.all(np.isfinite(X)):
        raise NonNumericError(f"{path}: non-finite feature value")
    return LabeledDataset(X, y, name if name is not None else str(path))


def save_csv(path_or_file, ds):
    """Write features followed by the label column, no header."""
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        for x, lab in zip(ds.points, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [int(lab)])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def wishart_covariance(D, seed, *keys):
    """Unit-scale Wishart draw ``A.T @ A`` with ``A`` a ``D x D`` standard normal matrix."""
    if D < 1:
        raise InputError("D must be >= 1")
    A = normals(make_rng(seed, KEY_WISHART, *keys), (D, D))
    return A.T @ A


def psd_factor(Sigma):
    """Return ``C`` with ``C @ C.T == Sigma``.

    Cholesky when ``Sigma`` is positive definite, otherwise an eigenvector
    factor with negative round-off eigenvalues clamped to 0.
    """
    S = np.asarray(Sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"covariance must be square, got {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InputError("covariance has non-finite entries")
    scale = max(np.linalg.norm(S), 1e-300)
    if np.linalg.norm(S - S.T) > 1e-8 * scale:
        raise InputError("covariance is not symmetric")
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh((S + S.T) / 2)
    if w[0] < -1e-8 * max(1.0, abs(w[-1])):
        raise InputError(f"covariance is not PSD (eigenvalue {w[0]:.3g})")
    return V * np.sqrt(np.clip(w, 0.0, None))


def augment_noise(ds, Sigma, seed, *keys):
    """Append ``N(0, Sigma)`` noise coordinates to every observation."""
    S = np.asarray(Sigma, dtype=float)
    if S.size == 0:
        return ds
    C = psd_factor(S)
    G = normals(make_rng(seed, KEY_NOISE, *keys), (ds.n, C.shape[0]))
    return LabeledDataset(np.hstack([ds.points, G @ C.T]), ds.labels, ds.name)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.7
    val_frac: float = 0.1
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_frac, self.val_frac, self.test_frac)
        if any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise InputError(f"split fractions must be non-negative and sum to 1, got {fr}")


def _floor_count(frac, n):
    return int(math.floor(frac * n + 1e-9))


def split(ds, spec, *keys):
    """Random train/validation/test split.

    Counts are ``floor(train_frac n)``, ``floor(val_frac n)`` and the
    remainder.  Raises :class:`SplitError` if a part misses one of the
    classes present in ``ds``.
    """
    n = ds.n
    if n < 10:
        raise InputError(f"need at least 10 observations to split, got {n}")
    perm = make_rng(spec.seed, KEY_SPLIT, *keys).permutation(n)
    n_tr = _floor_count(spec.train_frac, n)
    n_va = _floor_count(spec.val_frac, n)
    parts = (perm[:n_tr], perm[n_tr:n_tr + n_va], perm[n_tr + n_va:])
    classes = np.unique(ds.labels)
    for tag, idx in zip(("train", "validation", "test"), parts):
        if len(idx) and len(np.unique(ds.labels[idx])) < len(classes):
            raise SplitError(f"{tag} split lost a class; reseed")
    return tuple(ds.subset(idx) for idx in parts)


def standardize(train, *others):
    """Z-score every dataset with the training mean and standard deviation.

    Constant training features are centred but not scaled.
    """
    mu = train.points.mean(axis=0)
    sd = train.points.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return tuple(LabeledDataset((d.points - mu) / sd, d.labels, d.name)
                 for d in (train, *others))
