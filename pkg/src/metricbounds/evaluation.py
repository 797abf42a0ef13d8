"""k-nearest-neighbour evaluation under a learned metric."""

import numpy as np

from .errors import DimensionError, InputError
from .metric import as_matrix

# Cap on the size of the (test chunk, train, D) difference tensor.
_CHUNK_ELEMS = 1 << 22


def knn_predict(M, train, X, k=3):
    """Majority label among the ``k`` nearest training points under ``M``.

    Distance ties are broken by training index.  Vote ties go to the class
    with the smallest summed distance, then to the smallest class id.
    """
    if train.n == 0:
        raise InputError("empty training set")
    if not 1 <= k <= train.n:
        raise InputError(f"k={k} must lie in [1, {train.n}]")
    A = as_matrix(M)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != train.D or A.shape != (train.D, train.D):
        raise DimensionError(f"metric {A.shape}, train D={train.D}, test D={X.shape[1]}")
    Ztr = train.points @ A.T
    Zte = X @ A.T
    classes, ytr = np.unique(train.labels, return_inverse=True)
    C = len(classes)
    out = np.empty(len(X), dtype=train.labels.dtype)
    step = max(1, _CHUNK_ELEMS // max(1, train.n * train.D))
    for s in range(0, len(X), step):
        diff = Zte[s:s + step, None, :] - Ztr[None, :, :]
        d = np.einsum("ijk,ijk->ij", diff, diff)
        nn = np.argsort(d, axis=1, kind="stable")[:, :k]
        lab = ytr[nn]
        dist = np.take_along_axis(d, nn, axis=1)
        rows = np.arange(len(nn))[:, None]
        votes = np.zeros((len(nn), C))
        dsum = np.zeros((len(nn), C))
        np.add.at(votes, (rows, lab), 1)
        np.add.at(dsum, (rows, lab), dist)
        # lexicographic: most votes, then least summed distance, then smallest id
        cand = votes == votes.max(axis=1, keepdims=True)
        dsum = np.where(cand, dsum, np.inf)
        out[s:s + step] = classes[np.argmin(dsum, axis=1)]
    return out


def knn_error(M, train, test, k=3):
    """Fraction of ``test`` misclassified by :func:`knn_predict`."""
    if test.n == 0:
        raise InputError("empty test set")
    return float(np.mean(knn_predict(M, train, test.points, k) != test.labels))


def random_baseline(train, test):
    """Expected error of guessing labels at the training class frequencies.

    ``1 - sum_c p_c q_c`` with ``p`` the training and ``q`` the test class
    proportions.
    """
    if train.n == 0 or test.n == 0:
        raise InputError("empty dataset")
    classes = np.union1d(train.labels, test.labels)
    p = np.array([np.mean(train.labels == c) for c in classes])
    q = np.array([np.mean(test.labels == c) for c in classes])
    return float(1.0 - p @ q)
