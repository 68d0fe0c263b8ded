"""Decision rules: 1-nearest-neighbour, LRC and CRC.

Galleries are column-major like everything else in the package. Class ids
are the integer labels stored on the gallery. Residual-based rules (LRC,
CRC) treat residuals within ``TIE_RTOL`` relative of the minimum as tied
and pick the lowest class id. This keeps mathematically exact ties
from being decided by rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

TIE_RTOL = 1e-12
LRC_RIDGE = 1e-10


@dataclass(frozen=True)
class GalleryModel:
    """Training features with labels; ``crc_lambda=None`` picks the default."""

    train_features: np.ndarray
    train_labels: np.ndarray
    crc_lambda: float | None = None
    crc_regularized_residual: bool = False
    class_ids: np.ndarray = field(init=False, repr=False)
    class_columns: tuple = field(init=False, repr=False)

    def __post_init__(self):
        X = np.asarray(self.train_features, dtype=float)
        y = np.asarray(self.train_labels, dtype=int)
        if X.ndim != 2 or X.shape[1] != y.size or y.size == 0:
            raise ValueError(f"gallery of shape {X.shape} does not match {y.size} labels")
        if self.crc_lambda is not None and not self.crc_lambda > 0:
            raise ValueError(f"crc_lambda must be positive, got {self.crc_lambda}")
        ids = np.unique(y)
        object.__setattr__(self, "train_features", X)
        object.__setattr__(self, "train_labels", y)
        object.__setattr__(self, "class_ids", ids)
        object.__setattr__(self, "class_columns", tuple(np.flatnonzero(y == c) for c in ids))

    @property
    def dim(self) -> int:
        return self.train_features.shape[0]

    @property
    def lam(self) -> float:
        """CRC regularization; default ``1e-3 * trace(X^T X) / n_train``."""
        if self.crc_lambda is not None:
            return float(self.crc_lambda)
        X = self.train_features
        lam = 1e-3 * float(np.sum(X * X)) / X.shape[1]
        return lam if lam > 0 else 1e-3


def _query(gallery, query):
    q = np.asarray(query, dtype=float).reshape(-1)
    if q.size != gallery.dim:
        raise ValueError(f"query has {q.size} features, gallery has {gallery.dim}")
    return q


def _argmin_tied(residuals):
    r = np.asarray(residuals, dtype=float)
    best = r.min()
    return int(np.flatnonzero(r <= best + TIE_RTOL * max(abs(best), 1.0))[0])


def nn_classify(gallery: GalleryModel, query) -> int:
    """Label of the Euclidean-nearest training column (lowest index on ties)."""
    q = _query(gallery, query)
    d2 = np.sum((gallery.train_features - q[:, None]) ** 2, axis=0)
    return int(gallery.train_labels[np.argmin(d2)])


def nn_classify_many(gallery: GalleryModel, Q) -> np.ndarray:
    """Vectorized :func:`nn_classify` over the columns of ``Q``."""
    X = gallery.train_features
    Q = np.asarray(Q, dtype=float)
    if Q.shape[0] != X.shape[0]:
        raise ValueError(f"queries have {Q.shape[0]} features, gallery has {X.shape[0]}")
    d2 = cdist(X.T, Q.T, "sqeuclidean")
    return gallery.train_labels[np.argmin(d2, axis=0)]


def crc_solve(gallery: GalleryModel, query) -> np.ndarray:
    """Coding vector ``(X^T X + lambda I)^-1 X^T y``."""
    q = _query(gallery, query)
    X = gallery.train_features
    G = X.T @ X
    G[np.diag_indices_from(G)] += gallery.lam
    return linalg.solve(G, X.T @ q, assume_a="pos")


def crc_residuals(gallery: GalleryModel, query) -> np.ndarray:
    q = _query(gallery, query)
    coef = crc_solve(gallery, q)
    X = gallery.train_features
    res = np.empty(len(gallery.class_ids))
    for i, cols in enumerate(gallery.class_columns):
        res[i] = np.linalg.norm(q - X[:, cols] @ coef[cols])
        if gallery.crc_regularized_residual:
            nrm = np.linalg.norm(coef[cols])
            res[i] = res[i] / nrm if nrm > 0 else np.inf
    return res


def crc_classify(gallery: GalleryModel, query) -> int:
    """Class whose share of the collaborative code reconstructs ``y`` best."""
    return int(gallery.class_ids[_argmin_tied(crc_residuals(gallery, query))])


def lrc_residuals(gallery: GalleryModel, query) -> np.ndarray:
    """Per-class least-squares residuals ``||y - X_c (X_c^T X_c)^-1 X_c^T y||``.

    A rank-deficient class normal matrix gets ``1e-10 * trace / n_c`` added
    to its diagonal.
    """
    q = _query(gallery, query)
    X = gallery.train_features
    res = np.empty(len(gallery.class_ids))
    for i, cols in enumerate(gallery.class_columns):
        Xc = X[:, cols]
        G = Xc.T @ Xc
        ev = linalg.eigvalsh(G)
        if ev[0] <= 1e3 * np.finfo(float).eps * max(ev[-1], 0.0):
            scale = np.trace(G) / G.shape[0]
            G = G + LRC_RIDGE * (scale if scale > 0 else 1.0) * np.eye(G.shape[0])
        beta = linalg.solve(G, Xc.T @ q, assume_a="pos")
        res[i] = np.linalg.norm(q - Xc @ beta)
    return res


def lrc_classify(gallery: GalleryModel, query) -> int:
    """Class whose column span is closest to ``y`` in least squares."""
    return int(gallery.class_ids[_argmin_tied(lrc_residuals(gallery, query))])
