"""Affinity graphs, Laplacians and the scatter matrices built from them.

All sample matrices are column-major (features x samples). Every returned
square matrix is exactly symmetric: products are symmetrized with
``(M + M.T) / 2``, which is bitwise symmetric because float addition
commutes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEMES = ("dot", "dot-raw", "heat")
STRUCTURES = ("within", "within-knn", "knn", "complete")


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric, nonnegative, zero-diagonal weight matrix plus provenance."""

    weights: np.ndarray
    scheme: str
    structure: str
    k: int | None = None
    t: float | None = None


def _sym(m):
    return (m + m.T) / 2.0


def sq_distances(X) -> np.ndarray:
    """Pairwise squared Euclidean distances between the columns of X."""
    X = np.asarray(X, dtype=float)
    sq = np.einsum("ij,ij->j", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X.T @ X)
    d2 = _sym(d2)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def auto_heat_t(d2) -> float:
    """Median of the off-diagonal squared distances (1.0 if all vanish)."""
    iu = np.triu_indices(d2.shape[0], k=1)
    t = float(np.median(d2[iu])) if iu[0].size else 0.0
    return t if t > 0 else 1.0


def _kernel(X, scheme, t):
    X = np.asarray(X, dtype=float)
    if scheme == "dot":
        # cosine similarity clamped at 0; all-zero columns get zero affinity
        norms = np.linalg.norm(X, axis=0)
        safe = np.where(norms > 0, norms, 1.0)
        Xn = X / safe
        Xn[:, norms == 0] = 0.0
        return np.maximum(_sym(Xn.T @ Xn), 0.0), None
    if scheme == "dot-raw":
        return np.maximum(_sym(X.T @ X), 0.0), None
    if scheme == "heat":
        d2 = sq_distances(X)
        if t is None or t == "auto":
            t = auto_heat_t(d2)
        elif t <= 0:
            raise ValueError(f"heat-kernel t must be positive, got {t}")
        return np.exp(-d2 / t), float(t)
    raise ValueError(f"unknown weighting scheme {scheme!r}; expected one of {SCHEMES}")


def knn_mask(X, k: int, labels=None) -> np.ndarray:
    """Boolean mask: i is among j's k nearest neighbours or vice versa.

    With ``labels``, neighbours are searched within each class only and a
    class smaller than ``k + 1`` contributes all of its pairs.
    """
    n = X.shape[1]
    if not 1 <= k < n:
        raise ValueError(f"knn needs 1 <= k < n, got k={k}, n={n}")
    d2 = sq_distances(X)
    np.fill_diagonal(d2, np.inf)
    if labels is not None:
        labels = np.asarray(labels)
        d2[labels[:, None] != labels[None, :]] = np.inf
    nbrs = np.argsort(d2, axis=0, kind="stable")[:k]
    cols = np.broadcast_to(np.arange(n), nbrs.shape)
    keep = np.isfinite(d2[nbrs, cols])
    mask = np.zeros((n, n), dtype=bool)
    mask[nbrs[keep], cols[keep]] = True
    return mask | mask.T


def pairwise_weights(X, labels=None, scheme="dot", structure="within", k=5, t="auto"):
    """Build an AffinityMatrix over the columns of ``X``.

    Parameters
    ----------
    X : ndarray, shape (l, n)
    labels : array of int, optional
        Required for ``structure="within"``.
    scheme : {"dot", "dot-raw", "heat"}
        ``dot`` is cosine similarity clamped at zero; ``dot-raw`` the
        unnormalized inner product clamped at zero; ``heat`` is
        ``exp(-||xi - xj||^2 / t)``.
    structure : {"within", "within-knn", "knn", "complete"}
        Keep all same-class pairs, same-class k-nearest-neighbour pairs,
        symmetric k-nearest-neighbour pairs, or all pairs.
    """
    W, t_used = _kernel(X, scheme, t)
    if structure == "within":
        if labels is None:
            raise ValueError("within-class structure requires labels")
        labels = np.asarray(labels)
        W = np.where(labels[:, None] == labels[None, :], W, 0.0)
    elif structure == "within-knn":
        if labels is None:
            raise ValueError("within-knn structure requires labels")
        W = np.where(knn_mask(np.asarray(X, dtype=float), k, labels), W, 0.0)
    elif structure == "knn":
        W = np.where(knn_mask(np.asarray(X, dtype=float), k), W, 0.0)
    elif structure != "complete":
        raise ValueError(f"unknown structure {structure!r}; expected one of {STRUCTURES}")
    np.fill_diagonal(W, 0.0)
    return AffinityMatrix(W, scheme, structure, k if "knn" in structure else None, t_used)


def laplacian(A) -> np.ndarray:
    """``L = D - A`` with ``D`` the diagonal of row sums."""
    W = A.weights if isinstance(A, AffinityMatrix) else np.asarray(A, dtype=float)
    return np.diag(W.sum(axis=1)) - W


def degree_kernel(X, A) -> np.ndarray:
    """``X D X^T``, the usual LPP constraint matrix."""
    W = A.weights if isinstance(A, AffinityMatrix) else np.asarray(A, dtype=float)
    X = np.asarray(X, dtype=float)
    return _sym((X * W.sum(axis=1)) @ X.T)


def within_class_kernel(X, A_within) -> np.ndarray:
    """``K_l = X L X^T`` for the within-class graph."""
    X = np.asarray(X, dtype=float)
    L = laplacian(A_within)
    if L.shape[0] != X.shape[1]:
        raise ValueError(f"graph has {L.shape[0]} nodes but X has {X.shape[1]} samples")
    return _sym(X @ L @ X.T)


def class_means(X, labels):
    """Class mean matrix ``U`` (l x p, class-id order) and class sizes."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    U = np.stack([X[:, labels == c].mean(axis=1) for c in classes], axis=1)
    sizes = np.array([np.count_nonzero(labels == c) for c in classes])
    return U, sizes


def class_laplacian_kernel(U, scheme="dot", t="auto", U_weights=None) -> np.ndarray:
    """``K_c = U Q U^T`` with ``Q`` the Laplacian of the class-mean graph.

    ``U_weights`` (default ``U``) are the means the affinities ``B`` are
    computed from; pass the original-space means when ``U`` is pre-projected.
    """
    U = np.asarray(U, dtype=float)
    if U.shape[1] < 2:
        raise ValueError("class Laplacian needs at least 2 classes")
    B = pairwise_weights(U if U_weights is None else U_weights,
                         scheme=scheme, structure="complete", t=t)
    return _sym(U @ laplacian(B) @ U.T)


def between_class_scatter(U, sizes, global_mean) -> np.ndarray:
    """``S_b = sum_i n_i (u_i - u_bar)(u_i - u_bar)^T``."""
    D = np.asarray(U, dtype=float) - np.asarray(global_mean, dtype=float)[:, None]
    return _sym((D * np.asarray(sizes, dtype=float)) @ D.T)


def within_class_scatter(X, labels) -> np.ndarray:
    """``S_w = sum_c sum_{i in c} (x_i - u_c)(x_i - u_c)^T`` (used by LDA)."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    Xc = X.copy()
    for c in np.unique(labels):
        m = labels == c
        Xc[:, m] -= X[:, m].mean(axis=1, keepdims=True)
    return _sym(Xc @ Xc.T)
