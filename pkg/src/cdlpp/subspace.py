"""Projection learners reduced to symmetric-definite eigenproblems.

Every learner returns a :class:`ProjectionBasis` whose columns are unit
vectors in the learner's working space (the PCA pre-projected space when a
pre-projection is active). The pencil ``(A, B')`` actually solved is kept on
the basis so callers can audit residuals.

Minimization learners (LPP, DLPP, CSLPP, CDLPP) keep the smallest
eigenvalues above ``zero_tol_rel * lambda_max``; maximization learners (PCA,
LDA) keep the largest.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from . import graph
from .dataset import SampleMatrix

MIN_NONZERO = "min-nonzero"
MAX = "max"
SIGN_EPS = 1e-12


class InsufficientEigenpairsError(ValueError):
    """Fewer qualifying eigenpairs exist than were requested."""

    def __init__(self, requested, available, what="eigenvalues"):
        self.requested = requested
        self.available = available
        super().__init__(
            f"requested {requested} directions but only {available} qualifying {what} exist")


@dataclass(frozen=True)
class LearnerConfig:
    """Learner hyperparameters.

    ``pca_keep`` is ``"none"``, ``"rank-safe"`` (keep ``min(n - p, l)``
    principal directions, capped at the numerical rank) or an int. ``d=None``
    means ``p - 1``. The graph fields select how affinities are weighted
    and which pairs are kept.
    """

    d: int | None = None
    beta: float = 0.1
    ridge: float = 1e-6
    pca_keep: str | int = "rank-safe"
    zero_tol_rel: float = 1e-10
    scheme: str = "dot"
    within: str = "within"
    knn_k: int = 5
    heat_t: float | str = "auto"

    def __post_init__(self):
        if self.d is not None and self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.ridge <= 0 or self.zero_tol_rel <= 0:
            raise ValueError("ridge and zero_tol_rel must be positive")
        if not (self.pca_keep in ("none", "rank-safe")
                or (isinstance(self.pca_keep, int) and self.pca_keep >= 1)):
            raise ValueError(f"invalid pca_keep {self.pca_keep!r}")

    def replace(self, **kw) -> LearnerConfig:
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Learned projections.

    ``W`` is ``k x d`` in the working space; with a ``pre_projection`` ``P``
    (``l x k``) the effective pixel-space projection is ``P @ W``.
    """

    W: np.ndarray
    eigenvalues: np.ndarray
    pre_projection: np.ndarray | None = None
    method: str = ""
    config: dict = field(default_factory=dict)
    pencil: tuple | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[0] if self.pre_projection is None else self.pre_projection.shape[0]

    @property
    def effective(self) -> np.ndarray:
        return self.W if self.pre_projection is None else self.pre_projection @ self.W

    def truncate(self, d: int) -> ProjectionBasis:
        """First ``d`` directions (valid because columns are sorted)."""
        if not 1 <= d <= self.d:
            raise InsufficientEigenpairsError(d, self.d, "directions")
        return dataclasses.replace(self, W=self.W[:, :d], eigenvalues=self.eigenvalues[:d])


def fix_signs(W) -> np.ndarray:
    """Flip columns so the first entry with magnitude > 1e-12 is positive."""
    W = np.array(W, dtype=float, copy=True)
    for j in range(W.shape[1]):
        nz = np.flatnonzero(np.abs(W[:, j]) > SIGN_EPS)
        if nz.size and W[nz[0], j] < 0:
            W[:, j] = -W[:, j]
    return W


def _check_symmetric(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        raise ValueError(f"{name} is not symmetric")
    return (M + M.T) / 2.0


def regularize(B, ridge=1e-6):
    """Return ``(B', eps, lambda_min(B'))``.

    ``B' = B + eps I`` with ``eps = ridge * trace(B) / l`` whenever the
    smallest eigenvalue of ``B`` does not exceed ``eps``; otherwise ``B``.
    """
    l = B.shape[0]
    tr = float(np.trace(B))
    if not tr > 0:
        raise ValueError("denominator matrix has nonpositive trace (it is zero or not PSD)")
    eps = ridge * tr / l
    lam_min = float(linalg.eigvalsh(B, subset_by_index=[0, 0])[0])
    if lam_min <= eps:
        return B + eps * np.eye(l), eps, lam_min + eps
    return B, 0.0, lam_min


def solve_sym_definite_geig(A, B, cfg: LearnerConfig | None = None, direction=MIN_NONZERO,
                            d: int | None = None, method: str = "") -> ProjectionBasis:
    """Solve ``A w = lambda B' w`` and keep ``d`` qualifying eigenpairs.

    ``B'`` is ``B`` ridged per :func:`regularize`. The pencil is reduced
    with a Cholesky factor ``B' = C C^T`` to the standard symmetric problem
    ``C^-1 A C^-T v = lambda v``. Eigenvalues are reported as Rayleigh
    quotients of the returned (unit-norm, sign-fixed) vectors.

    ``direction="min-nonzero"`` keeps the smallest eigenvalues exceeding
    ``zero_tol_rel * lambda_max``; ``"max"`` keeps the largest ones.
    ``d=None`` keeps every qualifying pair.
    """
    cfg = cfg or LearnerConfig()
    A = _check_symmetric(A, "A")
    B = _check_symmetric(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"A {A.shape} and B {B.shape} differ in shape")
    if direction not in (MIN_NONZERO, MAX):
        raise ValueError(f"unknown direction {direction!r}")

    Bp, _, lam_min_b = regularize(B, cfg.ridge)
    C = linalg.cholesky(Bp, lower=True)
    T = linalg.solve_triangular(C, A, lower=True)
    M = linalg.solve_triangular(C, T.T, lower=True)
    M = (M + M.T) / 2.0
    theta, V = linalg.eigh(M)

    lam_max = float(theta[-1]) if theta.size else 0.0
    # eigenvalues of the reduced problem carry absolute error ~ eps * ||A|| / lambda_min(B')
    floor = 64 * np.finfo(float).eps * np.linalg.norm(A) / lam_min_b
    if lam_max <= floor:
        ok = np.zeros(theta.shape, dtype=bool)
    else:
        ok = theta > cfg.zero_tol_rel * lam_max
    idx = np.flatnonzero(ok)
    if direction == MAX:
        idx = idx[::-1]
    if d is None:
        d = idx.size
    if d < 1 or idx.size < d:
        raise InsufficientEigenpairsError(d, idx.size)
    idx = idx[:d]

    W = linalg.solve_triangular(C.T, V[:, idx], lower=False)
    W /= np.linalg.norm(W, axis=0)
    W = fix_signs(W)
    lam = np.einsum("ij,ij->j", W, A @ W) / np.einsum("ij,ij->j", W, Bp @ W)
    # keep the reported ordering consistent with the refined values
    order = np.argsort(lam, kind="stable")
    if direction == MAX:
        order = order[::-1]
    return ProjectionBasis(W[:, order], lam[order], None, method, cfg.to_dict(), (A, Bp))


# ---------------------------------------------------------------- PCA

def pca_components(X, k=None, tol=1e-10, route="auto"):
    """Principal directions of the mean-centered columns of ``X``.

    Returns ``(P, variances)`` sorted by decreasing variance, keeping
    directions with variance above ``tol * max`` (and at most ``k``). When
    ``l > n`` the ``n x n`` Gram matrix is diagonalized instead of the
    ``l x l`` covariance (``route="auto"``); ``route`` may force
    ``"gram"`` or ``"direct"``.
    """
    X = np.asarray(X, dtype=float)
    l, n = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 samples")
    Xc = X - X.mean(axis=1, keepdims=True)
    if route == "auto":
        route = "gram" if l > n else "direct"
    if route == "gram":
        G = Xc.T @ Xc
        mu, V = linalg.eigh((G + G.T) / 2.0)
        mu, V = mu[::-1], V[:, ::-1]
        keep = mu > tol * mu[0] if mu[0] > 0 else np.zeros(mu.shape, dtype=bool)
        mu, V = mu[keep], V[:, keep]
        P = (Xc @ V) / np.sqrt(mu)
        # one re-orthonormalization pass; the Gram route loses a little orthogonality
        P, _ = np.linalg.qr(P)
    elif route == "direct":
        S = Xc @ Xc.T
        mu, P = linalg.eigh((S + S.T) / 2.0)
        mu, P = mu[::-1], P[:, ::-1]
        keep = mu > tol * mu[0] if mu[0] > 0 else np.zeros(mu.shape, dtype=bool)
        mu, P = mu[keep], P[:, keep]
    else:
        raise ValueError(f"unknown PCA route {route!r}")
    if k is not None:
        P, mu = P[:, :k], mu[:k]
    return fix_signs(P), mu / (n - 1)


def _unpack(X, labels):
    if isinstance(X, SampleMatrix):
        return X.data, X.labels
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D (features x samples), got shape {X.shape}")
    return X, None if labels is None else np.asarray(labels)


def _n_classes(labels):
    return 0 if labels is None else np.unique(labels).size


def _require_classes(labels, what):
    if labels is None or _n_classes(labels) < 2:
        raise ValueError(f"{what} needs labels with at least 2 classes")


def pre_project(X, labels, cfg: LearnerConfig):
    """PCA pre-projection per ``cfg.pca_keep``; returns ``(P or None, P^T X)``."""
    if cfg.pca_keep == "none":
        return None, X
    l, n = X.shape
    if cfg.pca_keep == "rank-safe":
        k = min(n - max(_n_classes(labels), 1), l)
    else:
        k = min(int(cfg.pca_keep), l)
    if k < 1:
        raise InsufficientEigenpairsError(1, 0, "pre-projection dimensions")
    P, _ = pca_components(X, k)
    if P.shape[1] == 0:
        raise InsufficientEigenpairsError(1, 0, "pre-projection dimensions")
    return P, P.T @ X


def _finish(basis, P, method, cfg):
    return dataclasses.replace(basis, pre_projection=P, method=method, config=cfg.to_dict())


def _default_d(cfg, labels):
    if cfg.d is not None:
        return cfg.d
    p = _n_classes(labels)
    return max(p - 1, 1)


def fit_pca(X, labels=None, cfg: LearnerConfig | None = None, route="auto") -> ProjectionBasis:
    """Eigenfaces: top-``d`` principal directions, eigenvalues descending."""
    cfg = cfg or LearnerConfig()
    X, labels = _unpack(X, labels)
    P, var = pca_components(X, None, cfg.zero_tol_rel, route)
    d = P.shape[1] if labels is None and cfg.d is None else _default_d(cfg, labels)
    if d > P.shape[1]:
        raise InsufficientEigenpairsError(d, P.shape[1], "nonzero variance directions")
    Xc = X - X.mean(axis=1, keepdims=True)
    cov = Xc @ Xc.T / (X.shape[1] - 1)
    return ProjectionBasis(P[:, :d], var[:d], None, "pca", cfg.to_dict(),
                           ((cov + cov.T) / 2.0, np.eye(X.shape[0])))


def fit_lda(X, labels=None, cfg: LearnerConfig | None = None) -> ProjectionBasis:
    """Fisherfaces: maximize ``w^T S_b w / w^T S_w w`` (``d <= p - 1``)."""
    cfg = cfg or LearnerConfig()
    X, labels = _unpack(X, labels)
    _require_classes(labels, "LDA")
    p = _n_classes(labels)
    d = _default_d(cfg, labels)
    if d > p - 1:
        raise InsufficientEigenpairsError(d, p - 1, "discriminant directions (p - 1)")
    P, Z = pre_project(X, labels, cfg)
    U, sizes = graph.class_means(Z, labels)
    Sb = graph.between_class_scatter(U, sizes, Z.mean(axis=1))
    Sw = graph.within_class_scatter(Z, labels)
    basis = solve_sym_definite_geig(Sb, Sw, cfg, MAX, d)
    return _finish(basis, P, "lda", cfg)


def fit_lpp(X, labels=None, cfg: LearnerConfig | None = None, affinity=None) -> ProjectionBasis:
    """Laplacianfaces: minimize ``w^T X L X^T w`` subject to ``w^T X D X^T w = 1``.

    The graph is the symmetric kNN graph (``cfg.knn_k``) over all samples
    unless ``affinity`` is supplied.
    """
    cfg = cfg or LearnerConfig()
    X, labels = _unpack(X, labels)
    if affinity is None:
        affinity = graph.pairwise_weights(X, scheme=cfg.scheme, structure="knn",
                                          k=cfg.knn_k, t=cfg.heat_t)
    P, Z = pre_project(X, labels, cfg)
    A = graph.within_class_kernel(Z, affinity)
    B = graph.degree_kernel(Z, affinity)
    basis = solve_sym_definite_geig(A, B, cfg, MIN_NONZERO, _default_d(cfg, labels))
    return _finish(basis, P, "lpp", cfg)


def _within_affinity(X, labels, cfg):
    return graph.pairwise_weights(X, labels, scheme=cfg.scheme, structure=cfg.within,
                                  k=cfg.knn_k, t=cfg.heat_t)


def fit_dlpp(X, labels=None, cfg: LearnerConfig | None = None) -> ProjectionBasis:
    """Minimize ``w^T K_l w / w^T K_c w`` (within-class graph over class-mean graph)."""
    cfg = cfg or LearnerConfig()
    X, labels = _unpack(X, labels)
    _require_classes(labels, "DLPP")
    H = _within_affinity(X, labels, cfg)
    U, _ = graph.class_means(X, labels)
    P, Z = pre_project(X, labels, cfg)
    Kl = graph.within_class_kernel(Z, H)
    Uz = U if P is None else P.T @ U
    Kc = graph.class_laplacian_kernel(Uz, cfg.scheme, cfg.heat_t, U_weights=U)
    basis = solve_sym_definite_geig(Kl, Kc, cfg, MIN_NONZERO, _default_d(cfg, labels))
    return _finish(basis, P, "dlpp", cfg)


def _scatter_pencil_fit(X, labels, cfg, beta, method):
    X, labels = _unpack(X, labels)
    _require_classes(labels, method.upper())
    H = _within_affinity(X, labels, cfg)
    P, Z = pre_project(X, labels, cfg)
    Kl = graph.within_class_kernel(Z, H)
    U, sizes = graph.class_means(Z, labels)
    Sb = graph.between_class_scatter(U, sizes, Z.mean(axis=1))
    A = Kl + beta * np.eye(Kl.shape[0]) if beta else Kl
    basis = solve_sym_definite_geig(A, Sb, cfg, MIN_NONZERO, _default_d(cfg, labels))
    return _finish(basis, P, method, cfg)


def fit_cslpp(X, labels=None, cfg: LearnerConfig | None = None) -> ProjectionBasis:
    """Minimize ``w^T K_l w / w^T S_b w`` (DLPP with the between-class scatter)."""
    cfg = cfg or LearnerConfig()
    return _scatter_pencil_fit(X, labels, cfg, 0.0, "cslpp")


def fit_cdlpp(X, labels=None, cfg: LearnerConfig | None = None) -> ProjectionBasis:
    """Smallest nonzero eigenpairs of the pencil ``(K_l + beta I, S_b)``.

    ``beta * I`` is added in the working space, i.e. after any PCA
    pre-projection. ``beta = 0`` gives CSLPP.
    """
    cfg = cfg or LearnerConfig()
    return _scatter_pencil_fit(X, labels, cfg, float(cfg.beta), "cdlpp")


LEARNERS = {
    "pca": fit_pca,
    "lda": fit_lda,
    "lpp": fit_lpp,
    "dlpp": fit_dlpp,
    "cslpp": fit_cslpp,
    "cdlpp": fit_cdlpp,
}


def fit(method: str, X, labels=None, cfg: LearnerConfig | None = None) -> ProjectionBasis:
    try:
        learner = LEARNERS[method]
    except KeyError:
        raise ValueError(f"unknown learner {method!r}; expected one of {sorted(LEARNERS)}") from None
    return learner(X, labels, cfg)


def project(basis: ProjectionBasis, X) -> np.ndarray:
    """``Y = W^T (P^T X)``; a 1-D ``X`` is treated as a single sample."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    if X.shape[0] != basis.input_dim:
        raise ValueError(f"X has {X.shape[0]} features, basis expects {basis.input_dim}")
    Z = X if basis.pre_projection is None else basis.pre_projection.T @ X
    Y = basis.W.T @ Z
    return Y[:, 0] if single else Y


# ---------------------------------------------------------------- serialization
#
# Text layout, one item per line, in this order:
#   cdlpp-basis 1
#   method <name>
#   config <json>
#   pre_projection <rows> <cols>   | pre_projection none
#   <rows lines of cols values>
#   W <rows> <cols>
#   <rows lines of cols values>
#   eigenvalues <d>
#   <d values on one line>
# Values are written with 17 significant digits, which round-trips float64.

MAGIC = "cdlpp-basis 1"


def _write_matrix(fh, name, M):
    fh.write(f"{name} {M.shape[0]} {M.shape[1]}\n")
    for row in M:
        fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def save_basis(basis: ProjectionBasis, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"method {basis.method}\n")
        fh.write(f"config {json.dumps(basis.config, sort_keys=True)}\n")
        if basis.pre_projection is None:
            fh.write("pre_projection none\n")
        else:
            _write_matrix(fh, "pre_projection", basis.pre_projection)
        _write_matrix(fh, "W", basis.W)
        fh.write(f"eigenvalues {basis.eigenvalues.size}\n")
        fh.write(" ".join(f"{v:.17g}" for v in basis.eigenvalues) + "\n")


def _read_matrix(lines, header, name):
    parts = header.split()
    if parts[0] != name:
        raise ValueError(f"expected {name!r} section, found {parts[0]!r}")
    rows, cols = int(parts[1]), int(parts[2])
    M = np.array([[float(v) for v in next(lines).split()] for _ in range(rows)], dtype=float)
    return M.reshape(rows, cols)


def load_basis(path) -> ProjectionBasis:
    lines = iter(Path(path).read_text(encoding="utf-8").splitlines())
    if next(lines) != MAGIC:
        raise ValueError(f"{path}: not a basis file")
    method = next(lines).partition(" ")[2]
    config = json.loads(next(lines).partition(" ")[2])
    header = next(lines)
    P = None if header == "pre_projection none" else _read_matrix(lines, header, "pre_projection")
    W = _read_matrix(lines, next(lines), "W")
    d = int(next(lines).split()[1])
    ev = np.array([float(v) for v in next(lines).split()], dtype=float)
    if ev.size != d:
        raise ValueError(f"{path}: expected {d} eigenvalues, found {ev.size}")
    return ProjectionBasis(W, ev, P, method, config)
