"""Synthetic labeled datasets so experiments run without external downloads."""

from __future__ import annotations

import numpy as np

from ..dataset import SampleMatrix


def simplex_means(p: int, dims: int, gap: float) -> np.ndarray:
    """``p`` points in ``dims`` dimensions with every pairwise distance ``gap``.

    Needs ``dims >= p - 1``; uses the regular simplex spanned by the
    centered standard basis of R^p.
    """
    if dims < p - 1:
        raise ValueError(f"a {p}-point simplex needs {p - 1} dimensions, got {dims}")
    E = np.eye(p) - 1.0 / p
    # orthonormal basis of the sum-zero subspace
    Q, _ = np.linalg.qr(E)
    coords = E @ Q[:, : p - 1]
    coords *= gap / np.sqrt(2.0)
    out = np.zeros((dims, p))
    out[: p - 1] = coords.T
    return out


def gaussian_classes(classes=5, per_class=20, signal_dims=4, noise_dims=46, mean_gap=8.0,
                     sigma=1.0, noise_sigma=None, offset=0.0, within_cov=None, means=None,
                     seed=0):
    """Gaussian classes with a known discriminant subspace.

    Class means differ only in the first ``signal_dims`` coordinates. With
    ``classes - 1 <= signal_dims`` they form a regular simplex with pairwise
    distance ``mean_gap * sigma``; otherwise they are drawn at random and
    scaled to that typical spacing. The remaining ``noise_dims`` coordinates
    are pure noise (standard deviation ``noise_sigma``, default ``sigma``).
    ``within_cov`` optionally replaces the isotropic within-class covariance
    and ``means`` (``signal_dims x classes``) the generated class means.
    ``offset`` is added to every feature (keeps cosine weights informative).
    Samples are ordered class by class.
    """
    rng = np.random.default_rng(seed)
    l = signal_dims + noise_dims
    if means is not None:
        means = np.asarray(means, dtype=float)
        if means.shape != (signal_dims, classes):
            raise ValueError(f"means must have shape {(signal_dims, classes)}, got {means.shape}")
    elif classes - 1 <= signal_dims:
        means = simplex_means(classes, signal_dims, mean_gap * sigma)
    else:
        means = rng.normal(size=(signal_dims, classes))
        means *= mean_gap * sigma / np.sqrt(2.0 * signal_dims)
    noise_sigma = sigma if noise_sigma is None else noise_sigma
    scales = np.r_[np.full(signal_dims, sigma), np.full(noise_dims, noise_sigma)]
    cols, labels = [], []
    for c in range(classes):
        if within_cov is not None:
            Z = rng.multivariate_normal(np.zeros(l), within_cov, size=per_class).T
        else:
            Z = rng.normal(size=(l, per_class)) * scales[:, None]
        Z[:signal_dims] += means[:, c:c + 1]
        cols.append(Z)
        labels += [c + 1] * per_class
    data = np.concatenate(cols, axis=1) + offset
    return SampleMatrix(data, np.array(labels), {c: c for c in range(1, classes + 1)})


def class_grid(groups=3, per_group=5, per_class=11, group_gap=1.0, class_gap=0.3,
               group_sigma=0.3, sigma=0.05, noise_dims=48, offset=0.5, seed=0):
    """Class means on a ``groups x per_group`` grid in the first two coordinates.

    Groups are ``group_gap`` apart along coordinate 0, classes within a group
    ``class_gap`` apart along coordinate 1. Coordinate 0 carries within-class
    spread ``group_sigma``, every other coordinate ``sigma``. Near classes
    therefore differ only along coordinate 1 while the distant groups are
    separated along a noisy axis, which a locality-weighted class graph barely
    rewards. Class ids run group by group.
    """
    g = np.arange(groups) - (groups - 1) / 2.0
    k = np.arange(per_group) - (per_group - 1) / 2.0
    means = np.array([[gi * group_gap, ki * class_gap] for gi in g for ki in k]).T
    cov = np.diag(np.r_[group_sigma ** 2, np.full(1 + noise_dims, sigma ** 2)])
    return gaussian_classes(groups * per_group, per_class, 2, noise_dims, sigma=sigma,
                            offset=offset, within_cov=cov, means=means, seed=seed)


GENERATORS = {"gaussian": gaussian_classes, "grid": class_grid}
