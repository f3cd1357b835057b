"""Gaussian-mixture feature model and discriminant-gain computations.

The feature space is an M-dimensional Gaussian mixture with one component
per class: component ``l`` has centroid ``mu[l]`` and a shared diagonal
covariance ``diag(var)``.  Class separability is measured by the pairwise
discriminant gain (squared centroid distance over variance), averaged over
all class pairs.  The same quantities are available for the post-aggregation
feature estimates, whose centroids scale with the total steering power and
whose variance picks up sensing and channel noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNITARY_TOL = 1e-9


# ---------------------------------------------------------------------------
# PCA front end
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaProjection:
    """Column-unitary projection onto the top principal directions.

    ``basis`` has shape (S, M): S raw dimensions, M feature dimensions.
    """

    basis: np.ndarray

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "basis", basis)
        s, m = basis.shape
        if m > s:
            raise ValueError(f"feature dim {m} exceeds raw dim {s}")
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(m), atol=UNITARY_TOL, rtol=0.0):
            raise ValueError("basis is not column-unitary")

    @property
    def raw_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.basis.shape[1]


def pca_fit(samples, target_dim: int) -> PcaProjection:
    """Fit the top ``target_dim`` principal directions of the sample covariance.

    Raises ValueError when there are fewer samples than requested dimensions
    or when the centered covariance has rank below ``target_dim``.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n, s = samples.shape
    m = int(target_dim)
    if m < 1:
        raise ValueError("target_dim must be >= 1")
    if m > s:
        raise ValueError(f"target_dim {m} exceeds raw dimension {s}")
    if n < m:
        raise ValueError(f"need at least {m} samples, got {n}")
    cov = np.cov(samples, rowvar=False)
    cov = np.atleast_2d(cov)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    if evals[m - 1] <= max(evals[0], 0.0) * 1e-12:
        raise ValueError(
            f"sample covariance rank < {m}; reduce target_dim or add samples"
        )
    basis = evecs[:, :m]
    # deterministic sign: largest-magnitude entry of each column positive
    for j in range(m):
        k = int(np.argmax(np.abs(basis[:, j])))
        if basis[k, j] < 0:
            basis[:, j] = -basis[:, j]
    return PcaProjection(basis)


def pca_project(raw, proj: PcaProjection) -> np.ndarray:
    """Project raw vectors (shape (S,) or (n, S)) into the feature space."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1] != proj.raw_dim:
        raise ValueError(
            f"raw dimension {raw.shape[-1]} does not match basis rows {proj.raw_dim}"
        )
    return raw @ proj.basis


# ---------------------------------------------------------------------------
# Mixture statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureStatistics:
    """Per-class centroids (L, M) and shared per-dimension variances (M,)."""

    centroids: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        centroids = np.atleast_2d(np.asarray(self.centroids, dtype=float))
        variances = np.asarray(self.variances, dtype=float).ravel()
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "variances", variances)
        if centroids.shape[1] != variances.shape[0]:
            raise ValueError("centroids and variances disagree on dimension count")
        if not np.all(variances > 0):
            raise ValueError("all variances must be strictly positive")

    @property
    def num_classes(self) -> int:
        return self.centroids.shape[0]

    @property
    def num_dims(self) -> int:
        return self.centroids.shape[1]

    def to_dict(self) -> dict:
        return {
            "L": self.num_classes,
            "M": self.num_dims,
            "centroids": self.centroids.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureStatistics":
        stats = cls(np.asarray(doc["centroids"]), np.asarray(doc["variances"]))
        if stats.num_classes != int(doc["L"]) or stats.num_dims != int(doc["M"]):
            raise ValueError("L/M fields disagree with array shapes")
        return stats


def fit_feature_statistics(features, labels) -> FeatureStatistics:
    """Per-class sample means with a pooled per-dimension variance.

    Pooling reflects the class-independent covariance of the mixture model.
    Labels must be 0..L-1 with every class present and n > L samples overall.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=int).ravel()
    if labels.shape[0] != features.shape[0]:
        raise ValueError("features and labels length mismatch")
    num_classes = int(labels.max()) + 1 if labels.size else 0
    if num_classes < 1 or not np.array_equal(
        np.unique(labels), np.arange(num_classes)
    ):
        raise ValueError("labels must cover 0..L-1")
    n, m = features.shape
    if n - num_classes < 1:
        raise ValueError("need more samples than classes for a pooled variance")
    centroids = np.empty((num_classes, m))
    pooled = np.zeros(m)
    for l in range(num_classes):
        block = features[labels == l]
        centroids[l] = block.mean(axis=0)
        pooled += ((block - centroids[l]) ** 2).sum(axis=0)
    pooled /= n - num_classes
    return FeatureStatistics(centroids, pooled)


def synthetic_mixture(
    num_classes: int,
    num_dims: int,
    seed: int = 0,
    centroid_scale: float = 1.6,
    decay: float = 0.88,
) -> FeatureStatistics:
    """Deterministic synthetic mixture with unit variances.

    Centroid spread shrinks geometrically with the dimension index, so
    leading dimensions carry larger discriminant gains (PCA-like ordering).
    """
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5EED)))
    spread = centroid_scale * decay ** np.arange(num_dims)
    centroids = rng.standard_normal((num_classes, num_dims)) * spread
    centroids -= centroids.mean(axis=0)
    return FeatureStatistics(centroids, np.ones(num_dims))


# ---------------------------------------------------------------------------
# Discriminant gains of the ground-truth features
# ---------------------------------------------------------------------------

def class_pairs(num_classes: int) -> list[tuple[int, int]]:
    """All unordered class pairs (l, l') with l < l', in lexicographic order."""
    return [
        (l, lp) for lp in range(num_classes) for l in range(lp)
    ]


def pair_weight(num_classes: int) -> float:
    """Averaging prefactor 2 / (L (L - 1)) over class pairs."""
    if num_classes < 2:
        raise ValueError("discriminant gain needs at least two classes")
    return 2.0 / (num_classes * (num_classes - 1))


def pairwise_element_gain(stats: FeatureStatistics, l: int, lp: int, m: int) -> float:
    """Squared centroid gap of classes (l, lp) on dimension m over its variance."""
    num_classes, num_dims = stats.num_classes, stats.num_dims
    if not (0 <= l < num_classes and 0 <= lp < num_classes):
        raise IndexError("class index out of range")
    if l == lp:
        raise ValueError("class indices must differ")
    if not 0 <= m < num_dims:
        raise IndexError("dimension index out of range")
    diff = stats.centroids[l, m] - stats.centroids[lp, m]
    return float(diff**2 / stats.variances[m])


def element_gains(stats: FeatureStatistics) -> np.ndarray:
    """Per-dimension discriminant gain, averaged over class pairs (shape (M,))."""
    w = pair_weight(stats.num_classes)
    total = np.zeros(stats.num_dims)
    for l, lp in class_pairs(stats.num_classes):
        total += (stats.centroids[l] - stats.centroids[lp]) ** 2 / stats.variances
    return w * total


def total_gain(stats: FeatureStatistics, dims) -> float:
    """Discriminant gain summed over the given dimensions.

    Additive over disjoint dimension sets and nonnegative; zero only when all
    class centroids coincide on the selected dimensions.
    """
    dims = list(dims)
    if not dims:
        raise ValueError("dims must be nonempty")
    per_dim = element_gains(stats)
    for m in dims:
        if not 0 <= m < stats.num_dims:
            raise IndexError(f"dimension {m} out of range")
    return float(per_dim[dims].sum())


# ---------------------------------------------------------------------------
# Post-aggregation statistics and gains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReceivedElementStats:
    """Mixture statistics of one aggregated feature element.

    centroids: per-class means, equal to ``sum(c) * mu[:, m]``.
    variance:  ``var_m * sum(c)^2 + sum(c_k^2 eps_k^2) + noise * f.f``.
    """

    centroids: np.ndarray
    variance: float

    def __post_init__(self):
        object.__setattr__(
            self, "centroids", np.asarray(self.centroids, dtype=float).ravel()
        )
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")


def received_element_stats(
    stats: FeatureStatistics,
    m: int,
    c,
    f_hat,
    eps2,
    noise_power: float,
) -> ReceivedElementStats:
    """Statistics of the aggregated estimate of feature element ``m``.

    ``c`` are the per-device steering powers, ``f_hat`` the real half of the
    symmetric receive beamformer, ``eps2`` the per-device sensing noise powers
    and ``noise_power`` the channel noise power.
    """
    c = np.asarray(c, dtype=float).ravel()
    f_hat = np.asarray(f_hat, dtype=float).ravel()
    eps2 = np.asarray(eps2, dtype=float).ravel()
    if eps2.shape != c.shape:
        raise ValueError("c and eps2 length mismatch")
    if np.any(c < 0):
        raise ValueError("steering powers must be nonnegative")
    if np.any(eps2 < 0) or noise_power < 0:
        raise ValueError("noise powers must be nonnegative")
    if not 0 <= m < stats.num_dims:
        raise IndexError("dimension index out of range")
    total_c = c.sum()
    variance = (
        stats.variances[m] * total_c**2
        + float((c**2 * eps2).sum())
        + noise_power * float(f_hat @ f_hat)
    )
    return ReceivedElementStats(total_c * stats.centroids[:, m], float(variance))


def received_gain(
    stats: FeatureStatistics,
    c,
    f_hat,
    eps2,
    noise_power: float,
    dims,
) -> float:
    """Discriminant gain of the aggregated feature elements in ``dims``.

    Rejects the all-zero design (zero received variance) instead of
    returning an infinite gain.
    """
    dims = tuple(dims)
    if not dims:
        raise ValueError("dims must be nonempty")
    w = pair_weight(stats.num_classes)
    gain = 0.0
    for m in dims:
        rx = received_element_stats(stats, m, c, f_hat, eps2, noise_power)
        if rx.variance == 0.0:
            raise ValueError("all-zero design: received variance is zero")
        for l, lp in class_pairs(stats.num_classes):
            gain += w * (rx.centroids[l] - rx.centroids[lp]) ** 2 / rx.variance
    return float(gain)


def symbol_second_moment(stats: FeatureStatistics, eps2_k: float, dims) -> float:
    """Second moment of the transmit symbol packing the elements in ``dims``.

    Computed analytically from the mixture: each element contributes
    ``mean(mu[:, m]^2) + var_m + eps2_k``.
    """
    dims = tuple(dims)
    if not dims:
        raise ValueError("dims must be nonempty")
    if eps2_k < 0:
        raise ValueError("sensing noise power must be nonnegative")
    moment = 0.0
    for m in dims:
        if not 0 <= m < stats.num_dims:
            raise IndexError(f"dimension {m} out of range")
        moment += (
            float((stats.centroids[:, m] ** 2).mean())
            + stats.variances[m]
            + eps2_k
        )
    return float(moment)
