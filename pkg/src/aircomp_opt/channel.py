"""Sensing, uplink channel, and receiver-noise simulation.

Channels follow the usual cellular uplink model: log-distance path loss
(128.1 + 37.6 log10(dist_km) in dB), log-normal shadowing, and Rayleigh
small-scale fading.  The channel vector is ``h_k = sqrt(phi_k) * rho_k``
with ``phi_k`` the linear large-scale power coefficient -- amplitudes scale
with the square root of the power coefficient.

All sampling functions take an explicit numpy Generator and are pure:
callers own parallelism and stream splitting (see :mod:`aircomp_opt.rng`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureStatistics, PcaProjection

PATH_LOSS_INTERCEPT_DB = 128.1
PATH_LOSS_SLOPE_DB = 37.6


@dataclass(frozen=True)
class DeviceProfile:
    """Static per-device parameters: sensing noise power, transmit power
    budget (watts), and planar position in meters relative to the server."""

    sensing_noise_power: float
    transmit_power: float
    position: tuple[float, float]

    def __post_init__(self):
        if self.sensing_noise_power < 0:
            raise ValueError("sensing noise power must be nonnegative")
        if self.transmit_power <= 0:
            raise ValueError("transmit power must be positive")
        object.__setattr__(self, "position", tuple(float(p) for p in self.position))

    @property
    def distance_km(self) -> float:
        x, y = self.position
        return float(np.hypot(x, y)) / 1000.0


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise power; real and imaginary parts carry half each."""

    power: float = 1.0

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("noise power must be nonnegative")


@dataclass(frozen=True)
class ChannelRealization:
    """One uplink realization: per-device channel rows plus its components."""

    gains: np.ndarray          # (K, N) complex
    large_scale: np.ndarray    # (K,) linear power coefficient
    shadowing_db: np.ndarray   # (K,)
    small_scale: np.ndarray    # (K, N) complex, unit-variance entries

    def __post_init__(self):
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("channel gains must be finite")

    @property
    def num_devices(self) -> int:
        return self.gains.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.gains.shape[1]


def path_loss_db(dist_km):
    """Log-distance path loss in dB; distance in kilometers, > 0."""
    dist_km = np.asarray(dist_km, dtype=float)
    if np.any(dist_km <= 0):
        raise ValueError("distance must be positive")
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * np.log10(dist_km)


def place_devices(
    num_devices: int,
    radius_m: float,
    rng: np.random.Generator,
    min_dist_m: float = 1.0,
) -> np.ndarray:
    """Positions uniform over the annulus [min_dist_m, radius_m] around the
    server; the inner cutoff avoids the path-loss singularity at zero range."""
    if not 0 < min_dist_m < radius_m:
        raise ValueError("need 0 < min_dist_m < radius_m")
    u = rng.uniform(size=num_devices)
    r = np.sqrt(u * (radius_m**2 - min_dist_m**2) + min_dist_m**2)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=num_devices)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def sample_channels(
    profiles,
    num_antennas: int,
    shadowing_var_db: float,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw one channel realization for the given devices.

    Shadowing is N(0, shadowing_var_db) in dB; small-scale fading is
    circularly-symmetric complex Gaussian with identity covariance.
    """
    if shadowing_var_db < 0:
        raise ValueError("shadowing variance must be nonnegative")
    dist = np.array([p.distance_km for p in profiles])
    pl = path_loss_db(dist)
    shadow = rng.normal(0.0, np.sqrt(shadowing_var_db), size=len(dist))
    phi = 10.0 ** ((-pl + shadow) / 10.0)
    k, n = len(dist), int(num_antennas)
    rho = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2)
    gains = np.sqrt(phi)[:, None] * rho
    return ChannelRealization(gains, phi, shadow, rho)


def sample_rx_noise(
    noise: NoiseModel,
    num_antennas: int,
    rng: np.random.Generator,
    num_draws: int | None = None,
):
    """Receiver noise vectors; real and imaginary parts are independent
    N(0, power/2) per antenna.  Returns (N,) or (num_draws, N)."""
    shape = (num_antennas,) if num_draws is None else (num_draws, num_antennas)
    scale = np.sqrt(noise.power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_observation(
    stats: FeatureStatistics,
    class_index: int,
    profiles,
    rng: np.random.Generator,
    proj: PcaProjection | None = None,
):
    """One sensing trial: shared ground-truth features plus per-device noise.

    Returns ``(x, xs)`` where ``x`` (M,) is the ground-truth feature draw for
    the given class and ``xs`` (K, M) stacks the device observations
    ``x + d_k`` with ``d_k ~ N(0, eps_k^2 I)``.  When a projection is given,
    the device noise is drawn in the raw space and projected (same law for a
    column-unitary basis; exercises the PCA front end).
    """
    if not 0 <= class_index < stats.num_classes:
        raise IndexError("class index out of range")
    m = stats.num_dims
    x = stats.centroids[class_index] + np.sqrt(stats.variances) * rng.standard_normal(m)
    xs = np.empty((len(profiles), m))
    for k, prof in enumerate(profiles):
        eps = np.sqrt(prof.sensing_noise_power)
        if proj is None:
            noise = eps * rng.standard_normal(m)
        else:
            noise = (eps * rng.standard_normal(proj.raw_dim)) @ proj.basis
        xs[k] = x + noise
    return x, xs


def sample_observation_batch(
    stats: FeatureStatistics,
    classes,
    eps2,
    rng: np.random.Generator,
):
    """Vectorized sensing trials.

    ``classes`` (n,) are class indices, ``eps2`` (K,) per-device sensing
    noise powers.  Returns ``(x, xs)`` with shapes (n, M) and (n, K, M); the
    ground-truth draw of each trial is shared by all devices.
    """
    classes = np.asarray(classes, dtype=int)
    eps2 = np.asarray(eps2, dtype=float).ravel()
    if classes.ndim != 1:
        raise ValueError("classes must be one-dimensional")
    if np.any(classes < 0) or np.any(classes >= stats.num_classes):
        raise IndexError("class index out of range")
    n, m, k = classes.shape[0], stats.num_dims, eps2.shape[0]
    x = stats.centroids[classes] + np.sqrt(stats.variances) * rng.standard_normal((n, m))
    d = np.sqrt(eps2)[None, :, None] * rng.standard_normal((n, k, m))
    return x, x[:, None, :] + d
