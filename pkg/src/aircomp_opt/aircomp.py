"""Over-the-air aggregation chain: symbol packing, zero-forcing precoders,
superposition, and estimate extraction.

Two feature elements ride in one complex symbol (real and imaginary part).
The receive beamformer is the symmetric complex vector ``f = f_hat (1 + j)``;
zero-forcing precoders invert each device's effective channel ``f^H h_k`` so
device k lands exactly at its steering power ``c_k``, making the beamformed
receive symbol ``sum_k c_k s_k`` plus channel noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import DeviceProfile

ZF_REL_TOL = 1e-8
POWER_REL_TOL = 1e-8


class BeamformerNullsDevice(ValueError):
    """The receive beamformer is orthogonal to a device with nonzero steering."""


@dataclass(frozen=True)
class TransceiverDesign:
    """Receive beamformer half ``f_hat``, steering powers ``c`` and the
    zero-forcing precoders ``b`` they induce on a given channel."""

    f_hat: np.ndarray   # (N,) real
    c: np.ndarray       # (K,) nonnegative
    b: np.ndarray       # (K,) complex

    def __post_init__(self):
        object.__setattr__(self, "f_hat", np.asarray(self.f_hat, dtype=float).ravel())
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).ravel())
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex).ravel())
        if self.c.shape != self.b.shape:
            raise ValueError("c and b length mismatch")
        if np.any(self.c < 0):
            raise ValueError("steering powers must be nonnegative")

    @property
    def beamformer(self) -> np.ndarray:
        """Full complex receive beamformer with symmetric halves."""
        return self.f_hat * (1.0 + 1.0j)

    @property
    def num_devices(self) -> int:
        return self.c.shape[0]

    def to_dict(self) -> dict:
        return {
            "f_hat": self.f_hat.tolist(),
            "c": self.c.tolist(),
            "b_re": self.b.real.tolist(),
            "b_im": self.b.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TransceiverDesign":
        b = np.asarray(doc["b_re"], dtype=float) + 1j * np.asarray(
            doc["b_im"], dtype=float
        )
        return cls(np.asarray(doc["f_hat"]), np.asarray(doc["c"]), b)


@dataclass(frozen=True)
class AggregationResult:
    """Estimates extracted from one beamformed receive vector."""

    x_m1: float
    x_m2: float
    received: np.ndarray  # (N,) complex


def pack_symbol(x_k, m1: int, m2: int | None) -> complex:
    """Combine feature elements m1 and m2 of one observation into a symbol.

    ``m2=None`` transmits a lone element in the real part (odd tail of a
    feature pairing); otherwise the indices must differ.
    """
    x_k = np.asarray(x_k, dtype=float).ravel()
    if not 0 <= m1 < x_k.shape[0]:
        raise IndexError("m1 out of range")
    if m2 is None:
        return complex(x_k[m1], 0.0)
    if not 0 <= m2 < x_k.shape[0]:
        raise IndexError("m2 out of range")
    if m1 == m2:
        raise ValueError("m1 and m2 must differ")
    return complex(x_k[m1], x_k[m2])


def zf_precoders(f_hat, channels, c) -> np.ndarray:
    """Zero-forcing precoders ``b_k = c_k (h_k^H f) / |f^H h_k|^2``.

    Devices with zero steering get a zero precoder.  A device with nonzero
    steering but ``f^H h_k = 0`` cannot be forced and raises
    BeamformerNullsDevice; the optimizer's constraints keep it from emitting
    such designs.
    """
    f_hat = np.asarray(f_hat, dtype=float).ravel()
    channels = np.asarray(channels, dtype=complex)
    c = np.asarray(c, dtype=float).ravel()
    if channels.shape[0] != c.shape[0] or channels.shape[1] != f_hat.shape[0]:
        raise ValueError("shape mismatch between f_hat, channels, c")
    f = f_hat * (1.0 + 1.0j)
    effective = channels @ f.conj()          # f^H h_k per device
    strength = np.abs(effective) ** 2
    b = np.zeros_like(effective)
    scale = 2.0 * float(f_hat @ f_hat) * np.sum(np.abs(channels) ** 2, axis=1)
    for k in range(c.shape[0]):
        if c[k] == 0.0:
            continue
        if strength[k] <= scale[k] * 1e-30:
            raise BeamformerNullsDevice(f"beamformer nulls device {k}")
        b[k] = c[k] * np.conj(effective[k]) / strength[k]
    return b


def make_design(f_hat, c, channels) -> TransceiverDesign:
    """Build a TransceiverDesign from beamformer and steering powers."""
    return TransceiverDesign(f_hat, c, zf_precoders(f_hat, channels, c))


def check_design(
    design: TransceiverDesign,
    channels,
    profiles=None,
    second_moments=None,
    rel_tol: float = ZF_REL_TOL,
) -> None:
    """Validate the zero-forcing identity and, when transmit powers and
    symbol second moments are given, per-device power feasibility."""
    channels = np.asarray(channels, dtype=complex)
    f = design.beamformer
    achieved = (channels @ f.conj()) * design.b
    scale = max(1.0, float(np.max(design.c, initial=0.0)))
    if not np.allclose(achieved, design.c, atol=rel_tol * scale, rtol=rel_tol):
        raise ValueError("zero-forcing identity violated")
    if profiles is not None:
        second_moments = np.asarray(second_moments, dtype=float).ravel()
        for k, prof in enumerate(profiles):
            used = float(np.abs(design.b[k]) ** 2) * second_moments[k]
            if used > prof.transmit_power * (1.0 + POWER_REL_TOL):
                raise ValueError(f"device {k} exceeds its power budget")


def aggregate(
    design: TransceiverDesign,
    symbols,
    channels,
    noise,
) -> AggregationResult:
    """Superpose the precoded symbols over the channel and beamform.

    ``y = sum_k h_k b_k s_k + n``; the two feature estimates are the real and
    imaginary parts of ``f^H y``.
    """
    symbols = np.asarray(symbols, dtype=complex).ravel()
    channels = np.asarray(channels, dtype=complex)
    noise = np.asarray(noise, dtype=complex).ravel()
    if symbols.shape[0] != design.num_devices:
        raise ValueError("one symbol per device required")
    if noise.shape[0] != channels.shape[1]:
        raise ValueError("noise length must match antenna count")
    y = (design.b * symbols) @ channels + noise
    s_hat = complex(np.vdot(design.beamformer, y))
    return AggregationResult(s_hat.real, s_hat.imag, y)


def aggregate_batch(design: TransceiverDesign, symbols, channels, noise) -> np.ndarray:
    """Vectorized aggregation over trials.

    ``symbols`` (n, K) and ``noise`` (n, N) produce an (n, 2) array of
    real/imaginary estimates; row i equals ``aggregate`` on trial i.
    """
    symbols = np.asarray(symbols, dtype=complex)
    noise = np.asarray(noise, dtype=complex)
    channels = np.asarray(channels, dtype=complex)
    y = (symbols * design.b) @ channels + noise
    s_hat = y @ np.conj(design.beamformer)
    return np.column_stack([s_hat.real, s_hat.imag])


def max_precoding_power(profile: DeviceProfile, second_moment: float) -> float:
    """Precoding power cap ``P_k / E(s_k s_k^H)`` for a unit-symbol budget."""
    if second_moment <= 0:
        raise ValueError("symbol second moment must be positive")
    return profile.transmit_power / float(second_moment)
