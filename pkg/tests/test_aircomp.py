"""Aggregation chain: packing, zero-forcing, superposition, power caps."""

import numpy as np
import pytest

from aircomp_opt import (
    BeamformerNullsDevice,
    DeviceProfile,
    TransceiverDesign,
    aggregate,
    aggregate_batch,
    check_design,
    make_design,
    max_precoding_power,
    pack_symbol,
    zf_precoders,
)
from aircomp_opt.rng import substream


def random_channels(seed, k, n):
    rng = substream(seed, "aircomp")
    return (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2)


class TestPackSymbol:
    def test_real_component(self):
        assert pack_symbol([1.0, 0.0], 0, 1) == 1 + 0j

    def test_imag_component(self):
        assert pack_symbol([0.0, -2.0], 0, 1) == -2j

    def test_lone_element(self):
        assert pack_symbol([3.0, 5.0], 1, None) == 5 + 0j

    def test_equal_indices_rejected(self):
        with pytest.raises(ValueError):
            pack_symbol([1.0, 2.0], 1, 1)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            pack_symbol([1.0, 2.0], 0, 2)

    def test_round_trip_through_ideal_channel(self):
        channels = np.array([[1.0 + 0j]])
        design = make_design([1.0], [1.0], channels)
        s = pack_symbol([0.7, -1.3], 0, 1)
        result = aggregate(design, [s], channels, np.zeros(1, dtype=complex))
        assert result.x_m1 == pytest.approx(0.7)
        assert result.x_m2 == pytest.approx(-1.3)


class TestZfPrecoders:
    def test_scalar_hand_case(self):
        # N=1, h=1, f = 1+j: the precoder is f / |f|^2 and lands at c=1
        b = zf_precoders([1.0], np.array([[1.0 + 0j]]), [1.0])
        f = 1.0 + 1.0j
        np.testing.assert_allclose(b[0], f / abs(f) ** 2)
        assert (np.conj(f) * 1.0 * b[0]).real == pytest.approx(1.0)
        assert (np.conj(f) * 1.0 * b[0]).imag == pytest.approx(0.0)

    def test_zero_steering_gives_zero_precoder(self):
        channels = random_channels(1, 3, 4)
        b = zf_precoders(np.ones(4), channels, [0.5, 0.0, 1.0])
        assert b[1] == 0.0
        assert b[0] != 0.0

    def test_identity_holds_to_high_precision(self):
        rng = substream(2, "zf")
        for _ in range(50):
            k, n = rng.integers(1, 5), rng.integers(1, 6)
            channels = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n)))
            f_hat = rng.standard_normal(n)
            c = rng.uniform(0.0, 2.0, k)
            b = zf_precoders(f_hat, channels, c)
            f = f_hat * (1 + 1j)
            achieved = (channels @ f.conj()) * b
            np.testing.assert_allclose(achieved, c, atol=1e-10 * max(c.max(), 1.0))

    def test_nulled_device_raises(self):
        f_hat = np.array([1.0, 0.0])
        channels = np.array([[0.0 + 0.0j, 1.0 + 0.0j]])  # orthogonal to f
        with pytest.raises(BeamformerNullsDevice):
            zf_precoders(f_hat, channels, [1.0])
        # zero steering tolerates the null
        b = zf_precoders(f_hat, channels, [0.0])
        assert b[0] == 0.0


class TestAggregate:
    def test_single_device_noiseless(self):
        channels = random_channels(3, 1, 4)
        f_hat = np.ones(4) / 2.0
        design = make_design(f_hat, [1.0], channels)
        s = pack_symbol([2.0, -0.5], 0, 1)
        out = aggregate(design, [s], channels, np.zeros(4, dtype=complex))
        assert out.x_m1 == pytest.approx(2.0)
        assert out.x_m2 == pytest.approx(-0.5)

    def test_two_devices_sum(self):
        channels = random_channels(4, 2, 3)
        design = make_design(np.array([0.2, -0.4, 1.0]), [1.0, 1.0], channels)
        x1, x2 = np.array([1.0, 2.0]), np.array([0.25, -1.0])
        s = [pack_symbol(x1, 0, 1), pack_symbol(x2, 0, 1)]
        out = aggregate(design, s, channels, np.zeros(3, dtype=complex))
        assert out.x_m1 == pytest.approx(x1[0] + x2[0])
        assert out.x_m2 == pytest.approx(x1[1] + x2[1])

    def test_linearity(self):
        channels = random_channels(5, 3, 4)
        design = make_design(np.array([1.0, 0.3, -0.2, 0.5]), [1.0, 0.5, 2.0], channels)
        rng = substream(5, "lin")
        s1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        s2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        n1 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        n2 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        a = aggregate(design, 2.0 * s1 + s2, channels, 2.0 * n1 + n2)
        b1 = aggregate(design, s1, channels, n1)
        b2 = aggregate(design, s2, channels, n2)
        assert a.x_m1 == pytest.approx(2 * b1.x_m1 + b2.x_m1)
        assert a.x_m2 == pytest.approx(2 * b1.x_m2 + b2.x_m2)

    def test_noise_statistics(self):
        # residual estimate noise is N(0, noise_power * f_hat.f_hat)
        channels = random_channels(6, 2, 3)
        f_hat = np.array([0.8, -0.1, 0.4])
        design = make_design(f_hat, [1.0, 1.0], channels)
        noise_power = 0.9
        draws = 10**5
        rng = substream(6, "agg")
        noise = np.sqrt(noise_power / 2) * (
            rng.standard_normal((draws, 3)) + 1j * rng.standard_normal((draws, 3))
        )
        est = aggregate_batch(design, np.zeros((draws, 2), dtype=complex), channels, noise)
        target = noise_power * float(f_hat @ f_hat)
        for col in (est[:, 0], est[:, 1]):
            assert abs(col.mean()) <= 4 * np.sqrt(target / draws)
            var = col.var(ddof=1)
            se = target * np.sqrt(2.0 / (draws - 1))
            assert abs(var - target) <= 3 * se

    def test_beamformer_scaling_property(self):
        # rescaling f_hat (with precoders re-derived) keeps the signal part
        # and scales the noise term linearly
        channels = random_channels(7, 2, 4)
        f_hat = substream(7, "f").standard_normal(4)
        c = np.array([1.0, 0.7])
        symbols = np.array([1.0 + 0.5j, -0.3 + 2.0j])
        noise = substream(7, "n").standard_normal(4) + 0j
        base = aggregate(make_design(f_hat, c, channels), symbols, channels, noise)
        for t in (0.5, 4.0):
            scaled = aggregate(make_design(t * f_hat, c, channels), symbols, channels, noise)
            signal = (c * symbols.real).sum()
            assert base.x_m1 - signal == pytest.approx((scaled.x_m1 - signal) / t)

    def test_batch_matches_scalar_loop(self):
        channels = random_channels(8, 3, 4)
        design = make_design(np.array([0.5, 1.0, -0.3, 0.2]), [1.0, 0.4, 0.9], channels)
        rng = substream(8, "batch")
        symbols = rng.standard_normal((20, 3)) + 1j * rng.standard_normal((20, 3))
        noise = rng.standard_normal((20, 4)) + 1j * rng.standard_normal((20, 4))
        batch = aggregate_batch(design, symbols, channels, noise)
        for i in range(20):
            single = aggregate(design, symbols[i], channels, noise[i])
            assert batch[i, 0] == pytest.approx(single.x_m1)
            assert batch[i, 1] == pytest.approx(single.x_m2)

    def test_dimension_mismatch(self):
        channels = random_channels(9, 2, 3)
        design = make_design(np.ones(3), [1.0, 1.0], channels)
        with pytest.raises(ValueError):
            aggregate(design, [1.0], channels, np.zeros(3, dtype=complex))
        with pytest.raises(ValueError):
            aggregate(design, [1.0, 1.0], channels, np.zeros(2, dtype=complex))


class TestMaxPrecodingPower:
    def test_hand_values(self):
        assert max_precoding_power(DeviceProfile(0.0, 2.0, (1, 0)), 2.0) == 1.0
        assert max_precoding_power(DeviceProfile(0.0, 1.0, (1, 0)), 4.0) == 0.25

    def test_nonpositive_moment_rejected(self):
        with pytest.raises(ValueError):
            max_precoding_power(DeviceProfile(0.0, 1.0, (1, 0)), 0.0)


class TestDesignValidation:
    def test_json_round_trip(self):
        channels = random_channels(10, 2, 3)
        design = make_design(np.array([1.0, 0.5, -0.5]), [0.8, 1.2], channels)
        back = TransceiverDesign.from_dict(design.to_dict())
        np.testing.assert_allclose(back.f_hat, design.f_hat)
        np.testing.assert_allclose(back.c, design.c)
        np.testing.assert_allclose(back.b, design.b)

    def test_check_design_accepts_valid(self):
        channels = random_channels(11, 2, 3)
        design = make_design(np.array([1.0, 0.5, -0.5]), [0.8, 1.2], channels)
        check_design(design, channels)

    def test_check_design_rejects_corrupted(self):
        channels = random_channels(11, 2, 3)
        design = make_design(np.array([1.0, 0.5, -0.5]), [0.8, 1.2], channels)
        broken = TransceiverDesign(design.f_hat, design.c, design.b * 1.5)
        with pytest.raises(ValueError):
            check_design(broken, channels)

    def test_check_design_power_budget(self):
        channels = random_channels(12, 1, 2)
        design = make_design(np.array([1.0, 0.2]), [1.0], channels)
        used = float(np.abs(design.b[0]) ** 2)
        profiles = [DeviceProfile(0.0, used * 2.0, (1, 0))]
        check_design(design, channels, profiles, [2.0])
        tight = [DeviceProfile(0.0, used * 2.0 * 0.5, (1, 0))]
        with pytest.raises(ValueError, match="power"):
            check_design(design, channels, tight, [2.0])
