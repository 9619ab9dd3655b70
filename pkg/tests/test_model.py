"""Tests for the system model: configs, constellations, pilots, frames."""

import math

import numpy as np
import pytest

from twrn_em import (ConfigurationError, channel_from_coeffs, draw_channel,
                     effective_noise_variance, make_config,
                     make_orthogonal_pilots, make_qam_constellation,
                     simulate_frame, trial_rng)

from conftest import make_instance


class TestMakeConfig:
    def test_amplification_factor_substitution(self):
        config = make_config(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=1)
        assert config.A == pytest.approx(1 / math.sqrt(3), abs=1e-12)

    def test_amplification_factor_low_noise_limit(self):
        config = make_config(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=1e-15)
        assert config.A == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_amplification_factor_general(self):
        config = make_config(L=8, N=32, M=16, P1=2, P2=2, Pr=4, sigma2=0.5)
        assert config.A == pytest.approx(math.sqrt(4 / 4.5), abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_amplification_factor_recompute(self, seed, rng):
        P1, P2, Pr, sigma2 = rng.uniform(0.1, 5.0, size=4)
        config = make_config(L=8, N=32, M=4, P1=P1, P2=P2, Pr=Pr, sigma2=sigma2)
        assert config.A == math.sqrt(Pr / (P1 + P2 + sigma2))

    @pytest.mark.parametrize("bad", [
        dict(L=0), dict(N=0), dict(P1=0.0), dict(P2=-1.0), dict(Pr=0.0),
        dict(sigma2=0.0), dict(M=8), dict(M=32),
    ])
    def test_rejects_bad_parameters(self, bad):
        params = dict(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=1)
        params.update(bad)
        with pytest.raises(ConfigurationError):
            make_config(**params)


class TestConstellation:
    def test_qpsk_points(self):
        c = make_qam_constellation(4, 1.0)
        expected = {(1 + 1j), (1 - 1j), (-1 + 1j), (-1 - 1j)}
        got = {complex(round(p.real * math.sqrt(2)), round(p.imag * math.sqrt(2)))
               for p in c.points}
        assert got == expected
        assert np.allclose(np.abs(c.points), 1.0, atol=1e-12)

    def test_16qam_scale(self):
        c = make_qam_constellation(16, 1.0)
        levels = sorted({round(p.real * math.sqrt(10)) for p in c.points})
        assert levels == [-3, -1, 1, 3]

    def test_64qam_scale_power_two(self):
        c = make_qam_constellation(64, 2.0)
        levels = sorted({round(p.real / math.sqrt(2.0 / 42.0)) for p in c.points})
        assert levels == [-7, -5, -3, -1, 1, 3, 5, 7]

    @pytest.mark.parametrize("M", [4, 16, 64])
    @pytest.mark.parametrize("power", [0.25, 1.0, 3.7])
    def test_normalization_and_symmetry(self, M, power):
        c = make_qam_constellation(M, power)
        assert len(c.points) == M
        mean_power = float(np.mean(np.abs(c.points) ** 2))
        assert abs(mean_power - power) <= 1e-12 * power
        assert abs(np.sum(c.points)) < 1e-12
        # square grid symmetric about the origin
        points = set(np.round(c.points, 12))
        assert all(complex(np.round(-p, 12)) in points for p in c.points)

    def test_rejects_unsupported_order(self):
        with pytest.raises(ConfigurationError):
            make_qam_constellation(8, 1.0)
        with pytest.raises(ConfigurationError):
            make_qam_constellation(4, 0.0)


class TestPilots:
    def test_minimal_length(self):
        p = make_orthogonal_pilots(2, 1.0, 1.0)
        assert np.vdot(p.t1, p.t2) == pytest.approx(0.0, abs=1e-14)
        assert np.real(np.vdot(p.t1, p.t1)) == pytest.approx(2.0, abs=1e-14)

    def test_reference_length_eight(self):
        p = make_orthogonal_pilots(8, 1.0, 1.0)
        assert np.real(np.vdot(p.t1, p.t1)) == pytest.approx(8.0, abs=1e-12)
        assert np.real(np.vdot(p.t2, p.t2)) == pytest.approx(8.0, abs=1e-12)
        assert abs(np.vdot(p.t1, p.t2)) < 1e-12

    def test_power_scaling(self):
        p = make_orthogonal_pilots(8, 2.0, 1.0)
        assert np.real(np.vdot(p.t1, p.t1)) == pytest.approx(16.0, abs=1e-12)
        assert np.real(np.vdot(p.t2, p.t2)) == pytest.approx(8.0, abs=1e-12)

    @pytest.mark.parametrize("L", [2, 4, 6, 8, 10, 16, 32, 64, 128, 256, 512, 1024])
    def test_invariants_over_even_lengths(self, L, rng):
        P1, P2 = rng.uniform(0.1, 4.0, size=2)
        p = make_orthogonal_pilots(L, P1, P2)
        assert abs(np.real(np.vdot(p.t1, p.t1)) - L * P1) <= 1e-12 * L * P1
        assert abs(np.real(np.vdot(p.t2, p.t2)) - L * P2) <= 1e-12 * L * P2
        assert abs(np.vdot(p.t1, p.t2)) < 1e-10 * L * math.sqrt(P1 * P2)
        # entries live on a scaled QPSK alphabet
        for vec, power in ((p.t1, P1), (p.t2, P2)):
            alphabet = math.sqrt(power) * np.array(
                [1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2)
            dist = np.min(np.abs(vec[:, None] - alphabet[None, :]), axis=1)
            assert np.max(dist) < 1e-12

    @pytest.mark.parametrize("L", [-2, 0, 3, 7])
    def test_rejects_bad_lengths(self, L):
        with pytest.raises(ConfigurationError):
            make_orthogonal_pilots(L, 1.0, 1.0)


class TestChannel:
    def test_cascade_from_injected_coefficients(self):
        ch = channel_from_coeffs(1.0, 1.0j)
        assert ch.a == 1.0 and ch.b == 1.0j

    def test_cascade_of_unit_imaginary(self):
        ch = channel_from_coeffs(1.0j, 0.3)
        assert ch.a == -1.0
        assert abs(ch.a) == pytest.approx(abs(ch.h) ** 2, abs=1e-15)

    def test_empirical_unit_variance(self):
        rng = np.random.default_rng(2024)
        draws = [draw_channel(rng) for _ in range(100_000)]
        mean_h = float(np.mean([abs(c.h) ** 2 for c in draws]))
        mean_g = float(np.mean([abs(c.g) ** 2 for c in draws]))
        assert 0.98 <= mean_h <= 1.02
        assert 0.98 <= mean_g <= 1.02


class TestSimulateFrame:
    def test_noiseless_pilot_identity(self):
        inst = make_instance(3, noise_scale=0.0)
        config, ch, p = inst.config, inst.channel, inst.pilots
        resid = inst.frame.y - config.A * ch.a * p.t1 - config.A * ch.b * p.t2
        assert np.max(np.abs(resid)) < 1e-12

    def test_noiseless_data_identity(self):
        inst = make_instance(4, noise_scale=0.0)
        config, ch, f = inst.config, inst.channel, inst.frame
        resid = f.z - config.A * ch.a * f.s1 - config.A * ch.b * f.s2_true
        assert np.max(np.abs(resid)) < 1e-12

    def test_symbols_come_from_the_alphabets(self):
        inst = make_instance(5, M=16)
        own = inst.constellation.points * math.sqrt(
            inst.config.P1 / inst.constellation.avg_power)
        for value in inst.frame.s1:
            assert np.min(np.abs(own - value)) < 1e-12
        for value in inst.frame.s2_true:
            assert np.min(np.abs(inst.constellation.points - value)) < 1e-12

    def test_deterministic_given_seed(self):
        a = make_instance(6, M=16, snr_db=10.0)
        b = make_instance(6, M=16, snr_db=10.0)
        assert np.array_equal(a.frame.y, b.frame.y)
        assert np.array_equal(a.frame.z, b.frame.z)
        assert np.array_equal(a.frame.s1, b.frame.s1)

    def test_effective_noise_variance_of_y(self):
        # pooled sample variance over many frames with the channel held fixed
        config = make_config(L=2, N=1, M=4, P1=1, P2=1, Pr=1, sigma2=0.8)
        constellation = make_qam_constellation(4, 1.0)
        pilots = make_orthogonal_pilots(2, 1.0, 1.0)
        rng = np.random.default_rng(77)
        channel = draw_channel(rng)
        mean = config.A * channel.a * pilots.t1 + config.A * channel.b * pilots.t2
        frames = 40_000
        noise = np.empty((frames, config.L), dtype=complex)
        for k in range(frames):
            frame = simulate_frame(config, constellation, pilots, channel, rng)
            noise[k] = frame.y - mean
        sample_var = float(np.mean(np.abs(noise) ** 2))
        expected = effective_noise_variance(config, channel.a)
        assert abs(sample_var - expected) <= 0.02 * expected


class TestEffectiveNoiseVariance:
    def test_direct_path_only(self):
        config = make_config(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=0.7)
        assert effective_noise_variance(config, 0.0) == pytest.approx(0.7)

    def test_unit_case(self):
        config = make_config(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=1.0)
        # force A = 1 by direct construction
        config = type(config)(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=1.0, A=1.0)
        assert effective_noise_variance(config, 1.0) == pytest.approx(2.0)

    def test_uses_modulus(self):
        config = make_config(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=2.0)
        config = type(config)(L=8, N=32, M=4, P1=1, P2=1, Pr=1, sigma2=2.0, A=0.5)
        assert effective_noise_variance(config, -4.0) == pytest.approx(4.0)


def test_trial_rng_is_reproducible():
    a = trial_rng(11, 3).standard_normal(4)
    b = trial_rng(11, 3).standard_normal(4)
    c = trial_rng(11, 4).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
