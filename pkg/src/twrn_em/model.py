"""System model for a two-phase amplify-and-forward two-way relay link.

Two terminals exchange a block of pilots followed by a block of data
symbols through a relay that scales what it hears by a fixed factor and
rebroadcasts it. With reciprocal flat fading (terminal 1 sees channel h,
terminal 2 sees g, identical in both directions), the signal arriving
back at terminal 1 depends on the channels only through the cascaded
gains a = h^2 (its own signal looping back) and b = h*g (the partner's
signal). Those two complex scalars are what the estimators in this
package recover.

The relay also forwards its own receiver noise, so the effective noise
variance at terminal 1 is sigma2 * (A^2 |a| + 1): it grows with the
self-link gain magnitude. See :func:`effective_noise_variance`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)


class ConfigurationError(ValueError):
    """Invalid scenario parameter or construction request."""


@dataclass(frozen=True)
class SystemConfig:
    """Scenario scalars plus the derived relay amplification factor.

    L is the pilot block length, N the data block length, M the square-QAM
    order of the data alphabet. P1, P2 are the terminals' average transmit
    powers, Pr the relay's long-term power budget, sigma2 the per-entry
    complex noise variance. A is derived so the relay output power stays
    at Pr: A = sqrt(Pr / (P1 + P2 + sigma2)).
    """

    L: int
    N: int
    M: int
    P1: float
    P2: float
    Pr: float
    sigma2: float
    A: float


@dataclass(frozen=True, eq=False)
class Constellation:
    """Square QAM alphabet normalized to a target average symbol power."""

    order: int
    points: np.ndarray
    avg_power: float


@dataclass(frozen=True, eq=False)
class PilotPair:
    """Orthogonal pilot blocks for the two terminals, QPSK entries."""

    t1: np.ndarray
    t2: np.ndarray


@dataclass(frozen=True)
class ChannelState:
    """Terminal-relay coefficients h, g and the cascaded gains a, b."""

    h: complex
    g: complex
    a: complex
    b: complex


@dataclass(frozen=True, eq=False)
class ReceivedFrame:
    """One realization of the observables at terminal 1.

    y is the received pilot block, z the received data block, s1 the
    terminal's own transmitted data (known to its receiver). s2_true is
    the partner's hidden data, retained for scoring only and never shown
    to the estimators.
    """

    y: np.ndarray
    z: np.ndarray
    s1: np.ndarray
    s2_true: np.ndarray


def make_config(L: int, N: int, M: int, P1: float, P2: float, Pr: float,
                sigma2: float) -> SystemConfig:
    """Validate scenario scalars and derive the amplification factor."""
    for name, value in (("L", L), ("N", N)):
        if not isinstance(value, (int, np.integer)) or value <= 0:
            raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
    if M not in SUPPORTED_ORDERS:
        raise ConfigurationError(
            f"unsupported modulation order {M!r}; expected one of {SUPPORTED_ORDERS}")
    for name, value in (("P1", P1), ("P2", P2), ("Pr", Pr), ("sigma2", sigma2)):
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value!r}")
    A = math.sqrt(Pr / (P1 + P2 + sigma2))
    return SystemConfig(L=int(L), N=int(N), M=int(M), P1=float(P1), P2=float(P2),
                        Pr=float(Pr), sigma2=float(sigma2), A=A)


def make_qam_constellation(M: int, avg_power: float) -> Constellation:
    """Square QAM grid on odd integer levels, scaled to the target power.

    The per-axis levels are +/-1, +/-3, ..., +/-(sqrt(M)-1); the common
    scale factor enforces mean(|point|^2) == avg_power.
    """
    if M not in SUPPORTED_ORDERS:
        raise ConfigurationError(
            f"unsupported modulation order {M!r}; expected one of {SUPPORTED_ORDERS}")
    if not avg_power > 0:
        raise ConfigurationError(f"avg_power must be positive, got {avg_power!r}")
    side = int(round(math.sqrt(M)))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    points = (levels[:, None] + 1j * levels[None, :]).reshape(-1)
    scale = math.sqrt(avg_power * M / float(np.sum(np.abs(points) ** 2)))
    return Constellation(order=M, points=points * scale, avg_power=float(avg_power))


def make_orthogonal_pilots(L: int, P1: float, P2: float) -> PilotPair:
    """Constant and sign-alternating QPSK pilot blocks.

    Terminal 1 repeats one QPSK point, terminal 2 alternates its sign, so
    the two blocks are orthogonal for any even L while each keeps its
    per-symbol power (t1^H t1 = L*P1, t2^H t2 = L*P2).
    """
    if not isinstance(L, (int, np.integer)) or L <= 0 or L % 2:
        raise ConfigurationError(f"pilot length must be a positive even integer, got {L!r}")
    for name, value in (("P1", P1), ("P2", P2)):
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value!r}")
    qpsk = (1.0 + 1.0j) / math.sqrt(2.0)
    signs = np.where(np.arange(L) % 2 == 0, 1.0, -1.0)
    t1 = np.full(L, math.sqrt(P1) * qpsk)
    t2 = math.sqrt(P2) * qpsk * signs
    return PilotPair(t1=t1, t2=t2)


def channel_from_coeffs(h: complex, g: complex) -> ChannelState:
    """Build the channel state for given coefficients (a = h^2, b = h*g)."""
    h = complex(h)
    g = complex(g)
    return ChannelState(h=h, g=g, a=h * h, b=h * g)


def draw_channel(rng: np.random.Generator) -> ChannelState:
    """Draw h, g as independent unit-variance circularly-symmetric Gaussians."""
    coeffs = _complex_normal(rng, 2, 1.0)
    return channel_from_coeffs(coeffs[0], coeffs[1])


def simulate_frame(config: SystemConfig, constellation: Constellation,
                   pilots: PilotPair, channel: ChannelState,
                   rng: np.random.Generator,
                   noise_scale: float = 1.0) -> ReceivedFrame:
    """Simulate both transmission phases and return the observables.

    ``constellation`` is terminal 2's data alphabet (build it with
    avg_power = P2); terminal 1 reuses the same grid rescaled to P1. All
    four noise blocks (relay and terminal, pilot and data phase) are
    i.i.d. circularly symmetric with per-entry variance sigma2, drawn
    before the symbols so that runs with equal (L, N) share noise
    realizations across modulation orders. ``noise_scale = 0`` injects
    exactly zero noise while keeping the draw sequence intact.
    """
    relay_pilot_noise = noise_scale * _complex_normal(rng, config.L, config.sigma2)
    term_pilot_noise = noise_scale * _complex_normal(rng, config.L, config.sigma2)
    relay_data_noise = noise_scale * _complex_normal(rng, config.N, config.sigma2)
    term_data_noise = noise_scale * _complex_normal(rng, config.N, config.sigma2)

    own_scale = math.sqrt(config.P1 / constellation.avg_power)
    s1 = own_scale * constellation.points[rng.integers(0, constellation.order, config.N)]
    s2 = constellation.points[rng.integers(0, constellation.order, config.N)]

    A, h = config.A, channel.h
    y = A * channel.a * pilots.t1 + A * channel.b * pilots.t2 \
        + A * h * relay_pilot_noise + term_pilot_noise
    z = A * channel.a * s1 + A * channel.b * s2 \
        + A * h * relay_data_noise + term_data_noise
    return ReceivedFrame(y=y, z=z, s1=s1, s2_true=s2)


def effective_noise_variance(config: SystemConfig, a: complex) -> float:
    """Per-entry variance of the total noise at terminal 1: sigma2*(A^2|a|+1).

    The relay forwards its own noise through the return channel h, whose
    power |h|^2 equals |a|, on top of the terminal's local noise.
    """
    return config.sigma2 * (config.A ** 2 * abs(a) + 1.0)


def _complex_normal(rng: np.random.Generator, n: int, var: float) -> np.ndarray:
    """n i.i.d. circularly-symmetric complex Gaussians with variance ``var``."""
    scale = math.sqrt(var / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
