"""Estimators for the cascaded channel gains of a two-way relay link.

Two estimators are provided:

* :func:`ls_estimate`, least squares on the pilot block alone. This is
  the conventional training-based baseline.
* :func:`em_estimate`, a semi-blind EM estimator that additionally
  exploits the received data block. The partner terminal's data symbols
  are hidden variables: each iteration scores every constellation
  hypothesis for every data sample (:func:`e_step`) and then maximizes
  the expected complete-data log-likelihood in closed form. The
  maximization runs in three closed-form stages: phase of the self-link
  gain (:func:`phase_update`), its magnitude (:func:`magnitude_update`,
  a quadratic because the effective noise variance itself grows with the
  magnitude), and finally the cross-link gain (:func:`b_given_a`).

Every update is the exact argmax of the expected log-likelihood, so the
incomplete-data log-likelihood is non-decreasing along the iteration.
All functions are pure; each iteration costs O(N*M) arithmetic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .model import (Constellation, PilotPair, ReceivedFrame, SystemConfig,
                    effective_noise_variance)


class DegenerateInputError(ValueError):
    """An estimator received inputs that make its solution undefined."""


@dataclass(frozen=True)
class ChannelEstimate:
    """Point estimate of the cascaded gains (a: self-link, b: cross-link)."""

    a: complex
    b: complex


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    """Per-sample symbol posteriors; beta[i, j] = P(symbol j | sample i)."""

    beta: np.ndarray


@dataclass(frozen=True)
class MStepAggregates:
    """Sufficient statistics for the closed-form maximization step.

    ``b_denom`` is the (real, positive) normal-equation denominator of the
    cross-gain update; ``obs_corr`` and ``self_corr`` correlate the symbol
    hypotheses with the observations and with the known self signal. With
    the cross gain eliminated, the weighted residual power becomes the
    quadratic resid_curv*x^2 - 2*resid_cross*x + resid_offset in the
    self-gain magnitude x, once the phase is set from ``phase_arg``
    (resid_cross = |phase_arg| / b_denom^2).
    """

    b_denom: float
    obs_corr: complex
    self_corr: complex
    resid_offset: float
    resid_curv: float
    resid_cross: float
    phase_arg: complex


class MagnitudeUpdate(NamedTuple):
    value: float
    clamped: bool


@dataclass
class EstimateTrajectory:
    """EM iterates (index 0 is the initialization) plus diagnostics.

    ``llf`` stays None until filled by :func:`twrn_em.oracle.trajectory_llf`.
    """

    iterates: list = field(default_factory=list)
    clamp_events: int = 0
    llf: Optional[list] = None

    @property
    def final(self) -> ChannelEstimate:
        return self.iterates[-1]


def ls_estimate(frame: ReceivedFrame, pilots: PilotPair,
                config: SystemConfig) -> ChannelEstimate:
    """Pilot-only least squares fit of the cascaded gains.

    Minimizes ||y - A*a*t1 - A*b*t2||^2. Orthogonal pilots decouple the
    problem, so each gain is a matched filter output divided by the
    pilot energy.
    """
    e1 = float(np.real(np.vdot(pilots.t1, pilots.t1)))
    e2 = float(np.real(np.vdot(pilots.t2, pilots.t2)))
    if e1 <= 0.0 or e2 <= 0.0:
        raise DegenerateInputError("pilot blocks must have positive energy")
    a = np.vdot(pilots.t1, frame.y) / (config.A * e1)
    b = np.vdot(pilots.t2, frame.y) / (config.A * e2)
    return ChannelEstimate(a=complex(a), b=complex(b))


def e_step(frame: ReceivedFrame, constellation: Constellation,
           theta: ChannelEstimate, config: SystemConfig) -> PosteriorTable:
    """Posterior probabilities of the hidden symbols at the current estimate.

    Row i is the softmax over hypotheses of -|z_i - A*a*s1_i - A*b*xi_j|^2
    divided by the effective noise variance; the row maximum is subtracted
    before exponentiation so extreme signal-to-noise ratios cannot
    overflow.
    """
    v = effective_noise_variance(config, theta.a)
    residual = frame.z[:, None] - config.A * theta.a * frame.s1[:, None] \
        - config.A * theta.b * constellation.points[None, :]
    exponents = -(np.abs(residual) ** 2) / v
    exponents -= exponents.max(axis=1, keepdims=True)
    beta = np.exp(exponents)
    beta /= beta.sum(axis=1, keepdims=True)
    return PosteriorTable(beta=beta)


def b_given_a(a: complex, posterior: PosteriorTable, frame: ReceivedFrame,
              pilots: PilotPair, constellation: Constellation,
              config: SystemConfig) -> complex:
    """Cross-link gain maximizing the expected log-likelihood at fixed ``a``.

    Both the posterior-weighted data correlations and the pilot matched
    filter contribute; the denominator weights each hypothesis by its
    symbol energy.
    """
    beta = posterior.beta
    A = config.A
    xi_conj = np.conj(constellation.points)
    data_num = np.sum(beta * (xi_conj[None, :] * (frame.z - A * a * frame.s1)[:, None]))
    num = data_num + np.vdot(pilots.t2, frame.y) - A * a * np.vdot(pilots.t2, pilots.t1)
    sym_energy = float(np.sum(beta @ (np.abs(constellation.points) ** 2)))
    den = A * (sym_energy + float(np.real(np.vdot(pilots.t2, pilots.t2))))
    if den <= 0.0:
        raise DegenerateInputError("cross-gain denominator is not positive")
    return complex(num / den)


def m_step_aggregates(posterior: PosteriorTable, frame: ReceivedFrame,
                      pilots: PilotPair, constellation: Constellation,
                      config: SystemConfig) -> MStepAggregates:
    """Reduce frame, pilots and posteriors to the M-step statistics.

    Eliminating the cross gain turns the expected residual power into an
    explicit quadratic in the self gain; everything the phase and
    magnitude updates need is collected here in O(N*M) arithmetic.
    """
    beta = posterior.beta
    A = config.A
    xi = constellation.points
    xi_conj = np.conj(xi)
    t1, t2, y, z, s1 = pilots.t1, pilots.t2, frame.y, frame.z, frame.s1

    pilot_energy = float(np.real(np.vdot(t2, t2)))
    sym_energy = float(np.sum(beta @ (np.abs(xi) ** 2)))
    g = A * (sym_energy + pilot_energy)
    obs_corr = complex(np.dot(z @ beta, xi_conj) + np.vdot(t2, y))
    self_corr = complex(np.dot(s1 @ beta, xi_conj) + np.vdot(t2, t1))

    # Residual pieces with the cross gain eliminated: the observation part
    # is independent of the self gain a, the signal part multiplies a.
    obs_data = g * z[:, None] - A * obs_corr * xi[None, :]
    sig_data = (A * A) * self_corr * xi[None, :] - A * g * s1[:, None]
    obs_pilot = g * y - A * obs_corr * t2
    sig_pilot = (A * A) * self_corr * t2 - A * g * t1

    g2 = g * g
    resid_offset = (float(np.sum(beta * np.abs(obs_data) ** 2))
                    + float(np.sum(np.abs(obs_pilot) ** 2))) / g2
    resid_curv = (float(np.sum(beta * np.abs(sig_data) ** 2))
                  + float(np.sum(np.abs(sig_pilot) ** 2))) / g2
    phase_arg = complex(np.sum(beta * np.conj(obs_data) * sig_data)
                        + np.vdot(obs_pilot, sig_pilot))
    resid_cross = abs(phase_arg) / g2
    return MStepAggregates(b_denom=g, obs_corr=obs_corr, self_corr=self_corr,
                           resid_offset=resid_offset, resid_curv=resid_curv,
                           resid_cross=resid_cross, phase_arg=phase_arg)


def phase_update(aggregates: MStepAggregates, fallback_phase: float = 0.0) -> float:
    """Optimal phase of the self-link gain, in (-pi, pi].

    The phase only enters the expected residual through the cross term,
    so the maximizer is pi minus the angle of ``phase_arg``. A zero cross
    term leaves the phase unidentifiable this iteration; the previous
    phase is returned instead.
    """
    if aggregates.phase_arg == 0:
        return _wrap_phase(fallback_phase)
    return _wrap_phase(math.pi - cmath.phase(aggregates.phase_arg))


def magnitude_update(aggregates: MStepAggregates, config: SystemConfig) -> MagnitudeUpdate:
    """Optimal magnitude of the self-link gain, clamped to be nonnegative.

    At the optimal phase the objective in the magnitude x is

        -(N + L) * log(pi * sigma2 * (A^2 x + 1)) -
        (resid_curv * x^2 - 2 * resid_cross * x + resid_offset)
            / (sigma2 * (A^2 x + 1)),

    N + L being the number of observed samples whose noise variance
    scales with x. Its stationarity condition is the quadratic

        A^2*V x^2 + (2V + m A^4 sigma2) x + (m A^2 sigma2 - A^2*U - 2W) = 0

    with m = N + L, U = resid_offset, V = resid_curv, W = resid_cross.
    The objective rises then falls, so the larger root is the maximizer
    whenever it is nonnegative; otherwise the maximum sits at x = 0 and
    the result is flagged as clamped. V = 0 degenerates to a linear
    equation.
    """
    A2 = config.A ** 2
    m = config.N + config.L
    u = aggregates.resid_offset
    v = aggregates.resid_curv
    w = aggregates.resid_cross
    lin = 2.0 * v + m * A2 * A2 * config.sigma2
    const = m * A2 * config.sigma2 - A2 * u - 2.0 * w
    quad = A2 * v
    if quad == 0.0:
        if lin == 0.0:
            return MagnitudeUpdate(0.0, True)
        x = -const / lin
    else:
        disc = lin * lin - 4.0 * quad * const
        if disc < 0.0:
            return MagnitudeUpdate(0.0, True)
        # Larger root, written to avoid cancellation when const is small.
        x = -2.0 * const / (lin + math.sqrt(disc))
    if x < 0.0:
        return MagnitudeUpdate(0.0, True)
    return MagnitudeUpdate(float(x), False)


def reduced_q(aggregates: MStepAggregates, a: complex, config: SystemConfig) -> float:
    """Expected log-likelihood at self gain ``a`` with the cross gain eliminated.

    Constant terms that do not depend on the parameters are dropped, as
    everywhere in this module.
    """
    v = effective_noise_variance(config, a)
    g2 = aggregates.b_denom ** 2
    resid = (aggregates.resid_offset + abs(a) ** 2 * aggregates.resid_curv
             + 2.0 * (a * aggregates.phase_arg).real / g2)
    return float(-(config.N + config.L) * math.log(math.pi * v) - resid / v)


def em_iterate(theta: ChannelEstimate, frame: ReceivedFrame, pilots: PilotPair,
               constellation: Constellation,
               config: SystemConfig) -> tuple[ChannelEstimate, bool]:
    """One full EM iteration; returns the new estimate and a clamp flag."""
    posterior = e_step(frame, constellation, theta, config)
    aggregates = m_step_aggregates(posterior, frame, pilots, constellation, config)
    fallback = cmath.phase(theta.a) if theta.a != 0 else 0.0
    phi = phase_update(aggregates, fallback_phase=fallback)
    magnitude = magnitude_update(aggregates, config)
    a_next = magnitude.value * cmath.exp(1j * phi)
    b_next = b_given_a(a_next, posterior, frame, pilots, constellation, config)
    return ChannelEstimate(a=a_next, b=b_next), magnitude.clamped


def em_estimate(frame: ReceivedFrame, pilots: PilotPair,
                constellation: Constellation, config: SystemConfig,
                init: Optional[ChannelEstimate] = None, max_iters: int = 4,
                rel_tol: Optional[float] = None) -> EstimateTrajectory:
    """Run EM from ``init`` (default: the pilot LS estimate).

    Stops after ``max_iters`` iterations, or earlier when ``rel_tol`` is
    given and the relative step |theta_next - theta| / |theta| falls
    below it. The full trajectory is recorded, initialization included.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters!r}")
    theta = init if init is not None else ls_estimate(frame, pilots, config)
    trajectory = EstimateTrajectory(iterates=[theta])
    for _ in range(max_iters):
        theta_next, clamped = em_iterate(theta, frame, pilots, constellation, config)
        trajectory.iterates.append(theta_next)
        trajectory.clamp_events += int(clamped)
        if rel_tol is not None:
            norm = math.hypot(abs(theta.a), abs(theta.b))
            step = math.hypot(abs(theta_next.a - theta.a), abs(theta_next.b - theta.b))
            if norm > 0.0 and step / norm < rel_tol:
                theta = theta_next
                break
        theta = theta_next
    return trajectory


def _wrap_phase(x: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    w = (x + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if w == -math.pi else w
