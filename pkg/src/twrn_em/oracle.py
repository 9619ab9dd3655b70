"""Exact reference computations used to verify the estimators.

Everything here is deliberately independent of the closed-form update
machinery in :mod:`twrn_em.estimators`: likelihoods are evaluated
straight from the signal model, the grid search expands the objective
from scratch, and gradients come from central differences. The test
suite and the command-line selfcheck lean on this module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .model import (Constellation, PilotPair, ReceivedFrame, SystemConfig,
                    effective_noise_variance)

BRUTE_FORCE_LIMIT = 4096


class OracleError(RuntimeError):
    """An oracle computation hit a non-finite value."""


@dataclass(frozen=True)
class GridSpec:
    """Inclusive 1-D grid: ``count`` points from ``lo`` to ``hi``."""

    lo: float
    hi: float
    count: int

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


def complete_llf(theta, frame: ReceivedFrame, s2: Sequence[complex],
                 pilots: PilotPair, config: SystemConfig) -> float:
    """Log-likelihood of (y, z, s2) jointly, hidden symbols included.

    The equiprobable symbol prior contributes -N*log(M); the rest is the
    product of per-entry complex Gaussian densities with the effective
    noise variance.
    """
    v = effective_noise_variance(config, theta.a)
    pilot_resid = frame.y - config.A * (theta.a * pilots.t1 + theta.b * pilots.t2)
    data_resid = frame.z - config.A * (theta.a * frame.s1 + theta.b * np.asarray(s2))
    n_obs = config.N + config.L
    return float(-config.N * math.log(config.M) - n_obs * math.log(math.pi * v)
                 - (_sqnorm(pilot_resid) + _sqnorm(data_resid)) / v)


def incomplete_llf(theta, frame: ReceivedFrame, pilots: PilotPair,
                   constellation: Constellation, config: SystemConfig) -> float:
    """Log-likelihood of the observations with hidden symbols marginalized.

    log p(y, z) = Gaussian log-density of y plus, per data sample, the
    log of the equiprobable mixture over constellation hypotheses,
    evaluated with log-sum-exp.
    """
    v = effective_noise_variance(config, theta.a)
    pilot_resid = frame.y - config.A * (theta.a * pilots.t1 + theta.b * pilots.t2)
    pilot_part = -config.L * math.log(math.pi * v) - _sqnorm(pilot_resid) / v
    d2 = np.abs(frame.z[:, None] - config.A * theta.a * frame.s1[:, None]
                - config.A * theta.b * constellation.points[None, :]) ** 2
    n_hyp = len(constellation.points)
    data_part = float(np.sum(logsumexp(-d2 / v, axis=1))) \
        - config.N * (math.log(n_hyp) + math.log(math.pi * v))
    return pilot_part + data_part


def q_value(theta, posterior, frame: ReceivedFrame, pilots: PilotPair,
            constellation: Constellation, config: SystemConfig) -> float:
    """Expected complete-data log-likelihood, evaluated term by term.

    This is the plain two-sum form (pilot residual plus posterior-weighted
    per-hypothesis data residuals); the parameter-free prior constant is
    dropped, matching :func:`twrn_em.estimators.reduced_q`.
    """
    v = effective_noise_variance(config, theta.a)
    pilot_resid = frame.y - config.A * (theta.a * pilots.t1 + theta.b * pilots.t2)
    d2 = np.abs(frame.z[:, None] - config.A * theta.a * frame.s1[:, None]
                - config.A * theta.b * constellation.points[None, :]) ** 2
    weighted = float(np.sum(posterior.beta * d2))
    n_obs = config.N + config.L
    return float(-n_obs * math.log(math.pi * v) - (_sqnorm(pilot_resid) + weighted) / v)


class _QStatistics(NamedTuple):
    """Coefficients of the expected residual as a quadratic form in (a, b)."""

    s0: float
    saa: float
    sbb: float
    sya: complex
    syb: complex
    sab: complex
    n_obs: int
    sigma2: float
    asq: float


def _q_statistics(posterior, frame: ReceivedFrame, pilots: PilotPair,
                  constellation: Constellation, config: SystemConfig) -> _QStatistics:
    beta = posterior.beta
    A = config.A
    xi = constellation.points
    row_w = beta.sum(axis=1)
    s0 = _sqnorm(frame.y) + float(np.sum(row_w * np.abs(frame.z) ** 2))
    saa = A * A * (_sqnorm(pilots.t1) + float(np.sum(row_w * np.abs(frame.s1) ** 2)))
    sbb = A * A * (_sqnorm(pilots.t2) + float(np.sum(beta @ (np.abs(xi) ** 2))))
    sya = A * (np.vdot(pilots.t1, frame.y)
               + np.sum(np.conj(frame.s1) * row_w * frame.z))
    syb = A * (np.vdot(pilots.t2, frame.y) + np.dot(frame.z @ beta, np.conj(xi)))
    sab = A * A * (np.vdot(pilots.t2, pilots.t1) + np.dot(frame.s1 @ beta, np.conj(xi)))
    return _QStatistics(s0=s0, saa=saa, sbb=sbb, sya=complex(sya), syb=complex(syb),
                        sab=complex(sab), n_obs=config.N + config.L,
                        sigma2=config.sigma2, asq=A * A)


def _q_from_statistics(stats: _QStatistics, a: np.ndarray, b: np.ndarray,
                       mag: np.ndarray) -> np.ndarray:
    resid = (stats.s0 + mag ** 2 * stats.saa + np.abs(b) ** 2 * stats.sbb
             - 2.0 * np.real(np.conj(a) * stats.sya)
             - 2.0 * np.real(np.conj(b) * stats.syb)
             + 2.0 * np.real(a * np.conj(b) * stats.sab))
    v = stats.sigma2 * (stats.asq * mag + 1.0)
    return -stats.n_obs * np.log(math.pi * v) - resid / v


def grid_maximize_Q(posterior, frame: ReceivedFrame, pilots: PilotPair,
                    constellation: Constellation, config: SystemConfig,
                    phase_grid: GridSpec, mag_grid: GridSpec):
    """Exhaustive search of the expected log-likelihood over a polar grid.

    The self gain ranges over the product grid magnitude x phase; at each
    point the cross gain is set to its conditional optimum. Returns the
    grid argmax as ``(a, b, q_max)``. The objective is evaluated through
    a direct quadratic expansion of the model residuals, so a million
    grid points stay cheap; its pointwise agreement with :func:`q_value`
    is itself under test.
    """
    stats = _q_statistics(posterior, frame, pilots, constellation, config)
    mags = mag_grid.points()
    phases = phase_grid.points()
    a = mags[:, None] * np.exp(1j * phases[None, :])
    b = (stats.syb - a * stats.sab) / stats.sbb
    q = _q_from_statistics(stats, a, b, mags[:, None])
    flat = int(np.argmax(q))
    i, j = np.unravel_index(flat, q.shape)
    return complex(a[i, j]), complex(b[i, j]), float(q[i, j])


def finite_diff_grad(f: Callable[[np.ndarray], float], point, step: float = None) -> np.ndarray:
    """Central-difference gradient, complex coordinates treated as two reals.

    ``point`` is a sequence of (possibly complex) scalars; the result has
    one entry per real coordinate, ordered (Re x0, Im x0, Re x1, ...).
    The default step is 1e-6 relative to the point's magnitude, which is
    what drives the oracle's achievable tolerance.
    """
    pt = np.asarray(point, dtype=complex).ravel()
    if step is None:
        step = 1e-6 * max(1.0, float(np.max(np.abs(pt))) if pt.size else 1.0)
    grad = np.empty(2 * pt.size)
    for k in range(pt.size):
        for part, delta in enumerate((step, 1j * step)):
            hi = pt.copy()
            lo = pt.copy()
            hi[k] += delta
            lo[k] -= delta
            f_hi, f_lo = f(hi), f(lo)
            if not (math.isfinite(f_hi) and math.isfinite(f_lo)):
                raise OracleError("non-finite evaluation in finite differences")
            grad[2 * k + part] = (f_hi - f_lo) / (2.0 * step)
    return grad


def brute_force_incomplete_llf(theta, frame: ReceivedFrame, pilots: PilotPair,
                               constellation: Constellation,
                               config: SystemConfig) -> float:
    """Marginal log-likelihood by explicit enumeration of hidden sequences.

    Exponential in N, so restricted to M^N <= 4096; larger cases are
    covered exactly by the per-symbol factorization in
    :func:`incomplete_llf`.
    """
    n_seqs = len(constellation.points) ** config.N
    if n_seqs > BRUTE_FORCE_LIMIT:
        raise OracleError(
            f"enumeration over {n_seqs} hidden sequences exceeds the "
            f"{BRUTE_FORCE_LIMIT} cap")
    values = [complete_llf(theta, frame, np.array(seq), pilots, config)
              for seq in itertools.product(constellation.points, repeat=config.N)]
    return float(logsumexp(values))


def trajectory_llf(trajectory, frame: ReceivedFrame, pilots: PilotPair,
                   constellation: Constellation, config: SystemConfig) -> list:
    """Incomplete-data log-likelihood at every iterate; also stored on the trajectory."""
    values = [incomplete_llf(theta, frame, pilots, constellation, config)
              for theta in trajectory.iterates]
    trajectory.llf = values
    return values


def _sqnorm(x: np.ndarray) -> float:
    return float(np.real(np.vdot(x, x)))
