"""Oracle-backed invariant checks, exposed as the ``selfcheck`` CLI command.

Each check exercises the estimator through an independent route from
:mod:`twrn_em.oracle` (direct likelihood evaluation, grid search, finite
differences), so a broken update formula fails loudly here.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import estimators
from .harness import snr_to_sigma2, trial_rng
from .model import (draw_channel, make_config, make_orthogonal_pilots,
                    make_qam_constellation, simulate_frame)
from .oracle import GridSpec, finite_diff_grad, grid_maximize_Q, incomplete_llf, q_value

SELFCHECK_SEED = 424242


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def run_selfcheck(seed: int = SELFCHECK_SEED) -> list:
    return [
        _check_posterior_normalization(seed),
        _check_em_ascent(seed),
        _check_mstep_grid_agreement(seed),
        _check_b_gradient(seed),
        _check_noiseless_recovery(seed),
    ]


def _instance(rng, snr_db: float, M: int, N: int = 32, L: int = 8,
              noise_scale: float = 1.0):
    sigma2 = snr_to_sigma2(snr_db, 1.0)
    config = make_config(L=L, N=N, M=M, P1=1.0, P2=1.0, Pr=1.0, sigma2=sigma2)
    constellation = make_qam_constellation(M, config.P2)
    pilots = make_orthogonal_pilots(L, config.P1, config.P2)
    channel = draw_channel(rng)
    frame = simulate_frame(config, constellation, pilots, channel, rng,
                           noise_scale=noise_scale)
    return config, constellation, pilots, channel, frame


def _sweep(seed: int, count: int):
    """Deterministic stream of instances spanning the SNR and order grids."""
    snrs = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    orders = (4, 16, 64)
    for k in range(count):
        rng = trial_rng(seed, k)
        yield _instance(rng, snrs[k % len(snrs)], orders[k % len(orders)])


def _check_posterior_normalization(seed: int) -> CheckResult:
    worst = 0.0
    for config, constellation, pilots, channel, frame in _sweep(seed, 50):
        theta = estimators.ls_estimate(frame, pilots, config)
        posterior = estimators.e_step(frame, constellation, theta, config)
        worst = max(worst, float(np.max(np.abs(posterior.beta.sum(axis=1) - 1.0))))
    return CheckResult("posterior-normalization", worst < 1e-12,
                       f"max row-sum deviation {worst:.3e}")


def _check_em_ascent(seed: int) -> CheckResult:
    worst = 0.0
    for config, constellation, pilots, channel, frame in _sweep(seed, 100):
        trajectory = estimators.em_estimate(frame, pilots, constellation, config,
                                            max_iters=4)
        llf = [incomplete_llf(theta, frame, pilots, constellation, config)
               for theta in trajectory.iterates]
        drops = [llf[t] - llf[t + 1] for t in range(len(llf) - 1)]
        worst = max(worst, max(drops))
    return CheckResult("em-ascent", worst < 1e-9,
                       f"worst log-likelihood drop {worst:.3e}")


def _check_mstep_grid_agreement(seed: int) -> CheckResult:
    count = 1000
    worst_q_gap = 0.0
    cells_off = 0
    for config, constellation, pilots, channel, frame in _sweep(seed, 10):
        theta = estimators.ls_estimate(frame, pilots, config)
        posterior = estimators.e_step(frame, constellation, theta, config)
        aggregates = estimators.m_step_aggregates(posterior, frame, pilots,
                                                  constellation, config)
        phi = estimators.phase_update(aggregates)
        mag = estimators.magnitude_update(aggregates, config).value
        a_closed = mag * complex(math.cos(phi), math.sin(phi))
        b_closed = estimators.b_given_a(a_closed, posterior, frame, pilots,
                                        constellation, config)
        hi = 4.0 * max(mag, abs(theta.a), 0.25)
        a_grid, _, q_grid = grid_maximize_Q(
            posterior, frame, pilots, constellation, config,
            GridSpec(-math.pi, math.pi, count), GridSpec(0.0, hi, count))
        q_closed = q_value(estimators.ChannelEstimate(a_closed, b_closed),
                           posterior, frame, pilots, constellation, config)
        worst_q_gap = max(worst_q_gap, q_grid - q_closed)
        mag_cell = hi / (count - 1)
        phase_cell = 2.0 * math.pi / (count - 1)
        phase_err = abs(_circular_diff(math.atan2(a_grid.imag, a_grid.real), phi))
        if abs(abs(a_grid) - mag) > mag_cell or (mag > mag_cell and phase_err > phase_cell):
            cells_off += 1
    passed = worst_q_gap < 1e-6 and cells_off == 0
    return CheckResult("mstep-grid-agreement", passed,
                       f"worst Q gap {worst_q_gap:.3e}, off-cell count {cells_off}")


def _check_b_gradient(seed: int) -> CheckResult:
    worst = 0.0
    for config, constellation, pilots, channel, frame in _sweep(seed, 10):
        theta = estimators.ls_estimate(frame, pilots, config)
        posterior = estimators.e_step(frame, constellation, theta, config)
        theta_next, _ = estimators.em_iterate(theta, frame, pilots, constellation,
                                              config)
        b_opt = estimators.b_given_a(theta_next.a, posterior, frame, pilots,
                                     constellation, config)

        def q_of_b(point, _a=theta_next.a):
            candidate = estimators.ChannelEstimate(a=_a, b=complex(point[0]))
            return q_value(candidate, posterior, frame, pilots, constellation, config)

        grad = finite_diff_grad(q_of_b, [b_opt])
        worst = max(worst, float(np.max(np.abs(grad))))
    return CheckResult("b-gradient", worst < 1e-6,
                       f"max |dQ/db| at optimum {worst:.3e}")


def _check_noiseless_recovery(seed: int) -> CheckResult:
    worst_ls = 0.0
    worst_em = 0.0
    for k in range(20):
        rng = trial_rng(seed, 10_000 + k)
        config, constellation, pilots, channel, frame = _instance(
            rng, 120.0, (4, 16, 64)[k % 3], noise_scale=0.0)
        ls = estimators.ls_estimate(frame, pilots, config)
        worst_ls = max(worst_ls, abs(ls.a - channel.a), abs(ls.b - channel.b))
        trajectory = estimators.em_estimate(frame, pilots, constellation, config,
                                            max_iters=4)
        final = trajectory.final
        worst_em = max(worst_em, abs(final.a - channel.a), abs(final.b - channel.b))
    passed = worst_ls < 1e-10 and worst_em < 1e-8
    return CheckResult("noiseless-recovery", passed,
                       f"worst LS error {worst_ls:.3e}, worst EM error {worst_em:.3e}")


def _circular_diff(x: float, y: float) -> float:
    d = (x - y) % (2.0 * math.pi)
    return d - 2.0 * math.pi if d > math.pi else d
