"""Semi-blind EM channel estimation for amplify-and-forward two-way relays.

The package is organized as:

* :mod:`twrn_em.model`: constellations, pilots, channels and the
  two-phase transmission simulator.
* :mod:`twrn_em.estimators`: the pilot-only LS baseline and the
  semi-blind EM estimator.
* :mod:`twrn_em.oracle`: exact reference computations (likelihoods, grid
  search, finite differences) used to verify the estimators.
* :mod:`twrn_em.harness`: seeded Monte-Carlo experiments.
* :mod:`twrn_em.reporting` and :mod:`twrn_em.cli`: CSV/manifest/figure
  output and the ``twrn-em`` command.
"""

__version__ = "0.1.0"

from .estimators import (ChannelEstimate, DegenerateInputError,
                         EstimateTrajectory, MagnitudeUpdate, MStepAggregates,
                         PosteriorTable, b_given_a, e_step, em_estimate,
                         em_iterate, ls_estimate, m_step_aggregates,
                         magnitude_update, phase_update, reduced_q)
from .harness import (DEFAULT_SEED, ExperimentSpec, MseRecord,
                      run_mse_vs_iterations, run_mse_vs_snr, snr_to_sigma2,
                      total_mse, trial_rng)
from .model import (SUPPORTED_ORDERS, ChannelState, ConfigurationError,
                    Constellation, PilotPair, ReceivedFrame, SystemConfig,
                    channel_from_coeffs, draw_channel,
                    effective_noise_variance, make_config,
                    make_orthogonal_pilots, make_qam_constellation,
                    simulate_frame)
from .oracle import (GridSpec, OracleError, brute_force_incomplete_llf,
                     complete_llf, finite_diff_grad, grid_maximize_Q,
                     incomplete_llf, q_value, trajectory_llf)
from .selfcheck import CheckResult, run_selfcheck

__all__ = [
    "__version__",
    "SUPPORTED_ORDERS", "DEFAULT_SEED",
    "ConfigurationError", "DegenerateInputError", "OracleError",
    "SystemConfig", "Constellation", "PilotPair", "ChannelState",
    "ReceivedFrame", "ChannelEstimate", "PosteriorTable", "MStepAggregates",
    "MagnitudeUpdate", "EstimateTrajectory", "GridSpec", "ExperimentSpec",
    "MseRecord", "CheckResult",
    "make_config", "make_qam_constellation", "make_orthogonal_pilots",
    "channel_from_coeffs", "draw_channel", "simulate_frame",
    "effective_noise_variance",
    "ls_estimate", "e_step", "b_given_a", "m_step_aggregates", "phase_update",
    "magnitude_update", "reduced_q", "em_iterate", "em_estimate",
    "complete_llf", "incomplete_llf", "q_value", "grid_maximize_Q",
    "finite_diff_grad", "brute_force_incomplete_llf", "trajectory_llf",
    "snr_to_sigma2", "trial_rng", "total_mse", "run_mse_vs_snr",
    "run_mse_vs_iterations", "run_selfcheck",
]
