"""Seeded Monte-Carlo experiments: total MSE versus SNR and versus iterations.

Each trial is a pure function of (seed, trial index): the per-trial
random stream is spawned from those two values alone, so serial and
parallel executions agree bit for bit, and trials at the same index
share their channel and noise realizations across grid cells (common
random numbers, which sharpens comparisons across modulation orders).
Noise is drawn before symbols inside each trial for the same reason.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimators import em_estimate
from .model import (ConfigurationError, draw_channel, make_config,
                    make_orthogonal_pilots, make_qam_constellation,
                    simulate_frame)

DEFAULT_SEED = 20230219


@dataclass(frozen=True)
class ExperimentSpec:
    """Scenario grid and protocol for one Monte-Carlo experiment."""

    L: int = 8
    n_values: tuple = (32,)
    mod_orders: tuple = (4, 16, 64)
    snr_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    P1: float = 1.0
    P2: float = 1.0
    Pr: float = 1.0
    trials: int = 100
    em_iters: int = 4
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class MseRecord:
    """Aggregated total MSE for one grid cell (and one EM iteration count).

    ``flags`` counts clamped-magnitude events across the cell's trials;
    ``excluded`` counts trials dropped for non-finite output (never part
    of the averages).
    """

    snr_db: float
    M: int
    N: int
    iteration: int
    mse_total_em: float
    mse_total_ls: float
    trials: int
    flags: int
    excluded: int = 0


def snr_to_sigma2(snr_db: float, P2: float) -> float:
    """Noise variance for a target SNR, defined as 10*log10(P2 / sigma2)."""
    if not P2 > 0:
        raise ConfigurationError(f"P2 must be positive, got {P2!r}")
    return P2 / 10.0 ** (snr_db / 10.0)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent, reproducible random stream for one trial."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def total_mse(estimates: Sequence, truths: Sequence) -> float:
    """Mean over trials of |a_hat - a|^2 + |b_hat - b|^2."""
    if len(estimates) != len(truths):
        raise ValueError(
            f"length mismatch: {len(estimates)} estimates vs {len(truths)} truths")
    errors = [abs(est.a - true.a) ** 2 + abs(est.b - true.b) ** 2
              for est, true in zip(estimates, truths)]
    return float(np.mean(errors))


def validate_spec(spec: ExperimentSpec) -> None:
    if spec.trials < 1:
        raise ConfigurationError(f"trials must be at least 1, got {spec.trials}")
    if spec.em_iters < 1:
        raise ConfigurationError(f"em_iters must be at least 1, got {spec.em_iters}")
    for name, grid in (("snr_grid_db", spec.snr_grid_db),
                       ("mod_orders", spec.mod_orders),
                       ("n_values", spec.n_values)):
        if len(grid) == 0:
            raise ConfigurationError(f"{name} must not be empty")


def run_mse_vs_snr(spec: ExperimentSpec, workers: int = 1) -> list:
    """Total MSE of EM (after spec.em_iters iterations) and LS per grid cell.

    One record per (snr, M, N) cell, in grid order. P1 = P2 = Pr and the
    LS estimate initializes EM, so the LS column is exactly the
    iteration-0 error of the same trials.
    """
    validate_spec(spec)
    cells = [(snr, M, N) for snr in spec.snr_grid_db
             for M in spec.mod_orders for N in spec.n_values]
    per_cell = _run_cells(spec, cells, workers)
    records = []
    for (snr, M, N), (mse_per_iter, flags, excluded, used) in zip(cells, per_cell):
        records.append(MseRecord(snr_db=float(snr), M=int(M), N=int(N),
                                 iteration=spec.em_iters,
                                 mse_total_em=float(mse_per_iter[-1]),
                                 mse_total_ls=float(mse_per_iter[0]),
                                 trials=used, flags=flags, excluded=excluded))
    return records


def run_mse_vs_iterations(spec: ExperimentSpec, workers: int = 1) -> list:
    """Total MSE after every EM iteration 0..em_iters per (M, N) cell.

    Iteration 0 is the LS initialization. Records are grouped per cell
    with the iteration index increasing inside each group.
    """
    validate_spec(spec)
    cells = [(snr, M, N) for snr in spec.snr_grid_db
             for M in spec.mod_orders for N in spec.n_values]
    per_cell = _run_cells(spec, cells, workers)
    records = []
    for (snr, M, N), (mse_per_iter, flags, excluded, used) in zip(cells, per_cell):
        for iteration, mse in enumerate(mse_per_iter):
            records.append(MseRecord(snr_db=float(snr), M=int(M), N=int(N),
                                     iteration=iteration,
                                     mse_total_em=float(mse),
                                     mse_total_ls=float(mse_per_iter[0]),
                                     trials=used, flags=flags, excluded=excluded))
    return records


def _run_cells(spec: ExperimentSpec, cells: list, workers: int) -> list:
    """Per-iteration mean squared errors for every cell, trial-parallel."""
    tasks = []
    for snr, M, N in cells:
        sigma2 = snr_to_sigma2(float(snr), spec.P2)
        for trial in range(spec.trials):
            tasks.append((spec.seed, trial, spec.L, int(N), int(M),
                          spec.P1, spec.P2, spec.Pr, sigma2, spec.em_iters))
    if workers <= 1:
        results = [_trial_task(task) for task in tasks]
    else:
        chunksize = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=chunksize))

    per_cell = []
    for index in range(len(cells)):
        chunk = results[index * spec.trials:(index + 1) * spec.trials]
        errors = np.stack([sq_errs for sq_errs, _ in chunk])
        flags = int(sum(clamps for _, clamps in chunk))
        finite = np.isfinite(errors).all(axis=1)
        excluded = int(spec.trials - finite.sum())
        mse_per_iter = errors[finite].mean(axis=0)
        per_cell.append((mse_per_iter, flags, excluded, int(finite.sum())))
    return per_cell


def _trial_task(args) -> tuple:
    """One Monte-Carlo trial: squared estimate errors after each iteration."""
    seed, trial, L, N, M, P1, P2, Pr, sigma2, em_iters = args
    config = make_config(L=L, N=N, M=M, P1=P1, P2=P2, Pr=Pr, sigma2=sigma2)
    constellation = make_qam_constellation(M, P2)
    pilots = make_orthogonal_pilots(L, P1, P2)
    rng = trial_rng(seed, trial)
    channel = draw_channel(rng)
    frame = simulate_frame(config, constellation, pilots, channel, rng)
    trajectory = em_estimate(frame, pilots, constellation, config, max_iters=em_iters)
    sq_errs = np.array([abs(theta.a - channel.a) ** 2 + abs(theta.b - channel.b) ** 2
                        for theta in trajectory.iterates])
    return sq_errs, trajectory.clamp_events
