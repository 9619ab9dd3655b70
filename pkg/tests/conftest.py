"""Shared helpers for building seeded random test instances."""

from typing import NamedTuple

import numpy as np
import pytest

from twrn_em import (draw_channel, make_config, make_orthogonal_pilots,
                     make_qam_constellation, simulate_frame, snr_to_sigma2,
                     trial_rng)

SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
ORDERS = (4, 16, 64)


class Instance(NamedTuple):
    config: object
    constellation: object
    pilots: object
    channel: object
    frame: object


def make_instance(seed, snr_db=15.0, M=4, N=32, L=8, noise_scale=1.0,
                  sigma2=None) -> Instance:
    """One reproducible scenario + frame; sigma2 overrides the SNR if given."""
    if sigma2 is None:
        sigma2 = snr_to_sigma2(snr_db, 1.0)
    config = make_config(L=L, N=N, M=M, P1=1.0, P2=1.0, Pr=1.0, sigma2=sigma2)
    constellation = make_qam_constellation(M, config.P2)
    pilots = make_orthogonal_pilots(L, config.P1, config.P2)
    rng = trial_rng(seed, 0)
    channel = draw_channel(rng)
    frame = simulate_frame(config, constellation, pilots, channel, rng,
                           noise_scale=noise_scale)
    return Instance(config, constellation, pilots, channel, frame)


def sweep_instances(seed, count, N=32, L=8):
    """Instances cycling through the full SNR and modulation-order grids."""
    for k in range(count):
        yield make_instance(seed + k, snr_db=SNR_GRID[k % len(SNR_GRID)],
                            M=ORDERS[k % len(ORDERS)], N=N, L=L)


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
