"""Tests for the Monte-Carlo experiment runner."""

import numpy as np
import pytest

from twrn_em import (ChannelEstimate, ConfigurationError, ExperimentSpec,
                     run_mse_vs_iterations, run_mse_vs_snr, snr_to_sigma2,
                     total_mse)

SMALL = ExperimentSpec(trials=6, snr_grid_db=(5.0, 15.0), mod_orders=(4, 16),
                       n_values=(16,), em_iters=3, seed=99)


class TestSnrToSigma2:
    def test_zero_db(self):
        assert snr_to_sigma2(0.0, 1.0) == pytest.approx(1.0)

    def test_ten_db(self):
        assert snr_to_sigma2(10.0, 1.0) == pytest.approx(0.1)

    def test_fifteen_db_p2_two(self):
        assert snr_to_sigma2(15.0, 2.0) == pytest.approx(2 / 10 ** 1.5, abs=1e-12)
        assert snr_to_sigma2(15.0, 2.0) == pytest.approx(0.063245553, abs=1e-9)

    def test_rejects_nonpositive_power(self):
        with pytest.raises(ConfigurationError):
            snr_to_sigma2(10.0, 0.0)


class TestTotalMse:
    def test_perfect_estimates(self):
        truths = [ChannelEstimate(1 + 1j, -2j), ChannelEstimate(0.5, 0.1)]
        assert total_mse(truths, truths) == 0.0

    def test_single_trial(self):
        est = [ChannelEstimate(2.0, 1j)]
        true = [ChannelEstimate(1.0, 0.0)]
        assert total_mse(est, true) == pytest.approx(2.0)

    def test_two_trials_mean(self):
        est = [ChannelEstimate(1.0, 0.0), ChannelEstimate(0.0, 1.0)]
        true = [ChannelEstimate(0.0, 0.0), ChannelEstimate(0.0, 0.0)]
        assert total_mse(est, true) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            total_mse([ChannelEstimate(0, 0)], [])


class TestRunMseVsSnr:
    def test_grid_shape_and_order(self):
        records = run_mse_vs_snr(SMALL)
        assert len(records) == 4
        assert [(r.snr_db, r.M) for r in records] == [
            (5.0, 4), (5.0, 16), (15.0, 4), (15.0, 16)]
        for r in records:
            assert r.iteration == SMALL.em_iters
            assert r.trials == SMALL.trials
            assert r.mse_total_em >= 0.0 and r.mse_total_ls >= 0.0
            assert r.excluded == 0

    def test_deterministic_given_seed(self):
        assert run_mse_vs_snr(SMALL) == run_mse_vs_snr(SMALL)

    def test_seed_changes_results(self):
        other = ExperimentSpec(**{**SMALL.__dict__, "seed": 100})
        assert run_mse_vs_snr(other) != run_mse_vs_snr(SMALL)

    def test_parallel_matches_serial_exactly(self):
        assert run_mse_vs_snr(SMALL, workers=2) == run_mse_vs_snr(SMALL, workers=1)

    def test_ls_column_is_order_independent(self):
        # common random numbers: the LS error ignores the data block, so at a
        # fixed SNR it is identical across modulation orders
        records = run_mse_vs_snr(SMALL)
        by_snr = {}
        for r in records:
            by_snr.setdefault(r.snr_db, set()).add(r.mse_total_ls)
        for values in by_snr.values():
            assert len(values) == 1

    def test_em_beats_ls_at_moderate_snr(self):
        spec = ExperimentSpec(trials=30, snr_grid_db=(15.0,), mod_orders=(4,),
                              n_values=(32,), em_iters=4, seed=7)
        record = run_mse_vs_snr(spec)[0]
        assert record.mse_total_em < record.mse_total_ls

    def test_rejects_empty_grid(self):
        with pytest.raises(ConfigurationError):
            run_mse_vs_snr(ExperimentSpec(snr_grid_db=()))
        with pytest.raises(ConfigurationError):
            run_mse_vs_snr(ExperimentSpec(trials=0))


class TestRunMseVsIterations:
    def test_rows_and_iteration_zero_is_ls(self):
        spec = ExperimentSpec(trials=5, snr_grid_db=(15.0,), mod_orders=(4, 16),
                              n_values=(16, 24), em_iters=3, seed=5)
        records = run_mse_vs_iterations(spec)
        assert len(records) == 4 * 4  # (M, N) cells x iterations 0..3
        snr_records = run_mse_vs_snr(spec)
        for r in records:
            if r.iteration == 0:
                twin = next(s for s in snr_records
                            if (s.M, s.N) == (r.M, r.N))
                assert r.mse_total_em == twin.mse_total_ls
            assert r.mse_total_ls == r.mse_total_em or r.iteration > 0

    def test_monotone_iteration_indices_per_cell(self):
        spec = ExperimentSpec(trials=4, snr_grid_db=(15.0,), mod_orders=(4,),
                              n_values=(16,), em_iters=5, seed=3)
        records = run_mse_vs_iterations(spec)
        assert [r.iteration for r in records] == list(range(6))

    def test_deterministic(self):
        spec = ExperimentSpec(trials=4, snr_grid_db=(10.0,), mod_orders=(16,),
                              n_values=(16,), em_iters=2, seed=12)
        assert run_mse_vs_iterations(spec) == run_mse_vs_iterations(spec)
