"""Multicarrier game: utility, carrier selection, equilibrium structure."""

import numpy as np
import pytest

from powergames.dynamics import STATUS_CONVERGED
from powergames.efficiency import EfficiencyModel
from powergames.games import best_response_bpj, bits_per_joule
from powergames.multicarrier import (
    MulticarrierGame, best_carrier_response, carrier_counts, carrier_sirs,
    carrier_support, independent_baseline, run_game, total_bits_per_joule,
)
from powergames.receivers import MfSirModel
from powergames.system import SystemParams

MODEL = EfficiencyModel.exponential(100)
TRUE_TARGET = MODEL.optimal_sir()
WORKED_TARGET = 6.4867  # exogenous value used by the worked examples


def two_carrier_params(max_power=100.0, noise=0.01):
    return SystemParams(processing_gain=128, noise_power=noise,
                        max_power=max_power, carriers=2)


class TestTotalBitsPerJoule:
    def test_single_active_carrier_reduces_to_plain_utility(self):
        sirs = np.array([4.0, 0.0])
        powers = np.array([0.5, 0.0])
        got = total_bits_per_joule(1e4, sirs, powers, MODEL)
        assert got == pytest.approx(bits_per_joule(1e4, 4.0, 0.5, MODEL), rel=1e-14)

    def test_equal_conditions_match_single_carrier(self):
        sirs = np.array([4.0, 4.0])
        powers = np.array([0.5, 0.5])
        got = total_bits_per_joule(1e4, sirs, powers, MODEL)
        assert got == pytest.approx(bits_per_joule(1e4, 4.0, 0.5, MODEL), rel=1e-14)

    def test_arithmetic_example(self):
        # f values 0.8 and 0.4 at rate 1e4 and unit powers: (8000+4000)/2
        table = EfficiencyModel.from_table(
            [0.0, 1.0, 2.0, 3.0], [0.0, 0.4, 0.8, 0.95])
        got = total_bits_per_joule(1e4, [2.0, 1.0], [1.0, 1.0], table)
        assert got == pytest.approx(6000.0, rel=1e-12)

    def test_zero_total_power(self):
        assert total_bits_per_joule(1e4, [0.0, 0.0], [0.0, 0.0], MODEL) == 0.0


class TestBestCarrierResponse:
    def test_single_carrier_matches_plain_best_response(self):
        params = SystemParams(processing_gain=128, noise_power=0.01,
                              max_power=100.0, carriers=1)
        gains = np.array([[0.1], [0.25], [0.4]])
        powers = np.array([[0.3], [0.1], [0.8]])
        sir_model = MfSirModel(gains[:, 0], 128, 0.01)
        for k in range(3):
            row, wants = best_carrier_response(k, powers, gains, params,
                                               TRUE_TARGET, MODEL)
            plain = best_response_bpj(k, powers[:, 0], sir_model, TRUE_TARGET, 100.0)
            assert row[0] == pytest.approx(plain, rel=1e-12)
            assert not wants

    def test_picks_cheapest_carrier_without_interference(self):
        params = two_carrier_params()
        gains = np.array([[0.1, 0.2]])
        powers = np.zeros((1, 2))
        row, wants = best_carrier_response(0, powers, gains, params,
                                           WORKED_TARGET, MODEL)
        assert row[0] == 0.0
        assert row[1] == pytest.approx(0.324335, abs=1e-6)
        assert not wants

    def test_tie_breaks_to_lowest_carrier(self):
        params = two_carrier_params()
        gains = np.array([[0.2, 0.2]])
        row, _ = best_carrier_response(0, np.zeros((1, 2)), gains, params,
                                       TRUE_TARGET, MODEL)
        assert row[0] > 0.0 and row[1] == 0.0

    def test_cap_case_picks_best_ratio_carrier(self):
        params = two_carrier_params(max_power=0.05)
        gains = np.array([[0.1, 0.2]])
        row, wants = best_carrier_response(0, np.zeros((1, 2)), gains, params,
                                           TRUE_TARGET, MODEL)
        assert wants
        assert row[1] == 0.05 and row[0] == 0.0   # better gain: higher success rate

    def test_mixed_reachability_prefers_reachable(self):
        # carrier 1 cannot reach the target at max power, carrier 0 can
        params = two_carrier_params(max_power=1.0)
        gains = np.array([[0.2, 0.001]])
        row, wants = best_carrier_response(0, np.zeros((1, 2)), gains, params,
                                           TRUE_TARGET, MODEL)
        assert not wants
        assert row[0] > 0.0 and row[1] == 0.0

    def test_beats_random_power_rows(self):
        rng = np.random.default_rng(9)
        params = two_carrier_params(max_power=5.0)
        for instance in range(3):
            gains = rng.uniform(0.05, 0.5, (4, 2))
            powers = rng.uniform(0.0, 1.0, (4, 2))
            game = MulticarrierGame(gains, params, MODEL, rates=np.full(4, 1e4),
                                    target_sir=TRUE_TARGET)
            for k in range(4):
                row, _ = best_carrier_response(k, powers, gains, params,
                                               TRUE_TARGET, MODEL)
                trial = powers.copy()
                trial[k, :] = row
                best_u = game.utility(k, trial)
                samples = rng.uniform(0.0, 5.0, (10 ** 4, 2))
                for sample in samples:
                    trial[k, :] = sample
                    assert game.utility(k, trial) <= best_u * (1 + 1e-12)


class TestRunGame:
    def test_single_user_settles_after_first_sweep(self):
        params = two_carrier_params()
        gains = np.array([[0.1, 0.4]])
        out = run_game(gains, params, MODEL, rates=np.array([1e4]),
                       target_sir=TRUE_TARGET)
        assert out.report.status == STATUS_CONVERGED
        assert out.report.iterations <= 2
        assert tuple(out.counts) == (0, 1)

    def test_asymmetric_users_take_distinct_carriers(self):
        params = two_carrier_params()
        gains = np.array([[0.5, 0.01], [0.01, 0.5]])
        out = run_game(gains, params, MODEL, rates=np.full(2, 1e4),
                       target_sir=TRUE_TARGET)
        assert out.report.status == STATUS_CONVERGED
        support = carrier_support(out.report.state.powers)
        assert support[0, 0] and not support[0, 1]
        assert support[1, 1] and not support[1, 0]

    def test_converged_support_is_single_carrier(self):
        params = SystemParams(processing_gain=128, noise_power=5e-16,
                              max_power=1.0, carriers=2)
        rng = np.random.default_rng(17)
        for seed in range(10):
            gains = 9.7e-10 * rng.exponential(1.0, (8, 2))
            out = run_game(gains, params, MODEL, rates=np.full(8, 1e4),
                           target_sir=TRUE_TARGET)
            if out.report.status != STATUS_CONVERGED:
                continue
            assert np.all(carrier_support(out.report.state.powers).sum(axis=1) == 1)
            assert int(out.counts.sum()) == 8

    def test_counts_match_support(self):
        powers = np.array([[0.1, 0.0], [0.0, 0.2], [0.0, 0.3]])
        np.testing.assert_array_equal(carrier_counts(powers), [1, 2])


class TestIndependentBaseline:
    def test_single_carrier_baseline_is_plain_equilibrium(self):
        params = SystemParams(processing_gain=128, noise_power=0.01,
                              max_power=100.0, carriers=1)
        gains = np.array([[0.1], [0.2], [0.3]])
        powers, reports = independent_baseline(gains, params, MODEL,
                                               rates=np.full(3, 1e4),
                                               target_sir=TRUE_TARGET)
        assert all(r.status == STATUS_CONVERGED for r in reports)
        sirs = carrier_sirs(powers, gains, params)
        np.testing.assert_allclose(sirs[:, 0], TRUE_TARGET, rtol=1e-6)

    def test_symmetric_gains_give_equal_columns(self):
        params = two_carrier_params()
        gains = np.array([[0.1, 0.1], [0.3, 0.3]])
        powers, _ = independent_baseline(gains, params, MODEL,
                                         rates=np.full(2, 1e4),
                                         target_sir=TRUE_TARGET)
        np.testing.assert_allclose(powers[:, 0], powers[:, 1], rtol=1e-9)

    def test_joint_equals_independent_for_lone_user_symmetric_gains(self):
        params = two_carrier_params()
        gains = np.array([[0.2, 0.2]])
        rates = np.array([1e4])
        out = run_game(gains, params, MODEL, rates=rates, target_sir=TRUE_TARGET)
        base, _ = independent_baseline(gains, params, MODEL, rates=rates,
                                       target_sir=TRUE_TARGET)
        game = MulticarrierGame(gains, params, MODEL, rates=rates,
                                target_sir=TRUE_TARGET)
        joint_total = game.utilities(out.report.state.powers).sum()
        indep_total = game.utilities(base).sum()
        assert joint_total == pytest.approx(indep_total, rel=1e-9)

    def test_joint_beats_independent(self):
        params = SystemParams(processing_gain=128, noise_power=5e-16,
                              max_power=1.0, carriers=2)
        rng = np.random.default_rng(23)
        improvements = []
        for seed in range(10):
            gains = 9.7e-10 * rng.exponential(1.0, (10, 2))
            rates = np.full(10, 1e4)
            out = run_game(gains, params, MODEL, rates=rates, target_sir=TRUE_TARGET)
            if out.report.status != STATUS_CONVERGED:
                continue
            base, base_reports = independent_baseline(gains, params, MODEL,
                                                      rates=rates,
                                                      target_sir=TRUE_TARGET)
            assert all(r.status == STATUS_CONVERGED for r in base_reports)
            game = MulticarrierGame(gains, params, MODEL, rates=rates,
                                    target_sir=TRUE_TARGET)
            joint_total = game.utilities(out.report.state.powers).sum()
            indep_total = game.utilities(base).sum()
            assert joint_total >= indep_total * (1 - 1e-12)
            improvements.append(joint_total / indep_total)
        assert improvements and np.median(improvements) > 1.0
