"""Iteration engine: convergence, statuses, schedules, verification."""

import numpy as np
import pytest

from powergames import dynamics
from powergames.dynamics import (
    STATUS_CONVERGED, STATUS_CYCLE, STATUS_INFEASIBLE, STATUS_MAX_ITERS,
    iterate, verify_nash,
)
from powergames.efficiency import EfficiencyModel
from powergames.games import (
    MatrixGame, MatrixGameAdapter, PowerControlGame, prisoners_dilemma,
    sir_balanced_equilibrium,
)
from powergames.receivers import MfSirModel
from powergames.system import SystemParams

MODEL = EfficiencyModel.exponential(100)
TARGET = MODEL.optimal_sir()
PARAMS = SystemParams(processing_gain=128, noise_power=0.01, max_power=100.0)


def bpj_game(gains, max_power=100.0):
    gains = np.asarray(gains, dtype=float)
    sir_model = MfSirModel(gains, 128, 0.01)
    rates = np.full(gains.shape[0], 1e4)
    return PowerControlGame(sir_model, rates, MODEL, max_power, target_sir=TARGET)


def random_feasible_gains(rng, n_max=20):
    n = int(rng.integers(2, n_max + 1))
    return rng.uniform(0.05, 0.5, n)


class TestIterate:
    def test_single_user_two_sweeps(self):
        report = iterate(bpj_game([0.1]))
        assert report.status == STATUS_CONVERGED
        assert report.iterations <= 2
        assert report.state.powers[0, 0] == pytest.approx(TARGET * 0.01 / 0.1, rel=1e-12)

    def test_matches_closed_form(self):
        rng = np.random.default_rng(0)
        gains = random_feasible_gains(rng, 10)
        closed = sir_balanced_equilibrium(gains, PARAMS, TARGET)
        report = iterate(bpj_game(gains), tol=1e-12)
        assert report.status == STATUS_CONVERGED
        np.testing.assert_allclose(report.state.powers[:, 0], closed.powers, rtol=1e-8)

    def test_infeasible_all_max_power(self):
        # 20 * target > 128: no equilibrium; with near-equal gains every
        # user ends up pinned at max power
        gains = np.full(21, 0.1)
        report = iterate(bpj_game(gains))
        assert report.status == STATUS_INFEASIBLE
        assert np.all(report.state.powers == PARAMS.max_power)

    def test_monotone_from_extremes_and_common_fixed_point(self):
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            gains = random_feasible_gains(rng)
            game = bpj_game(gains)
            up = iterate(game, tol=1e-11, track_history=True)
            down = iterate(game, initial=np.full((len(gains), 1), 100.0),
                           tol=1e-11, track_history=True)
            assert up.status == down.status == STATUS_CONVERGED
            for earlier, later in zip(up.history, up.history[1:]):
                assert np.all(later >= earlier - 1e-12)
            for earlier, later in zip(down.history, down.history[1:]):
                assert np.all(later <= earlier + 1e-12)
            np.testing.assert_allclose(up.state.powers, down.state.powers, rtol=1e-8)

    def test_gauss_seidel_and_jacobi_same_fixed_point(self):
        rng = np.random.default_rng(42)
        gains = random_feasible_gains(rng)
        gs = iterate(bpj_game(gains), schedule="gauss-seidel", tol=1e-12)
        ja = iterate(bpj_game(gains), schedule="jacobi", tol=1e-12)
        assert gs.status == ja.status == STATUS_CONVERGED
        np.testing.assert_allclose(gs.state.powers, ja.state.powers, rtol=1e-8)

    def test_deterministic(self):
        gains = np.array([0.1, 0.3, 0.2])
        a = iterate(bpj_game(gains))
        b = iterate(bpj_game(gains))
        assert a.status == b.status
        assert a.iterations == b.iterations
        assert np.array_equal(a.state.powers, b.state.powers)
        assert np.array_equal(a.state.utilities, b.state.utilities)

    def test_cycle_detected_on_matching_pennies(self):
        pennies = MatrixGame(("H", "T"), ("H", "T"),
                             [[1.0, -1.0], [-1.0, 1.0]],
                             [[-1.0, 1.0], [1.0, -1.0]])
        report = iterate(MatrixGameAdapter(pennies), max_iters=50)
        assert report.status == STATUS_CYCLE

    def test_max_iterations_status(self):
        gains = np.array([0.1, 0.2, 0.3, 0.4])
        report = iterate(bpj_game(gains), max_iters=1)
        assert report.status == STATUS_MAX_ITERS
        assert report.iterations == 1

    def test_bad_schedule_and_initial(self):
        with pytest.raises(ValueError):
            iterate(bpj_game([0.1]), schedule="random")
        with pytest.raises(ValueError):
            iterate(bpj_game([0.1]), initial=np.array([[200.0]]))

    def test_report_carries_state_summary(self):
        gains = np.array([0.1, 0.2])
        report = iterate(bpj_game(gains))
        np.testing.assert_allclose(report.state.sirs, TARGET, rtol=1e-6)
        assert report.state.utilities.shape == (2,)
        assert report.ne_verified is None


class TestVerifyNash:
    def test_accepts_closed_form_equilibrium(self):
        rng = np.random.default_rng(1)
        gains = random_feasible_gains(rng, 10)
        closed = sir_balanced_equilibrium(gains, PARAMS, TARGET)
        ok, worst = verify_nash(bpj_game(gains), closed.powers.reshape(-1, 1),
                                deviation_grid_size=200, tol=1e-9)
        assert ok
        assert worst <= 1e-9

    def test_rejects_all_max_power_in_feasible_instance(self):
        gains = np.array([0.1, 0.2, 0.3])
        state = np.full((3, 1), 100.0)
        ok, worst = verify_nash(bpj_game(gains), state, deviation_grid_size=64)
        assert not ok
        assert worst > 0

    def test_prisoners_dilemma_equilibrium(self):
        adapter = MatrixGameAdapter(prisoners_dilemma())
        ok, _ = verify_nash(adapter, np.array([[0.0], [0.0]]),
                            deviation_grid_size=2, tol=1e-12)
        assert ok
        ok_nc, gain = verify_nash(adapter, np.array([[1.0], [1.0]]),
                                  deviation_grid_size=2, tol=1e-12)
        assert not ok_nc and gain > 0

    def test_iterated_equilibrium_verifies(self):
        rng = np.random.default_rng(2)
        gains = random_feasible_gains(rng)
        report = iterate(bpj_game(gains), tol=1e-12)
        ok, _ = verify_nash(bpj_game(gains), report.state.powers,
                            deviation_grid_size=100, tol=1e-8)
        assert ok
