"""The multicarrier power game: carrier selection by best response.

Each user's utility is total throughput over total transmit power across
all carriers.  The best response concentrates the whole transmission on
the single carrier that reaches the target SIR with the least power (the
"best" carrier), which makes converged equilibria single-carrier-support
interference-avoidance outcomes.  The utility is not quasiconcave in the
power vector, so equilibria may fail to exist; the iteration engine's
cycle detection covers that case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dynamics
from .efficiency import EfficiencyModel
from .games import PowerControlGame
from .receivers import MfSirModel
from .system import SystemParams

__all__ = [
    "total_bits_per_joule", "carrier_sirs", "required_powers",
    "best_carrier_response", "MulticarrierGame", "McOutcome",
    "run_game", "independent_baseline", "carrier_support", "carrier_counts",
]


def total_bits_per_joule(rate_bps: float, sirs_row, powers_row,
                         model: EfficiencyModel) -> float:
    """Ratio of summed per-carrier throughput to summed transmit power;
    0 by continuous extension when the user transmits nothing."""
    p = np.asarray(powers_row, dtype=float)
    total_power = p.sum()
    if total_power <= 0.0:
        return 0.0
    throughput = rate_bps * np.sum(model.success_rate(np.asarray(sirs_row, dtype=float)))
    return float(throughput / total_power)


def carrier_sirs(powers, gains, params: SystemParams) -> np.ndarray:
    """Per-carrier matched-filter SIRs (1/N model) for a K x D allocation."""
    p = np.asarray(powers, dtype=float)
    h = np.asarray(gains, dtype=float)
    received = p * h
    other = received.sum(axis=0, keepdims=True) - received
    return received / (params.noise_power + other / params.processing_gain)


def required_powers(k: int, powers, gains, params: SystemParams,
                    target_sir: float) -> np.ndarray:
    """Uncapped power needed on each carrier for user k to hit the target
    SIR against the current interference."""
    p = np.asarray(powers, dtype=float)
    h = np.asarray(gains, dtype=float)
    received = p * h
    other = received.sum(axis=0) - received[k, :]
    return target_sir * (params.noise_power + other / params.processing_gain) / h[k, :]


def best_carrier_response(k: int, powers, gains, params: SystemParams,
                          target_sir: float, model: EfficiencyModel):
    """Single-carrier best response row for user k.

    Picks the carrier needing the least power to reach the target SIR
    (unreachable carriers enter the argmin at max power; ties break to
    the lowest carrier index).  When no carrier can reach the target, the
    user transmits max power on the carrier with the best success rate
    per watt at max power.  Returns (row, wants_above_cap).
    """
    req = required_powers(k, powers, gains, params, target_sir)
    p_max = params.max_power
    row = np.zeros(req.shape[0])
    if np.all(req > p_max):
        h = np.asarray(gains, dtype=float)
        pw = np.asarray(powers, dtype=float)
        received = pw * h
        other = received.sum(axis=0) - received[k, :]
        sirs_at_cap = p_max * h[k, :] / (params.noise_power + other / params.processing_gain)
        ratio = model.success_rate(sirs_at_cap) / p_max
        best = int(np.argmax(ratio))
        row[best] = p_max
        return row, True
    capped = np.minimum(req, p_max)
    best = int(np.argmin(capped))
    row[best] = capped[best]
    return row, False


class MulticarrierGame:
    """Engine protocol implementation for the D-carrier game."""

    def __init__(self, gains, params: SystemParams, model: EfficiencyModel,
                 rates=None, target_sir: Optional[float] = None):
        self.gains = np.atleast_2d(np.asarray(gains, dtype=float))
        if np.any(self.gains <= 0):
            raise ValueError("gains must be strictly positive")
        self.params = params
        self.model = model
        self.n_users, self.n_carriers = self.gains.shape
        self.max_power = params.max_power
        self.target_sir = float(target_sir) if target_sir is not None else model.optimal_sir()
        if rates is None:
            self.rates = np.full(self.n_users, params.common_rate_bps)
        else:
            self.rates = np.asarray(rates, dtype=float)

    def best_response(self, k: int, powers):
        return best_carrier_response(k, powers, self.gains, self.params,
                                     self.target_sir, self.model)

    def utility(self, k: int, powers) -> float:
        sirs = carrier_sirs(powers, self.gains, self.params)
        p = np.asarray(powers, dtype=float)
        return total_bits_per_joule(self.rates[k], sirs[k, :], p[k, :], self.model)

    def utilities(self, powers) -> np.ndarray:
        sirs = carrier_sirs(powers, self.gains, self.params)
        p = np.asarray(powers, dtype=float)
        return np.array([
            total_bits_per_joule(self.rates[k], sirs[k, :], p[k, :], self.model)
            for k in range(self.n_users)
        ])

    def state_summary(self, powers):
        sirs = carrier_sirs(powers, self.gains, self.params)
        return sirs, self.utilities(powers)


def carrier_support(powers) -> np.ndarray:
    """Boolean K x D matrix of carriers each user actually transmits on."""
    return np.asarray(powers, dtype=float) > 0.0


def carrier_counts(powers) -> np.ndarray:
    """Number of active users per carrier."""
    return carrier_support(powers).sum(axis=0)


@dataclass
class McOutcome:
    report: dynamics.EquilibriumReport
    counts: np.ndarray      # users per carrier at the final state


def run_game(gains, params: SystemParams, model: EfficiencyModel,
             rates=None, target_sir: Optional[float] = None,
             schedule: str = "gauss-seidel", tol: float = 1e-9,
             max_iters: int = 100000, initial=None) -> McOutcome:
    """Iterate the multicarrier game and report the per-carrier user counts
    of the final allocation (meaningful when status is converged)."""
    game = MulticarrierGame(gains, params, model, rates=rates, target_sir=target_sir)
    report = dynamics.iterate(game, initial=initial, schedule=schedule,
                              tol=tol, max_iters=max_iters)
    return McOutcome(report=report, counts=carrier_counts(report.state.powers))


def independent_baseline(gains, params: SystemParams, model: EfficiencyModel,
                         rates=None, target_sir: Optional[float] = None,
                         schedule: str = "gauss-seidel", tol: float = 1e-9,
                         max_iters: int = 100000):
    """Per-carrier-independent maximization: run one single-carrier game per
    carrier with every user active, and assemble the K x D power matrix.

    Returns (powers, reports), one equilibrium report per carrier.
    """
    g = np.atleast_2d(np.asarray(gains, dtype=float))
    n_users, n_carriers = g.shape
    if rates is None:
        rates = np.full(n_users, params.common_rate_bps)
    if target_sir is None:
        target_sir = model.optimal_sir()
    powers = np.zeros((n_users, n_carriers))
    reports = []
    for carrier in range(n_carriers):
        sir_model = MfSirModel(g[:, carrier], params.processing_gain, params.noise_power)
        game = PowerControlGame(sir_model, rates, model, params.max_power,
                                objective="bpj", target_sir=target_sir)
        report = dynamics.iterate(game, schedule=schedule, tol=tol, max_iters=max_iters)
        powers[:, carrier] = report.state.powers[:, 0]
        reports.append(report)
    return powers, reports
