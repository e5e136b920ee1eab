"""Experiment drivers behind the CLI: load sweeps, multicarrier trials,
and the delay-QoS table.

Monte Carlo trials are seeded as base_seed + trial_index so a subset of
trials reproduces the corresponding prefix of a larger run.  Every driver
returns plain lists of dicts ready for CSV/JSON serialization, ordered by
(sweep point, trial index) regardless of how they were computed.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from . import dynamics
from .delayqos import QosProfile, capacity, required_rate, user_size
from .efficiency import EfficiencyModel
from .games import PowerControlGame
from .multicarrier import MulticarrierGame, independent_baseline, run_game
from .receivers import (
    LinearReceiverSirModel, LoadBeyondCapacity, ReceiverKind,
    large_system_margin, large_system_utility_value,
)
from .system import (
    DEFAULT_PATHLOSS_AMPLITUDE, DEFAULT_PATHLOSS_EXPONENT, SystemParams,
    generate_spreading,
)

__all__ = [
    "finite_equilibrium_utilities", "sweep_load", "multicarrier_trials",
    "delay_qos_table",
]


def _mean_gain(distance_m: float) -> float:
    return DEFAULT_PATHLOSS_AMPLITUDE * distance_m ** (-DEFAULT_PATHLOSS_EXPONENT)


def finite_equilibrium_utilities(kind: ReceiverKind, n_users: int,
                                 processing_gain: int, noise_power: float,
                                 max_power: float, rate_bps: float,
                                 model: EfficiencyModel, target_sir: float,
                                 seed: int, distance_m: float = 100.0,
                                 tol: float = 1e-7,
                                 max_iters: int = 20000):
    """One finite-system equilibrium draw: Rayleigh gains and random binary
    sequences from the seed, best-response dynamics to the equilibrium.

    Returns (report, gains).  Uses a Jacobi schedule warm-started at the
    large-system power prediction, which cuts the sweep count an order of
    magnitude for the MMSE receiver at large N.
    """
    rng = np.random.default_rng(seed)
    gains = _mean_gain(distance_m) * rng.exponential(1.0, n_users)
    spreading = generate_spreading(seed, n_users, processing_gain, "random-binary")
    sir_model = LinearReceiverSirModel(gains, spreading, noise_power, kind)
    game = PowerControlGame(sir_model, np.full(n_users, rate_bps), model,
                            max_power, target_sir=target_sir)
    load = n_users / processing_gain
    try:
        margin = large_system_margin(kind, load, 1, target_sir)
        warm = np.clip(target_sir * noise_power / (gains * margin), 0.0, max_power)
        initial = warm.reshape(-1, 1)
    except LoadBeyondCapacity:
        initial = None
    report = dynamics.iterate(game, initial=initial, schedule="jacobi",
                              tol=tol, max_iters=max_iters)
    return report, gains


def sweep_load(alphas: Sequence[float], receivers: Sequence[ReceiverKind],
               antennas_list: Sequence[int], model: EfficiencyModel,
               processing_gain: int = 256, noise_power: float = 5e-16,
               max_power: float = 10.0, rate_bps: float = 1e4,
               distance_m: float = 100.0, trials: int = 0, seed: int = 0,
               tol: float = 1e-7, max_iters: int = 20000) -> list[dict]:
    """Average equilibrium utility vs load per receiver and antenna count.

    The large-system column evaluates the closed-form utility at the mean
    combined channel gain.  The finite-system Monte Carlo columns are
    filled only for one receive antenna (the finite multi-antenna system
    is out of scope) and only when trials > 0; trial draws use
    seed + trial_index.  Infeasible rows carry NaN utilities.
    """
    target_sir = model.optimal_sir()
    f_star = model.success_rate(target_sir)
    rows = []
    for alpha in alphas:
        for kind in receivers:
            for antennas in antennas_list:
                row = {
                    "alpha": float(alpha),
                    "receiver": str(ReceiverKind(kind)),
                    "antennas": int(antennas),
                    "utility_large_system": math.nan,
                    "utility_finite_mc_mean": math.nan,
                    "utility_finite_mc_stderr": math.nan,
                    "feasible": False,
                }
                try:
                    row["utility_large_system"] = large_system_utility_value(
                        rate_bps, antennas * _mean_gain(distance_m), noise_power,
                        target_sir, f_star, kind, float(alpha), antennas)
                    row["feasible"] = True
                except LoadBeyondCapacity:
                    pass
                if trials > 0 and antennas == 1 and row["feasible"]:
                    n_users = max(2, int(round(alpha * processing_gain)))
                    means = []
                    for trial in range(trials):
                        report, _ = finite_equilibrium_utilities(
                            kind, n_users, processing_gain, noise_power,
                            max_power, rate_bps, model, target_sir,
                            seed + trial, distance_m, tol, max_iters)
                        if report.status == dynamics.STATUS_CONVERGED:
                            means.append(float(np.mean(report.state.utilities)))
                    if means:
                        arr = np.asarray(means)
                        row["utility_finite_mc_mean"] = float(arr.mean())
                        row["utility_finite_mc_stderr"] = float(
                            arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
                rows.append(row)
    return rows


def multicarrier_trials(user_counts: Sequence[int], carriers: int,
                        processing_gain: int, model: EfficiencyModel,
                        trials: int, seed: int = 0,
                        noise_power: float = 5e-16, max_power: float = 1.0,
                        rate_bps: float = 1e4, distance_m: float = 100.0,
                        tol: float = 1e-9, max_iters: int = 2000) -> list[dict]:
    """Joint multicarrier equilibrium vs per-carrier-independent baseline.

    One row per (K, trial) with total utilities under both allocations
    evaluated with the same aggregate objective.  Non-converged trials are
    flagged, never dropped; their utilities describe the final state.
    """
    target_sir = model.optimal_sir()
    params = SystemParams(processing_gain=processing_gain, noise_power=noise_power,
                          max_power=max_power, carriers=carriers,
                          common_rate_bps=rate_bps)
    rows = []
    for n_users in user_counts:
        for trial in range(trials):
            rng = np.random.default_rng(seed + trial)
            gains = _mean_gain(distance_m) * rng.exponential(1.0, (n_users, carriers))
            rates = np.full(n_users, rate_bps)
            outcome = run_game(gains, params, model, rates=rates,
                               target_sir=target_sir, tol=tol, max_iters=max_iters)
            base_powers, base_reports = independent_baseline(
                gains, params, model, rates=rates, target_sir=target_sir,
                tol=tol, max_iters=max_iters)
            game = MulticarrierGame(gains, params, model, rates=rates,
                                    target_sir=target_sir)
            joint_total = float(game.utilities(outcome.report.state.powers).sum())
            indep_total = float(game.utilities(base_powers).sum())
            converged = (outcome.report.status == dynamics.STATUS_CONVERGED
                         and all(r.status == dynamics.STATUS_CONVERGED
                                 for r in base_reports))
            rows.append({
                "K": int(n_users),
                "trial": int(trial),
                "total_utility_joint": joint_total,
                "total_utility_independent": indep_total,
                "converged": bool(converged),
                "split": "/".join(str(int(c)) for c in outcome.counts),
            })
    return rows


def delay_qos_table(normalized_delays: Sequence[float],
                    source_rates_pps: Sequence[float],
                    model: EfficiencyModel, bandwidth_hz: float = 5e6,
                    packet_size_bits: Optional[int] = None) -> list[dict]:
    """User size, network capacity, rate and total goodput vs normalized
    delay (delay bound times bandwidth) for several source rates.

    Capacity assumes a homogeneous population; goodput is source rate *
    packet size * capacity, normalized by the bandwidth.
    """
    target_sir = model.optimal_sir()
    f_star = model.success_rate(target_sir)
    m_bits = packet_size_bits if packet_size_bits is not None else model.packet_size_bits
    rows = []
    for norm_delay in normalized_delays:
        delay_s = float(norm_delay) / bandwidth_hz
        for lam in source_rates_pps:
            profile = QosProfile(packet_size_bits=m_bits, arrival_rate_pps=float(lam),
                                 delay_bound_s=delay_s)
            omega = required_rate(profile, f_star)
            phi = user_size(omega, target_sir, bandwidth_hz)
            k_max = capacity(phi) if phi < 1.0 else 0
            rows.append({
                "normalized_delay": float(norm_delay),
                "source_rate_pps": float(lam),
                "size_phi": float(phi),
                "capacity_K": int(k_max),
                "omega_over_B": float(omega / bandwidth_hz),
                "total_goodput_over_B": float(lam * m_bits * k_max / bandwidth_hz),
            })
    return rows
