"""Joint power/rate control under average-delay constraints.

A user with Poisson packet arrivals, FIFO queueing and
retransmission-until-success behaves as an M/G/1 queue; its average-delay
bound translates into a minimum transmission rate once the SIR is pinned
at the utility-optimal target.  That rate defines the user's "size": the
fraction of network resources it consumes at the Pareto-dominant
equilibrium.  Admission is feasible iff the sizes sum below one, and the
equilibrium utilities follow in closed form, cross-validated here by a
direct linear solve of the SIR-balance conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .system import SystemParams

__all__ = [
    "QosProfile", "InfeasibleQos", "required_rate", "user_size", "feasible",
    "capacity", "equilibrium_utility", "solve_powers",
]


class InfeasibleQos(ValueError):
    """The requested QoS profile set cannot be admitted (sizes sum >= 1)."""


@dataclass(frozen=True)
class QosProfile:
    """Delay-sensitive traffic description for one user."""
    packet_size_bits: int
    arrival_rate_pps: float    # Poisson packet arrival rate
    delay_bound_s: float       # bound on average total (queue + air) delay

    def __post_init__(self):
        if self.packet_size_bits < 1:
            raise ValueError("packet_size_bits must be a positive integer")
        if self.arrival_rate_pps < 0:
            raise ValueError("arrival_rate_pps must be nonnegative")
        if not self.delay_bound_s > 0:
            raise ValueError("delay_bound_s must be strictly positive")


def required_rate(profile: QosProfile, success_at_target: float) -> float:
    """Minimum transmission rate (bps) meeting the delay bound with equality
    when operating at the target SIR.

    With M the packet size, D the delay bound, lam the arrival rate and f
    the packet success rate at the target SIR:

        (M/D) * (1 + D*lam + sqrt(1 + D^2 lam^2 + 2(1-f) D lam)) / (2f)
    """
    if not 0.0 < success_at_target <= 1.0:
        raise ValueError("success_at_target must lie in (0, 1]")
    m = float(profile.packet_size_bits)
    d = profile.delay_bound_s
    lam = profile.arrival_rate_pps
    dl = d * lam
    root = np.sqrt(1.0 + dl * dl + 2.0 * (1.0 - success_at_target) * dl)
    return (m / d) * (1.0 + dl + root) / (2.0 * success_at_target)


def user_size(rate_bps: float, target_sir: float, bandwidth_hz: float) -> float:
    """Fraction of network resources the user consumes at equilibrium:
    1 / (1 + B / (rate * target_sir))."""
    if rate_bps <= 0 or bandwidth_hz <= 0 or target_sir <= 0:
        raise ValueError("rate, bandwidth and target_sir must be positive")
    return 1.0 / (1.0 + bandwidth_hz / (rate_bps * target_sir))


def feasible(sizes) -> bool:
    """Admission condition: the sizes must sum strictly below one."""
    s = np.asarray(sizes, dtype=float)
    if np.any(s <= 0) or np.any(s >= 1):
        raise ValueError("each size must lie in (0, 1)")
    return float(s.sum()) < 1.0


def capacity(size: float) -> int:
    """Largest number of identical users of the given size the network can
    admit (strict sum-below-one condition)."""
    if not 0.0 < size < 1.0:
        raise ValueError("size must lie in (0, 1)")
    k = int(np.floor(1.0 / size))
    while (k + 1) * size < 1.0:
        k += 1
    while k > 0 and k * size >= 1.0:
        k -= 1
    return k


def equilibrium_utility(index: int, sizes, gain: float, params: SystemParams,
                        success_at_target: float, target_sir: float) -> float:
    """Utility of one user at the Pareto-dominant equilibrium:
    (B h f / (noise * g)) * (1 - sum sizes) / (1 - own size)."""
    s = np.asarray(sizes, dtype=float)
    if not feasible(s):
        raise InfeasibleQos(f"sizes sum to {s.sum():.6g} >= 1; no feasible equilibrium")
    front = params.bandwidth_hz * gain * success_at_target / (params.noise_power * target_sir)
    return float(front * (1.0 - s.sum()) / (1.0 - s[index]))


def solve_powers(rates_bps: Sequence[float], gains: Sequence[float],
                 params: SystemParams, target_sir: float) -> np.ndarray:
    """Direct solve of the SIR-balance conditions at per-user rates.

    Imposes (B/R_k) * p_k h_k / (noise + sum_{j != k} p_j h_j) = target for
    every user (per-user spreading gain B/R_k) and solves the resulting
    linear system.  Raises InfeasibleQos when the system is singular or
    the solution is not strictly positive, which happens exactly when the
    sizes sum to >= 1.
    """
    rates = np.asarray(rates_bps, dtype=float)
    h = np.asarray(gains, dtype=float)
    if rates.shape != h.shape or rates.ndim != 1:
        raise ValueError("rates and gains must be matching 1-D arrays")
    if np.any(rates <= 0) or np.any(h <= 0):
        raise ValueError("rates and gains must be strictly positive")
    n_users = rates.shape[0]
    spreading = params.bandwidth_hz / rates          # per-user processing gain
    matrix = -np.tile(h, (n_users, 1))
    np.fill_diagonal(matrix, (spreading / target_sir) * h)
    rhs = np.full(n_users, params.noise_power)
    try:
        powers = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleQos(f"SIR-balance system is singular: {exc}") from exc
    if not np.all(powers > 0):
        raise InfeasibleQos("SIR-balance system has no positive solution; "
                            "the requested rates exceed the admission region")
    return powers
