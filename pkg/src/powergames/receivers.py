"""Output-SIR computation for linear multiuser receivers.

Two levels of modelling:

* Finite system: matched filter (MF), decorrelator (DE) and linear MMSE
  SIRs computed from actual spreading sequences.  The plain matched
  filter with the average 1/N cross-correlation model is kept as a
  separate function (`sir_mf`) because the closed-form equilibria are
  stated in that model.
* Large system: the equilibrium utility formulas parameterized by load
  alpha = K/N and receive antennas m, valid up to each receiver's
  capacity threshold.

Every SIR here is linear in the user's own transmit power, so each model
exposes `coefficients(powers)` returning a with sir_k = a_k * p_k.  Best
responses and the iteration engine are built on that.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .system import SpreadingSet

__all__ = [
    "ReceiverKind", "LargeSystemPoint", "LoadBeyondCapacity", "SingularReceiver",
    "sir_mf", "sir_linear", "MfSirModel", "LinearReceiverSirModel",
    "large_system_margin", "large_system_utility", "large_system_utility_value",
    "large_system_capacity_threshold",
]

# Condition-number ceiling for the decorrelator's Gram inverse; beyond it
# the receiver declares failure instead of regularizing.
DE_CONDITION_LIMIT = 1e12


class ReceiverKind(enum.IntEnum):
    """Linear receiver type; the integer order (MF < DE < MMSE) is the
    canonical reporting order."""
    MF = 0
    DE = 1
    MMSE = 2

    @classmethod
    def from_name(cls, name: str) -> "ReceiverKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown receiver {name!r}; expected one of mf, de, mmse")

    def __str__(self):
        return self.name.lower()


class LoadBeyondCapacity(ValueError):
    """System load exceeds the receiver's capacity threshold."""

    def __init__(self, kind: "ReceiverKind", load: float, threshold: float):
        self.kind = kind
        self.load = load
        self.threshold = threshold
        super().__init__(
            f"load beyond receiver capacity: {kind} supports load < {threshold:.6g}, got {load:.6g}")


class SingularReceiver(ValueError):
    """Receiver filter cannot be formed (rank-deficient spreading matrix)."""


@dataclass(frozen=True)
class LargeSystemPoint:
    """One operating point of the large-system analysis."""
    load: float                 # alpha = K / N
    antennas: int = 1
    combined_gain: float = 1.0  # channel gain summed over receive antennas

    def __post_init__(self):
        if not self.load > 0 or not self.antennas >= 1 or not self.combined_gain > 0:
            raise ValueError("load and combined_gain must be positive, antennas >= 1")

    @property
    def effective_load(self) -> float:
        return self.load / self.antennas


# -- finite-system SIR ----------------------------------------------------

def sir_mf(powers, gains, processing_gain: int, noise_power: float) -> np.ndarray:
    """Matched-filter SIR under the average random-spreading model:
    sir_k = p_k h_k / (noise + (1/N) sum_{j != k} p_j h_j)."""
    p = np.asarray(powers, dtype=float)
    h = np.asarray(gains, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    received = p * h
    other = received.sum() - received
    return received / (noise_power + other / processing_gain)


class MfSirModel:
    """Average-cross-correlation matched filter model (the 1/N form)."""

    def __init__(self, gains, processing_gain: int, noise_power: float):
        self.gains = np.asarray(gains, dtype=float)
        if np.any(self.gains <= 0):
            raise ValueError("gains must be strictly positive")
        self.processing_gain = processing_gain
        self.noise_power = float(noise_power)

    def coefficients(self, powers) -> np.ndarray:
        p = np.asarray(powers, dtype=float)
        received = p * self.gains
        other = received.sum() - received
        return self.gains / (self.noise_power + other / self.processing_gain)

    def sirs(self, powers) -> np.ndarray:
        return self.coefficients(powers) * np.asarray(powers, dtype=float)


class LinearReceiverSirModel:
    """Finite-system SIR for MF, DE, or MMSE with explicit spreading sequences.

    MF uses the true cross-correlations; DE inverts the Gram matrix once
    (failing on rank deficiency); MMSE reuses one Cholesky factorization
    of the full covariance per state via the rank-one downdate identity
    sir_k = p_k h_k z_k / (1 - p_k h_k z_k), z_k = s_k' A^-1 s_k.
    """

    def __init__(self, gains, spreading: SpreadingSet, noise_power: float,
                 kind: ReceiverKind):
        self.gains = np.asarray(gains, dtype=float)
        self.spreading = spreading
        self.noise_power = float(noise_power)
        self.kind = ReceiverKind(kind)
        if spreading.n_users != self.gains.shape[0]:
            raise ValueError("spreading set size must match number of users")
        if self.noise_power <= 0:
            raise ValueError("noise power must be strictly positive")
        s = spreading.sequences
        if self.kind == ReceiverKind.MF:
            cross = (s @ s.T) ** 2
            np.fill_diagonal(cross, 0.0)
            self._cross_sq = cross
            self._self_sq = np.sum(s * s, axis=1) ** 2      # ~1 for unit norm
        elif self.kind == ReceiverKind.DE:
            gram = s @ s.T
            cond = np.linalg.cond(gram)
            if not np.isfinite(cond) or cond > DE_CONDITION_LIMIT:
                raise SingularReceiver(
                    f"decorrelator needs a full-rank spreading matrix "
                    f"(Gram condition number {cond:.3g})")
            self._gram_inv_diag = np.diag(np.linalg.inv(gram))

    def coefficients(self, powers) -> np.ndarray:
        """a with sir_k = a_k * p_k at the current interference state."""
        p = np.asarray(powers, dtype=float)
        if np.any(p < 0):
            raise ValueError("powers must be nonnegative")
        h = self.gains
        if self.kind == ReceiverKind.MF:
            interference = self._cross_sq @ (p * h)
            return h * self._self_sq / (self.noise_power + interference)
        if self.kind == ReceiverKind.DE:
            return h / (self.noise_power * self._gram_inv_diag)
        # MMSE: A = noise*I + S' diag(p h) S over all users, then downdate.
        s = self.spreading.sequences
        n = self.spreading.length
        weighted = s * (p * h)[:, None]
        cov = s.T @ weighted
        cov[np.diag_indices(n)] += self.noise_power
        factor = cho_factor(cov, lower=True)
        sol = cho_solve(factor, s.T)            # A^-1 s_k in columns
        z = np.einsum("kn,nk->k", s, sol)
        denom = 1.0 - p * h * z
        return h * z / denom

    def sirs(self, powers) -> np.ndarray:
        return self.coefficients(powers) * np.asarray(powers, dtype=float)


def sir_linear(powers, gains, spreading: SpreadingSet, noise_power: float,
               kind: ReceiverKind) -> np.ndarray:
    """Finite-system output SIR for each user under the given receiver."""
    model = LinearReceiverSirModel(gains, spreading, noise_power, kind)
    return model.sirs(powers)


# -- large-system equilibrium formulas ------------------------------------

def large_system_capacity_threshold(kind: ReceiverKind, antennas: int,
                                    target_sir: float) -> float:
    """Maximum supportable load alpha (exclusive) for the receiver."""
    kind = ReceiverKind(kind)
    if kind == ReceiverKind.MF:
        return antennas / target_sir
    if kind == ReceiverKind.DE:
        return 1.0
    return antennas * (1.0 + 1.0 / target_sir)


def large_system_margin(kind: ReceiverKind, load: float, antennas: int,
                        target_sir: float) -> float:
    """Utility reduction factor relative to an unloaded system.

    MF: 1 - a*g, DE: 1 - alpha, MMSE: 1 - a*g/(1+g), with a = alpha/m the
    per-antenna load and g the target SIR.  Raises LoadBeyondCapacity at
    or beyond each receiver's threshold.
    """
    kind = ReceiverKind(kind)
    if load <= 0 or antennas < 1 or target_sir <= 0:
        raise ValueError("load, antennas and target_sir must be positive")
    threshold = large_system_capacity_threshold(kind, antennas, target_sir)
    if not load < threshold:
        raise LoadBeyondCapacity(kind, load, threshold)
    eff = load / antennas
    if kind == ReceiverKind.MF:
        return 1.0 - eff * target_sir
    if kind == ReceiverKind.DE:
        return 1.0 - load
    return 1.0 - eff * target_sir / (1.0 + target_sir)


def large_system_utility_value(rate_bps: float, combined_gain: float,
                               noise_power: float, target_sir: float,
                               success_at_target: float, kind: ReceiverKind,
                               load: float, antennas: int = 1) -> float:
    """Per-user equilibrium utility (bits/joule) in the large-system limit:
    R * f(g*) * h_bar / (g* * noise) * margin."""
    margin = large_system_margin(kind, load, antennas, target_sir)
    return rate_bps * success_at_target * combined_gain / (target_sir * noise_power) * margin


def large_system_utility(user, params, target_sir: float, success_at_target: float,
                         kind: ReceiverKind, load: float) -> float:
    """Profile-based wrapper: combined gain is the user's antenna-summed gain
    on carrier 0; the antenna count comes from params."""
    return large_system_utility_value(
        rate_bps=user.rate_of(params),
        combined_gain=user.combined_gain(carrier=0),
        noise_power=params.noise_power,
        target_sir=target_sir,
        success_at_target=success_at_target,
        kind=kind,
        load=load,
        antennas=params.rx_antennas,
    )
