"""Packet-success-rate (efficiency) models and the utility-optimal SIR target.

The efficiency function maps output SIR to the probability that a packet
arrives error-free.  Every model here is sigmoidal with f(0)=0 and
f(inf)=1, which keeps the bits-per-joule utility finite at zero power.
The utility-optimal SIR is the unique positive solution of
f(g) = g * f'(g); every power-control game in this package targets it.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = ["EfficiencyModel", "NoInteriorMaximizer", "optimal_sir"]

# Relative step for finite-difference derivatives of tabulated models.
FD_REL_STEP = 1e-6

# Guaranteed ceiling on the absolute error of the bisected SIR target.
# The target feeds closed-form equilibria and algebraic identities whose
# residuals amplify SIR error by factors of e^g, so the bisection actually
# runs down to float resolution (well below this bound).
SIR_SOLVER_TOL = 1e-10


class NoInteriorMaximizer(ValueError):
    """The efficiency model admits no interior utility maximizer.

    Raised when f(g) = g f'(g) has no positive root, e.g. for a strictly
    concave success-rate curve.
    """


class EfficiencyModel:
    """Immutable packet-success-rate model.

    Two forms are supported:

    * ``exp-m``: f(g) = (1 - exp(-g))**M with M the packet size in bits.
    * ``tabulated``: a user-supplied sigmoid, interpolated with monotone
      cubic (PCHIP) segments so the shape invariants stay checkable.

    Instances are immutable after construction and safe to share across
    threads.
    """

    def __init__(self, packet_size_bits: int = 100, form: str = "exp-m",
                 table_sir=None, table_rate=None):
        if packet_size_bits < 1 or int(packet_size_bits) != packet_size_bits:
            raise ValueError(f"packet_size_bits must be a positive integer, got {packet_size_bits}")
        self.packet_size_bits = int(packet_size_bits)
        self.form = form
        if form == "exp-m":
            self._interp = None
        elif form == "tabulated":
            self._interp = self._build_table(table_sir, table_rate)
        else:
            raise ValueError(f"unknown efficiency form {form!r}")

    @classmethod
    def exponential(cls, packet_size_bits: int = 100) -> "EfficiencyModel":
        """The default (1 - e^-g)^M family."""
        return cls(packet_size_bits=packet_size_bits, form="exp-m")

    @classmethod
    def from_table(cls, sir, success_rate, packet_size_bits: int = 100) -> "EfficiencyModel":
        """Tabulated sigmoid; the table must start at (0, 0) and be nondecreasing."""
        return cls(packet_size_bits=packet_size_bits, form="tabulated",
                   table_sir=sir, table_rate=success_rate)

    def _build_table(self, sir, rate):
        sir = np.asarray(sir, dtype=float)
        rate = np.asarray(rate, dtype=float)
        if sir.ndim != 1 or sir.shape != rate.shape or sir.size < 3:
            raise ValueError("table needs matching 1-D sir/success-rate arrays with >= 3 points")
        if sir[0] != 0.0 or rate[0] != 0.0:
            raise ValueError("table must start at (0, 0): success rate is zero at zero SIR")
        if np.any(np.diff(sir) <= 0):
            raise ValueError("table SIR grid must be strictly increasing")
        if np.any(np.diff(rate) < 0) or np.any(rate < 0) or np.any(rate > 1):
            raise ValueError("table success rates must be nondecreasing and within [0, 1]")
        self._table_max_sir = float(sir[-1])
        self._table_max_rate = float(rate[-1])
        return PchipInterpolator(sir, rate, extrapolate=False)

    # -- evaluation ----------------------------------------------------

    def success_rate(self, sir):
        """Packet success rate f(sir).  Accepts scalars or arrays; sir >= 0."""
        g = np.asarray(sir, dtype=float)
        if np.any(g < 0):
            raise ValueError("SIR must be nonnegative")
        if self.form == "exp-m":
            out = -np.expm1(-g)  # 1 - e^-g, accurate near 0
            out = out ** self.packet_size_bits
        else:
            out = np.where(g >= self._table_max_sir, self._table_max_rate,
                           self._interp(np.minimum(g, self._table_max_sir)))
        return float(out) if np.isscalar(sir) or np.ndim(sir) == 0 else out

    def success_rate_derivative(self, sir):
        """f'(sir).  Analytic for exp-m; central finite difference
        (relative step FD_REL_STEP, forward at 0) for tabulated models."""
        g = np.asarray(sir, dtype=float)
        if np.any(g < 0):
            raise ValueError("SIR must be nonnegative")
        if self.form == "exp-m":
            m = self.packet_size_bits
            base = -np.expm1(-g)
            out = m * base ** (m - 1) * np.exp(-g)
        else:
            h = FD_REL_STEP * np.maximum(g, 1.0)
            lo = np.maximum(g - h, 0.0)
            hi = g + h
            out = (self.success_rate(hi) - self.success_rate(lo)) / (hi - lo)
            out = np.maximum(out, 0.0)
        return float(out) if np.isscalar(sir) or np.ndim(sir) == 0 else out

    def optimal_sir(self) -> float:
        """The unique positive SIR solving f(g) = g f'(g).

        This is the operating point at which bits-per-joule utility peaks,
        for any receiver whose output SIR is linear in own power.  Solved
        by bisection on g*f'(g) - f(g) with an expanding upper bracket.
        Raises NoInteriorMaximizer when no positive root exists.
        """
        def slack(g):
            return g * self.success_rate_derivative(g) - self.success_rate(g)

        # The slack is positive on (0, root) and negative beyond it.  Scan
        # for a strictly positive witness first: near zero the slack may
        # underflow to exactly 0 for steep models, so a fixed tiny lower
        # bracket would misreport "no root".
        lo = None
        for g in np.geomspace(1e-8, 1e6, 141):
            if slack(g) > 0.0:
                lo = float(g)
                break
        if lo is None:
            raise NoInteriorMaximizer(
                "no interior maximizer: f(g) = g f'(g) has no positive root")
        hi = 2.0 * lo
        while slack(hi) > 0.0:
            hi *= 2.0
            if hi > 1e12:
                raise NoInteriorMaximizer(
                    "no interior maximizer: f(g) = g f'(g) has no positive root")
        steps = 0
        while hi - lo > 1e-15 * hi and steps < 200:
            mid = 0.5 * (lo + hi)
            if slack(mid) > 0.0:
                lo = mid
            else:
                hi = mid
            steps += 1
        return 0.5 * (lo + hi)

    def __repr__(self):
        return f"EfficiencyModel(form={self.form!r}, packet_size_bits={self.packet_size_bits})"


def optimal_sir(model: EfficiencyModel) -> float:
    """Module-level convenience alias for EfficiencyModel.optimal_sir."""
    return model.optimal_sir()
