"""Objective functions and single-step best responses for the power games.

All SIR models in this package are linear in the user's own power
(sir_k = a_k * p_k with a_k fixed by the other users' powers), so the
bits-per-joule best response is simply the power reaching the target SIR,
capped at the maximum.  The priced variant subtracts a linear cost and is
maximized numerically; the log-capacity and SIR-tracking objectives have
closed-form responses.  A tiny normal-form (matrix) game solver rounds
out the module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .efficiency import EfficiencyModel
from .system import SystemParams

__all__ = [
    "bits_per_joule", "best_response_bpj", "best_response_priced",
    "best_response_log_priced", "best_response_sir_cost",
    "sir_balanced_equilibrium", "BalancedEquilibrium",
    "MatrixGame", "pure_nash", "prisoners_dilemma", "MatrixGameAdapter",
    "PowerControlGame",
]

# Coarse-scan size preceding the golden-section refinement of the priced
# best response; the scan brackets the global peak, golden polishes it.
_PRICED_SCAN_POINTS = 512
_GOLDEN_REL_TOL = 1e-10
_INV_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def bits_per_joule(rate_bps, sir, power, model: EfficiencyModel):
    """Energy efficiency R * f(sir) / p in bits per joule.

    Continuously extended to 0 at zero power (f(0) = 0 keeps the limit
    finite).  Accepts scalars or arrays.
    """
    p = np.asarray(power, dtype=float)
    f = model.success_rate(sir)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(p > 0, rate_bps * f / np.where(p > 0, p, 1.0), 0.0)
    return float(u) if np.ndim(power) == 0 else u


def best_response_bpj(k: int, powers, sir_model, target_sir: float,
                      max_power: float) -> float:
    """Power maximizing R f(sir)/p given the other users' powers: reach the
    target SIR, or transmit at max power when the target is out of reach."""
    a = sir_model.coefficients(powers)[k]
    return min(target_sir / a, max_power)


def _golden_max(fun, lo: float, hi: float, rel_tol: float = _GOLDEN_REL_TOL):
    """Golden-section maximization of a unimodal fun on [lo, hi]."""
    x1 = hi - _INV_GOLDEN * (hi - lo)
    x2 = lo + _INV_GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > rel_tol * max(abs(hi), 1e-300):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_GOLDEN * (hi - lo)
            f2 = fun(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_GOLDEN * (hi - lo)
            f1 = fun(x1)
    x = 0.5 * (lo + hi)
    return x, fun(x)


def best_response_priced(k: int, powers, sir_model, rate_bps: float,
                         model: EfficiencyModel, price: float, max_power: float,
                         target_sir: Optional[float] = None) -> float:
    """Maximizer of R f(sir)/p - price * p over [0, max_power].

    The price term only pulls the maximizer below the unpriced best
    response, so the search runs on (0, p_bpj]: a coarse vectorized scan
    locates the global peak (the net utility dips below zero before it
    rises, so plain golden section alone is not safe), then golden-section
    refines the bracketing interval to 1e-10 relative.  Returns 0 when no
    positive power beats the zero-power net utility of 0.
    """
    if price < 0:
        raise ValueError("price must be nonnegative")
    a = sir_model.coefficients(powers)[k]
    if target_sir is None:
        target_sir = model.optimal_sir()
    p_cap = min(target_sir / a, max_power)
    if price == 0.0:
        return p_cap

    def net(p):
        return rate_bps * model.success_rate(a * p) / p - price * p

    grid = np.linspace(p_cap / _PRICED_SCAN_POINTS, p_cap, _PRICED_SCAN_POINTS)
    vals = rate_bps * model.success_rate(a * grid) / grid - price * grid
    i = int(np.argmax(vals))
    lo = grid[i - 1] if i > 0 else grid[0] / 2.0
    hi = grid[i + 1] if i < len(grid) - 1 else p_cap
    best_p, best_v = _golden_max(net, float(lo), float(hi))
    if best_v <= 0.0:
        return 0.0
    return best_p


def best_response_log_priced(k: int, powers, sir_model, zeta: float,
                             price: float, max_power: float) -> float:
    """Closed-form maximizer of zeta*log(1+sir) - price*p (concave)."""
    if zeta <= 0 or price <= 0:
        raise ValueError("zeta and price must be strictly positive")
    a = sir_model.coefficients(powers)[k]
    return float(np.clip(zeta / price - 1.0 / a, 0.0, max_power))


def best_response_sir_cost(k: int, powers, sir_model, linear_cost: float,
                           quad_weight: float, sir_target: float,
                           max_power: float) -> float:
    """Closed-form minimizer of linear_cost*p + quad_weight*(sir_target - sir)^2
    (convex in own power)."""
    if quad_weight <= 0:
        raise ValueError("quad_weight must be strictly positive")
    if sir_target <= 0:
        raise ValueError("sir_target must be strictly positive")
    a = sir_model.coefficients(powers)[k]
    p = sir_target / a - linear_cost / (2.0 * quad_weight * a * a)
    return float(np.clip(p, 0.0, max_power))


# -- closed-form SIR-balanced equilibrium ----------------------------------

@dataclass(frozen=True)
class BalancedEquilibrium:
    """Closed-form matched-filter equilibrium; powers is None unless the
    interior solution exists within the power limit."""
    status: str                      # "interior" | "cap-constrained" | "infeasible"
    powers: Optional[np.ndarray]
    received_power: Optional[float]  # common p_k h_k at the interior solution


def sir_balanced_equilibrium(gains, params: SystemParams,
                             target_sir: float) -> BalancedEquilibrium:
    """Unique SIR-balanced equilibrium of the bits-per-joule game under the
    1/N matched-filter model.

    Every user's received power equals q = g*sigma^2 / (1 - (K-1)g/N).
    Infeasible when (K-1)*g >= N; cap-constrained (the equilibrium involves
    saturated users; use the iteration engine) when some p_k exceeds the
    power limit.
    """
    h = np.asarray(gains, dtype=float)
    if np.any(h <= 0):
        raise ValueError("gains must be strictly positive")
    n_users = h.shape[0]
    n = params.processing_gain
    denom = 1.0 - (n_users - 1) * target_sir / n
    if denom <= 0.0:
        return BalancedEquilibrium(status="infeasible", powers=None, received_power=None)
    q = target_sir * params.noise_power / denom
    powers = q / h
    if np.any(powers > params.max_power):
        return BalancedEquilibrium(status="cap-constrained", powers=None, received_power=float(q))
    return BalancedEquilibrium(status="interior", powers=powers, received_power=float(q))


# -- finite matrix games ----------------------------------------------------

@dataclass(frozen=True)
class MatrixGame:
    """Two-player normal-form game with a complete payoff table.

    row_payoffs[i][j] / col_payoffs[i][j] are the payoffs when the row
    player picks action i and the column player picks action j.
    """
    row_actions: tuple
    col_actions: tuple
    row_payoffs: np.ndarray
    col_payoffs: np.ndarray

    def __post_init__(self):
        rp = np.asarray(self.row_payoffs, dtype=float)
        cp = np.asarray(self.col_payoffs, dtype=float)
        shape = (len(self.row_actions), len(self.col_actions))
        if rp.shape != shape or cp.shape != shape:
            raise ValueError(f"payoff tables must cover the full action product {shape}")
        object.__setattr__(self, "row_actions", tuple(self.row_actions))
        object.__setattr__(self, "col_actions", tuple(self.col_actions))
        object.__setattr__(self, "row_payoffs", rp)
        object.__setattr__(self, "col_payoffs", cp)

    def payoffs(self, row_action, col_action):
        i = self.row_actions.index(row_action)
        j = self.col_actions.index(col_action)
        return float(self.row_payoffs[i, j]), float(self.col_payoffs[i, j])

    def is_pure_nash(self, row_action, col_action) -> bool:
        i = self.row_actions.index(row_action)
        j = self.col_actions.index(col_action)
        if np.any(self.row_payoffs[:, j] > self.row_payoffs[i, j]):
            return False
        if np.any(self.col_payoffs[i, :] > self.col_payoffs[i, j]):
            return False
        return True


def pure_nash(game: MatrixGame) -> list:
    """All pure-strategy Nash equilibria as (row_action, col_action) pairs;
    the list may be empty."""
    found = []
    for i, ra in enumerate(game.row_actions):
        for j, ca in enumerate(game.col_actions):
            if game.is_pure_nash(ra, ca):
                found.append((ra, ca))
    return found


def prisoners_dilemma() -> MatrixGame:
    """Both confess (C, C) is the unique equilibrium; (NC, NC) dominates it
    for both players but is not stable."""
    return MatrixGame(
        row_actions=("C", "NC"),
        col_actions=("C", "NC"),
        row_payoffs=[[-1.0, +1.0],
                     [-2.0, 0.0]],
        col_payoffs=[[-1.0, -2.0],
                     [+1.0, 0.0]],
    )


class MatrixGameAdapter:
    """Exposes a 2-player matrix game through the iteration-engine protocol.

    Each player's "power" is their action index as a float; utilities
    round to the nearest action, so the engine's deviation grids and
    best responses land on valid actions.
    """

    def __init__(self, game: MatrixGame):
        self.game = game
        self.n_users = 2
        self.n_carriers = 1
        self.max_power = float(max(len(game.row_actions), len(game.col_actions)) - 1)

    def _indices(self, powers):
        i = int(round(float(powers[0, 0])))
        j = int(round(float(powers[1, 0])))
        i = min(max(i, 0), len(self.game.row_actions) - 1)
        j = min(max(j, 0), len(self.game.col_actions) - 1)
        return i, j

    def utility(self, k: int, powers) -> float:
        i, j = self._indices(np.asarray(powers, dtype=float).reshape(2, 1))
        table = self.game.row_payoffs if k == 0 else self.game.col_payoffs
        return float(table[i, j])

    def best_response(self, k: int, powers):
        i, j = self._indices(np.asarray(powers, dtype=float).reshape(2, 1))
        if k == 0:
            best = int(np.argmax(self.game.row_payoffs[:, j]))
        else:
            best = int(np.argmax(self.game.col_payoffs[i, :]))
        return np.array([float(best)]), False

    def state_summary(self, powers):
        utilities = np.array([self.utility(0, powers), self.utility(1, powers)])
        return None, utilities


# -- engine-facing single-carrier game --------------------------------------

class PowerControlGame:
    """Single-carrier power game bundling an SIR model with an objective.

    objective is one of "bpj", "bpj-priced", "log-priced", "sir-cost".
    Per-user parameter arrays default sensibly; prices double as the
    linear-cost weights of the SIR-tracking objective.  For "sir-cost"
    the reported utility is the negated cost, so "higher is better" holds
    for every objective.
    """

    def __init__(self, sir_model, rates, model: EfficiencyModel, max_power: float,
                 objective: str = "bpj", target_sir: Optional[float] = None,
                 prices: Optional[Sequence[float]] = None,
                 zetas: Optional[Sequence[float]] = None,
                 quad_weights: Optional[Sequence[float]] = None,
                 sir_targets: Optional[Sequence[float]] = None):
        self.sir_model = sir_model
        self.rates = np.asarray(rates, dtype=float)
        self.model = model
        self.max_power = float(max_power)
        self.objective = objective
        self.n_users = self.rates.shape[0]
        self.n_carriers = 1
        if objective in ("bpj", "bpj-priced"):
            self.target_sir = float(target_sir) if target_sir is not None else model.optimal_sir()
        else:
            self.target_sir = float(target_sir) if target_sir is not None else None
        k = self.n_users
        self.prices = np.zeros(k) if prices is None else np.asarray(prices, dtype=float)
        self.zetas = np.ones(k) if zetas is None else np.asarray(zetas, dtype=float)
        self.quad_weights = np.ones(k) if quad_weights is None else np.asarray(quad_weights, dtype=float)
        self.sir_targets = None if sir_targets is None else np.asarray(sir_targets, dtype=float)
        if objective not in ("bpj", "bpj-priced", "log-priced", "sir-cost"):
            raise ValueError(f"unknown objective {objective!r}")
        if objective == "sir-cost" and self.sir_targets is None:
            raise ValueError("sir-cost objective needs per-user sir_targets")

    def _column(self, powers):
        return np.asarray(powers, dtype=float).reshape(self.n_users, -1)[:, 0]

    def best_response(self, k: int, powers):
        p = self._column(powers)
        a = self.sir_model.coefficients(p)[k]
        if self.objective == "bpj":
            required = self.target_sir / a
            return np.array([min(required, self.max_power)]), required > self.max_power
        if self.objective == "bpj-priced":
            best = best_response_priced(k, p, self.sir_model, self.rates[k], self.model,
                                        self.prices[k], self.max_power, self.target_sir)
            wants = self.target_sir / a > self.max_power and best >= self.max_power
            return np.array([best]), bool(wants)
        if self.objective == "log-priced":
            raw = self.zetas[k] / self.prices[k] - 1.0 / a
            return np.array([float(np.clip(raw, 0.0, self.max_power))]), raw > self.max_power
        raw = self.sir_targets[k] / a - self.prices[k] / (2.0 * self.quad_weights[k] * a * a)
        return np.array([float(np.clip(raw, 0.0, self.max_power))]), raw > self.max_power

    def best_response_all(self, powers):
        p = self._column(powers)
        a = self.sir_model.coefficients(p)
        if self.objective == "bpj":
            required = self.target_sir / a
            rows = np.minimum(required, self.max_power)
            return rows.reshape(-1, 1), required > self.max_power
        if self.objective == "log-priced":
            raw = self.zetas / self.prices - 1.0 / a
            return np.clip(raw, 0.0, self.max_power).reshape(-1, 1), raw > self.max_power
        if self.objective == "sir-cost":
            raw = self.sir_targets / a - self.prices / (2.0 * self.quad_weights * a * a)
            return np.clip(raw, 0.0, self.max_power).reshape(-1, 1), raw > self.max_power
        rows = np.empty(self.n_users)
        wants = np.empty(self.n_users, dtype=bool)
        for k in range(self.n_users):
            row, w = self.best_response(k, p)
            rows[k] = row[0]
            wants[k] = w
        return rows.reshape(-1, 1), wants

    def utility(self, k: int, powers) -> float:
        p = self._column(powers)
        a = self.sir_model.coefficients(p)
        return float(self._utilities(p, a)[k])

    def _utilities(self, p, a):
        sirs = a * p
        if self.objective == "bpj":
            return bits_per_joule(self.rates, sirs, p, self.model)
        if self.objective == "bpj-priced":
            return bits_per_joule(self.rates, sirs, p, self.model) - self.prices * p
        if self.objective == "log-priced":
            return self.zetas * np.log1p(sirs) - self.prices * p
        cost = self.prices * p + self.quad_weights * (self.sir_targets - sirs) ** 2
        return -cost

    def state_summary(self, powers):
        p = self._column(powers)
        a = self.sir_model.coefficients(p)
        return a * p, self._utilities(p, a)
