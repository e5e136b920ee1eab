"""Best-response iteration engine with convergence and cycle detection.

Works on any game object exposing:

    n_users, n_carriers, max_power
    best_response(k, powers) -> (row of n_carriers powers, wants_above_cap)
    utility(k, powers) -> float
    state_summary(powers) -> (sirs or None, utilities)
    best_response_all(powers) -> (K x D powers, wants)   # optional fast path

powers is always a (n_users, n_carriers) array.  The engine itself is
deterministic and single-threaded; independent scenarios can run in
parallel with no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "GameState", "EquilibriumReport", "iterate", "verify_nash",
    "STATUS_CONVERGED", "STATUS_INFEASIBLE", "STATUS_CYCLE", "STATUS_MAX_ITERS",
]

STATUS_CONVERGED = "converged"
STATUS_INFEASIBLE = "infeasible-all-max-power"
STATUS_CYCLE = "cycle-detected"
STATUS_MAX_ITERS = "max-iterations"

# Quantization step (relative to max power) for the cycle-detection hash.
# Kept three orders below the convergence threshold so near-converged
# iterates can never alias into a false cycle.
_CYCLE_QUANTUM_REL = 1e-12

# Sweeps every user must spend wanting more than max power before the
# all-at-cap outcome is declared; guards against mid-transient false hits.
_CAP_STREAK = 3


@dataclass
class GameState:
    """Power allocation with its derived SIRs and utilities."""
    powers: np.ndarray                    # (n_users, n_carriers)
    sirs: Optional[np.ndarray] = None     # (n_users,) or (n_users, n_carriers)
    utilities: Optional[np.ndarray] = None


@dataclass
class EquilibriumReport:
    state: GameState
    iterations: int
    status: str
    ne_verified: Optional[bool] = None    # set only by an explicit deviation check
    worst_deviation_gain: Optional[float] = None
    history: Optional[list] = None        # per-sweep power matrices if tracked


def _state_key(powers: np.ndarray, quantum: float) -> bytes:
    return np.round(powers / quantum).astype(np.int64).tobytes()


def iterate(game, initial=None, schedule: str = "gauss-seidel",
            tol: float = 1e-9, max_iters: int = 100000,
            track_history: bool = False) -> EquilibriumReport:
    """Run best-response dynamics until convergence, a repeated state, an
    all-users-at-cap equilibrium failure, or the iteration limit.

    Convergence means the largest per-entry power change in a sweep drops
    below tol * max_power.  gauss-seidel updates users in id order within
    a sweep; jacobi updates all users simultaneously from the previous
    sweep's state.
    """
    if schedule not in ("gauss-seidel", "jacobi"):
        raise ValueError(f"unknown schedule {schedule!r}")
    n_users, n_carriers = game.n_users, game.n_carriers
    p_max = game.max_power
    if initial is None:
        powers = np.zeros((n_users, n_carriers))
    else:
        powers = np.array(initial, dtype=float).reshape(n_users, n_carriers)
        if np.any(powers < 0) or np.any(powers > p_max):
            raise ValueError("initial powers must lie in [0, max_power]")

    quantum = max(min(_CYCLE_QUANTUM_REL, 1e-3 * tol), 1e-17) * p_max
    seen = {_state_key(powers, quantum)}
    history = [powers.copy()] if track_history else None
    capped_streak = 0
    status = STATUS_MAX_ITERS
    sweeps = 0

    for sweeps in range(1, max_iters + 1):
        previous = powers.copy()
        wants = np.zeros(n_users, dtype=bool)
        if schedule == "jacobi":
            if hasattr(game, "best_response_all"):
                rows, wants = game.best_response_all(previous)
                powers = np.asarray(rows, dtype=float).reshape(n_users, n_carriers).copy()
                wants = np.asarray(wants, dtype=bool)
            else:
                powers = previous.copy()
                for k in range(n_users):
                    row, w = game.best_response(k, previous)
                    powers[k, :] = row
                    wants[k] = w
        else:
            for k in range(n_users):
                row, w = game.best_response(k, powers)
                powers[k, :] = row
                wants[k] = w

        if track_history:
            history.append(powers.copy())
        delta = float(np.max(np.abs(powers - previous)))
        all_capped = bool(wants.all())
        capped_streak = capped_streak + 1 if all_capped else 0

        if capped_streak >= _CAP_STREAK:
            status = STATUS_INFEASIBLE
            break
        if delta < tol * p_max:
            if all_capped:
                continue        # let the streak confirm the cap outcome
            status = STATUS_CONVERGED
            break
        key = _state_key(powers, quantum)
        if key in seen:
            status = STATUS_CYCLE
            break
        seen.add(key)

    sirs, utilities = game.state_summary(powers)
    state = GameState(powers=powers, sirs=sirs, utilities=utilities)
    return EquilibriumReport(state=state, iterations=sweeps, status=status,
                             history=history)


def verify_nash(game, powers, deviation_grid_size: int = 64,
                tol: float = 1e-9) -> tuple[bool, float]:
    """Check the no-profitable-unilateral-deviation condition by sampling.

    For each user, candidate deviations are a grid over [0, max_power] per
    carrier (the full product grid across carriers) plus the user's own
    best response.  Returns (is_nash, worst_gain) where worst_gain is the
    largest observed relative utility improvement; is_nash holds when it
    does not exceed tol.
    """
    powers = np.asarray(powers, dtype=float).reshape(game.n_users, game.n_carriers)
    axis = np.linspace(0.0, game.max_power, deviation_grid_size)
    if game.n_carriers == 1:
        candidates = axis.reshape(-1, 1)
    else:
        grids = np.meshgrid(*([axis] * game.n_carriers), indexing="ij")
        candidates = np.stack([g.ravel() for g in grids], axis=1)

    worst = 0.0
    for k in range(game.n_users):
        base = game.utility(k, powers)
        rows = [candidates]
        br, _ = game.best_response(k, powers)
        rows.append(np.asarray(br, dtype=float).reshape(1, -1))
        trial = powers.copy()
        for block in rows:
            for row in block:
                trial[k, :] = row
                u = game.utility(k, trial)
                denom = max(abs(base), abs(u), 1e-300)
                gain = (u - base) / denom
                if gain > worst:
                    worst = gain
    return worst <= tol, worst
