"""Non-cooperative energy-efficient power control games for uplink CDMA.

Simulation library plus experiment CLI: efficiency (packet-success-rate)
models, finite- and large-system receiver SIRs, best-response dynamics
with equilibrium verification, multicarrier carrier-selection games, and
delay-QoS admission/capacity analysis.
"""

from .efficiency import EfficiencyModel, NoInteriorMaximizer, optimal_sir
from .system import (
    Scenario, ScenarioError, SpreadingSet, SystemParams, UserProfile,
    generate_gains, generate_spreading, load_scenario, scenario_from_dict,
)
from .receivers import (
    LargeSystemPoint, LinearReceiverSirModel, LoadBeyondCapacity, MfSirModel,
    ReceiverKind, SingularReceiver, large_system_margin, large_system_utility,
    large_system_utility_value, sir_linear, sir_mf,
)
from .games import (
    BalancedEquilibrium, MatrixGame, MatrixGameAdapter, PowerControlGame,
    best_response_bpj, best_response_log_priced, best_response_priced,
    best_response_sir_cost, bits_per_joule, prisoners_dilemma, pure_nash,
    sir_balanced_equilibrium,
)
from .dynamics import (
    STATUS_CONVERGED, STATUS_CYCLE, STATUS_INFEASIBLE, STATUS_MAX_ITERS,
    EquilibriumReport, GameState, iterate, verify_nash,
)
from .multicarrier import (
    McOutcome, MulticarrierGame, best_carrier_response, carrier_counts,
    carrier_support, independent_baseline, run_game, total_bits_per_joule,
)
from .delayqos import (
    InfeasibleQos, QosProfile, capacity, equilibrium_utility, feasible,
    required_rate, solve_powers, user_size,
)

__version__ = "0.1.0"
