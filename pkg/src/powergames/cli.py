"""Experiment command line: scenario runs, parameter sweeps, figure tables.

Subcommands: gamma-star, equilibrium, sweep-load, multicarrier, delay-qos.
Every subcommand accepts --seed, --tol, --max-iters, --format {csv,json}
and --out; identical invocations produce byte-identical output.  Floats
are printed with 17 significant digits and a '.' decimal separator.

Exit codes: 0 success, 1 configuration error, 2 domain error (for example
an efficiency model with no interior maximizer, or a load beyond the
receiver's capacity).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import dynamics, experiments
from .delayqos import InfeasibleQos
from .efficiency import EfficiencyModel, NoInteriorMaximizer
from .games import PowerControlGame
from .receivers import (
    LinearReceiverSirModel, LoadBeyondCapacity, MfSirModel, ReceiverKind,
    SingularReceiver,
)
from .system import ScenarioError, generate_spreading, load_scenario

__all__ = ["main"]

_FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Bad command line or scenario configuration (exit code 1)."""


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _FLOAT_FMT % value
    return str(value)


def write_rows(rows: list[dict], columns: list[str], fmt: str, out_path=None) -> str:
    """Serialize rows to CSV or JSON text and write it to out_path/stdout."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
        text = buf.getvalue()
    else:
        payload = [{c: row[c] for c in columns} for row in rows]
        text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _parse_linear_range(spec: str) -> list[float]:
    """start:stop:step, inclusive of stop up to half a step."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"range {spec!r} must be start:stop:step") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"range {spec!r} must be nonempty with positive step")
    count = int(round((stop - start) / step)) + 1
    values = [start + i * step for i in range(count) if start + i * step <= stop + step / 2]
    if not values:
        raise ConfigError(f"range {spec!r} is empty")
    return values


def _parse_log_range(spec: str) -> list[float]:
    """start:stop:points, log-spaced."""
    parts = spec.split(":")
    try:
        start, stop = float(parts[0]), float(parts[1])
        points = int(parts[2])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"range {spec!r} must be start:stop:points") from exc
    if start <= 0 or stop <= start or points < 2:
        raise ConfigError(f"log range {spec!r} needs 0 < start < stop and points >= 2")
    return [float(v) for v in np.geomspace(start, stop, points)]


def _parse_int_range(spec: str) -> list[int]:
    if ":" in spec:
        return [int(round(v)) for v in _parse_linear_range(spec)]
    return [int(spec)]


def _efficiency_from_args(args) -> EfficiencyModel:
    if getattr(args, "efficiency_table", None):
        table = np.loadtxt(args.efficiency_table, delimiter=",")
        if table.ndim != 2 or table.shape[1] != 2:
            raise ConfigError(f"{args.efficiency_table}: expected two CSV columns sir,success_rate")
        return EfficiencyModel.from_table(table[:, 0], table[:, 1],
                                          packet_size_bits=args.packet_size)
    if args.efficiency != "exp-m":
        raise ConfigError(f"unknown efficiency form {args.efficiency!r}")
    return EfficiencyModel.exponential(args.packet_size)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--tol", type=float, default=1e-9,
                        help="convergence tolerance relative to max power")
    parser.add_argument("--max-iters", type=int, default=100000,
                        help="iteration-sweep limit")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", default=None, help="output path (default stdout)")


def _add_efficiency(parser: argparse.ArgumentParser):
    parser.add_argument("--efficiency", default="exp-m",
                        help="efficiency model form (exp-m)")
    parser.add_argument("--efficiency-table", default=None,
                        help="CSV file with sir,success_rate rows for a tabulated model")
    parser.add_argument("--packet-size", type=int, default=100,
                        help="packet size in bits")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powergames",
        description="Energy-efficient power control games: equilibria and figure data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gamma-star", help="utility-optimal SIR target of the efficiency model")
    _add_efficiency(p)
    _add_common(p)

    p = sub.add_parser("equilibrium", help="equilibrium of a scenario file")
    p.add_argument("--config", required=True, help="scenario JSON path")
    p.add_argument("--receiver", default="avg-mf",
                   choices=("avg-mf", "mf", "de", "mmse"),
                   help="avg-mf is the 1/N matched-filter model; the rest use "
                        "spreading sequences generated from the scenario seed")
    p.add_argument("--objective", default="bpj",
                   choices=("bpj", "bpj-priced", "log-priced", "sir-cost"))
    p.add_argument("--zeta", type=float, default=1.0,
                   help="log-capacity weight for the log-priced objective")
    p.add_argument("--sir-target", type=float, default=None,
                   help="target SIR for the sir-cost objective")
    p.add_argument("--quad-weight", type=float, default=1.0,
                   help="quadratic weight for the sir-cost objective")
    p.add_argument("--schedule", default="gauss-seidel", choices=("gauss-seidel", "jacobi"))
    _add_efficiency(p)
    _add_common(p)

    p = sub.add_parser("sweep-load", help="average utility vs load per receiver")
    p.add_argument("--alpha", default="0.05:1.9:0.05", help="load range start:stop:step")
    p.add_argument("--receivers", default="mf,de,mmse")
    p.add_argument("--antennas", default="1,2")
    p.add_argument("--trials", type=int, default=0,
                   help="finite-system Monte Carlo trials per point (0 = formulas only)")
    p.add_argument("--gain", type=int, default=256, help="processing gain N")
    p.add_argument("--noise", type=float, default=5e-16, help="noise power in watts")
    p.add_argument("--max-power", type=float, default=10.0)
    p.add_argument("--rate", type=float, default=1e4, help="transmission rate in bps")
    p.add_argument("--distance", type=float, default=100.0, help="user distance in meters")
    _add_efficiency(p)
    _add_common(p)

    p = sub.add_parser("multicarrier", help="joint vs per-carrier-independent utility")
    p.add_argument("--users", default="1:16:1", help="user counts start:stop:step or single K")
    p.add_argument("--carriers", type=int, default=2)
    p.add_argument("--gain", type=int, default=128, help="processing gain N per carrier")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--noise", type=float, default=5e-16)
    p.add_argument("--max-power", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=1e4)
    p.add_argument("--distance", type=float, default=100.0)
    _add_efficiency(p)
    _add_common(p)

    p = sub.add_parser("delay-qos", help="user size, capacity and goodput vs delay")
    p.add_argument("--source-rates", default="50,100,200",
                   help="comma-separated packet arrival rates (packets/s)")
    p.add_argument("--delay-range", default="1e3:1e6:25",
                   help="normalized delay (delay * bandwidth) start:stop:points, log spaced")
    p.add_argument("--bandwidth", type=float, default=5e6, help="system bandwidth in Hz")
    _add_efficiency(p)
    _add_common(p)
    return parser


def cmd_gamma_star(args) -> int:
    model = _efficiency_from_args(args)
    target = model.optimal_sir()
    rows = [{"gamma_star": target, "f_at_gamma_star": model.success_rate(target)}]
    write_rows(rows, ["gamma_star", "f_at_gamma_star"], args.format, args.out)
    return 0


def _scenario_game(args):
    scenario = load_scenario(args.config).with_gains()
    params = scenario.params
    gains = np.array([u.gain(0, 0) for u in scenario.users])
    rates = np.array([u.rate_of(params) for u in scenario.users])
    prices = np.array([u.pricing_factor for u in scenario.users])
    model = _efficiency_from_args(args)

    if args.receiver == "avg-mf":
        sir_model = MfSirModel(gains, params.processing_gain, params.noise_power)
    else:
        spreading = generate_spreading(scenario.seed, len(gains),
                                       params.processing_gain, "random-binary")
        sir_model = LinearReceiverSirModel(gains, spreading, params.noise_power,
                                           ReceiverKind.from_name(args.receiver))
    kwargs = {}
    if args.objective in ("bpj-priced", "log-priced", "sir-cost"):
        kwargs["prices"] = prices
    if args.objective == "log-priced":
        kwargs["zetas"] = np.full(len(gains), args.zeta)
    if args.objective == "sir-cost":
        if args.sir_target is None:
            raise ConfigError("--sir-target is required for the sir-cost objective")
        kwargs["sir_targets"] = np.full(len(gains), args.sir_target)
        kwargs["quad_weights"] = np.full(len(gains), args.quad_weight)
    game = PowerControlGame(sir_model, rates, model, params.max_power,
                            objective=args.objective, **kwargs)
    return game


def cmd_equilibrium(args) -> int:
    game = _scenario_game(args)
    report = dynamics.iterate(game, schedule=args.schedule, tol=args.tol,
                              max_iters=args.max_iters)
    sirs = report.state.sirs
    utilities = report.state.utilities
    rows = []
    with np.errstate(divide="ignore"):
        sir_db = 10.0 * np.log10(np.maximum(sirs, 0.0))
    for k in range(game.n_users):
        rows.append({
            "user_id": k,
            "power_w": float(report.state.powers[k, 0]),
            "sir": float(sirs[k]),
            "sir_db": float(sir_db[k]),
            "utility_bpj": float(utilities[k]),
            "status": report.status,
        })
    write_rows(rows, ["user_id", "power_w", "sir", "sir_db", "utility_bpj", "status"],
               args.format, args.out)
    return 0


def cmd_sweep_load(args) -> int:
    model = _efficiency_from_args(args)
    receivers = [ReceiverKind.from_name(r) for r in args.receivers.split(",") if r]
    antennas = [int(a) for a in args.antennas.split(",") if a]
    rows = experiments.sweep_load(
        alphas=_parse_linear_range(args.alpha), receivers=receivers,
        antennas_list=antennas, model=model, processing_gain=args.gain,
        noise_power=args.noise, max_power=args.max_power, rate_bps=args.rate,
        distance_m=args.distance, trials=args.trials, seed=args.seed,
        tol=args.tol, max_iters=args.max_iters)
    write_rows(rows, ["alpha", "receiver", "antennas", "utility_large_system",
                      "utility_finite_mc_mean", "utility_finite_mc_stderr", "feasible"],
               args.format, args.out)
    return 0


def cmd_multicarrier(args) -> int:
    model = _efficiency_from_args(args)
    rows = experiments.multicarrier_trials(
        user_counts=_parse_int_range(args.users), carriers=args.carriers,
        processing_gain=args.gain, model=model, trials=args.trials,
        seed=args.seed, noise_power=args.noise, max_power=args.max_power,
        rate_bps=args.rate, distance_m=args.distance, tol=args.tol,
        max_iters=args.max_iters)
    write_rows(rows, ["K", "trial", "total_utility_joint",
                      "total_utility_independent", "converged", "split"],
               args.format, args.out)
    return 0


def cmd_delay_qos(args) -> int:
    model = _efficiency_from_args(args)
    rates = [float(r) for r in args.source_rates.split(",") if r]
    if not rates:
        raise ConfigError("--source-rates must list at least one rate")
    rows = experiments.delay_qos_table(
        normalized_delays=_parse_log_range(args.delay_range),
        source_rates_pps=rates, model=model, bandwidth_hz=args.bandwidth)
    write_rows(rows, ["normalized_delay", "source_rate_pps", "size_phi",
                      "capacity_K", "omega_over_B", "total_goodput_over_B"],
               args.format, args.out)
    return 0


_COMMANDS = {
    "gamma-star": cmd_gamma_star,
    "equilibrium": cmd_equilibrium,
    "sweep-load": cmd_sweep_load,
    "multicarrier": cmd_multicarrier,
    "delay-qos": cmd_delay_qos,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NoInteriorMaximizer, LoadBeyondCapacity, SingularReceiver,
            InfeasibleQos) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
