"""System parameters, user population, channel gains, and spreading sequences.

Channel gains follow h = A * d^-4 * X where X is 1 (path loss only) or a
unit-mean exponential draw per (carrier, antenna) pair (Rayleigh power
fading).  Generation is deterministic given a 64-bit seed (NumPy PCG64);
draws are consumed users-outer, carriers-middle, antennas-inner, so
results are portable across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SystemParams", "UserProfile", "SpreadingSet", "Scenario", "ScenarioError",
    "generate_gains", "generate_spreading", "load_scenario", "scenario_from_dict",
]

DEFAULT_PATHLOSS_AMPLITUDE = 0.097
DEFAULT_PATHLOSS_EXPONENT = 4.0


class ScenarioError(ValueError):
    """Malformed scenario configuration; message carries the offending field."""


@dataclass(frozen=True)
class SystemParams:
    """Cell-wide constants shared by every game."""
    bandwidth_hz: float = 5e6
    processing_gain: int = 128
    noise_power: float = 5e-16     # includes other-cell interference
    max_power: float = 1.0
    carriers: int = 1
    rx_antennas: int = 1
    common_rate_bps: float = 1e4

    def __post_init__(self):
        for name in ("bandwidth_hz", "processing_gain", "noise_power",
                     "max_power", "carriers", "rx_antennas", "common_rate_bps"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"SystemParams.{name} must be strictly positive, got {value}")
        if int(self.carriers) != self.carriers or int(self.rx_antennas) != self.rx_antennas:
            raise ValueError("carriers and rx_antennas must be integers")


@dataclass(frozen=True, eq=False)
class UserProfile:
    """One terminal: channel gains plus its traffic/QoS attributes.

    gains has shape (carriers, rx_antennas); entry (l, a) is the channel
    gain from the user to receive antenna a on carrier l.
    """
    id: int
    distance_m: Optional[float] = None
    gains: Optional[np.ndarray] = None
    rate_bps: Optional[float] = None         # falls back to params.common_rate_bps
    arrival_rate_pps: Optional[float] = None
    delay_bound_s: Optional[float] = None
    pricing_factor: float = 0.0

    def __post_init__(self):
        if self.gains is not None:
            g = np.atleast_2d(np.asarray(self.gains, dtype=float))
            if np.any(g <= 0):
                raise ValueError(f"user {self.id}: gains must be strictly positive")
            object.__setattr__(self, "gains", g)
        if self.distance_m is not None and not self.distance_m > 0:
            raise ValueError(f"user {self.id}: distance_m must be positive")
        if self.delay_bound_s is not None:
            if not self.delay_bound_s > 0:
                raise ValueError(f"user {self.id}: delay_bound_s must be positive")
            if self.arrival_rate_pps is None:
                raise ValueError(f"user {self.id}: delay_bound_s requires arrival_rate_pps")
        if self.arrival_rate_pps is not None and self.arrival_rate_pps < 0:
            raise ValueError(f"user {self.id}: arrival_rate_pps must be nonnegative")
        if self.pricing_factor < 0:
            raise ValueError(f"user {self.id}: pricing_factor must be nonnegative")

    def rate_of(self, params: SystemParams) -> float:
        return self.rate_bps if self.rate_bps is not None else params.common_rate_bps

    def gain(self, carrier: int = 0, antenna: int = 0) -> float:
        if self.gains is None:
            raise ValueError(f"user {self.id}: gains not generated yet")
        return float(self.gains[carrier, antenna])

    def combined_gain(self, carrier: int = 0) -> float:
        """Sum of gains across receive antennas on one carrier."""
        if self.gains is None:
            raise ValueError(f"user {self.id}: gains not generated yet")
        return float(self.gains[carrier, :].sum())


@dataclass(frozen=True, eq=False)
class SpreadingSet:
    """K unit-norm spreading sequences of length N (rows)."""
    sequences: np.ndarray
    mode: str = "random-binary"

    def __post_init__(self):
        s = np.asarray(self.sequences, dtype=float)
        if s.ndim != 2:
            raise ValueError("sequences must be a K x N matrix")
        norms = np.linalg.norm(s, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("every spreading sequence must have unit norm")
        if self.mode == "orthogonal":
            k, n = s.shape
            if k > n:
                raise ValueError(f"orthogonal mode requires K <= N, got K={k}, N={n}")
            gram = s @ s.T
            off = gram - np.eye(k)
            if np.max(np.abs(off)) > 1e-12:
                raise ValueError("orthogonal mode requires pairwise orthogonal sequences")
        object.__setattr__(self, "sequences", s)

    @property
    def n_users(self) -> int:
        return self.sequences.shape[0]

    @property
    def length(self) -> int:
        return self.sequences.shape[1]


def generate_gains(seed: int, users: Sequence[UserProfile], params: SystemParams,
                   model: str = "rayleigh",
                   amplitude: float = DEFAULT_PATHLOSS_AMPLITUDE,
                   exponent: float = DEFAULT_PATHLOSS_EXPONENT) -> list[UserProfile]:
    """Populate channel gains for users that specify a distance.

    h = amplitude * d^-exponent * X with X = 1 (path-loss-only) or a
    unit-mean exponential draw per (carrier, antenna) for Rayleigh power
    fading.  Users that already carry explicit gains are passed through
    unchanged (their shape is validated against params).
    """
    if model not in ("rayleigh", "path-loss-only"):
        raise ValueError(f"unknown channel model {model!r}")
    rng = np.random.default_rng(seed)
    out = []
    for user in users:
        if user.gains is not None:
            g = user.gains
            if g.size == 1:
                g = np.full((params.carriers, params.rx_antennas), float(g.ravel()[0]))
            elif g.shape == (1, params.carriers):
                g = g.reshape(params.carriers, 1).repeat(params.rx_antennas, axis=1)
            if g.shape != (params.carriers, params.rx_antennas):
                raise ValueError(
                    f"user {user.id}: gains shape {user.gains.shape} does not match "
                    f"(carriers={params.carriers}, rx_antennas={params.rx_antennas})")
            out.append(replace(user, gains=g))
            continue
        if user.distance_m is None:
            raise ValueError(f"user {user.id}: needs either gains or distance_m")
        mean = amplitude * user.distance_m ** (-exponent)
        if model == "path-loss-only":
            fading = np.ones((params.carriers, params.rx_antennas))
        else:
            fading = rng.exponential(1.0, size=(params.carriers, params.rx_antennas))
        out.append(replace(user, gains=mean * fading))
    return out


def generate_spreading(seed: int, n_users: int, length: int,
                       mode: str = "random-binary") -> SpreadingSet:
    """Draw K spreading sequences of length N, deterministic per seed.

    random-binary: i.i.d. entries +-1/sqrt(N).  orthogonal: a random
    orthonormal set (QR of a Gaussian matrix), requires K <= N.
    """
    if n_users < 1 or length < 1:
        raise ValueError("n_users and length must be positive")
    rng = np.random.default_rng(seed)
    if mode == "random-binary":
        signs = rng.integers(0, 2, size=(n_users, length)) * 2 - 1
        seq = signs / np.sqrt(length)
    elif mode == "orthogonal":
        if n_users > length:
            raise ValueError(f"orthogonal mode requires K <= N, got K={n_users}, N={length}")
        q, _ = np.linalg.qr(rng.standard_normal((length, n_users)))
        seq = q.T
        # qr leaves norms at 1 up to rounding; tighten to the invariant
        seq = seq / np.linalg.norm(seq, axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown spreading mode {mode!r}")
    return SpreadingSet(sequences=seq, mode=mode)


# -- scenario files ------------------------------------------------------

@dataclass
class Scenario:
    params: SystemParams
    users: list[UserProfile] = field(default_factory=list)
    seed: int = 0
    channel_model: str = "rayleigh"

    @property
    def n_users(self) -> int:
        return len(self.users)

    def with_gains(self) -> "Scenario":
        users = generate_gains(self.seed, self.users, self.params, self.channel_model)
        return Scenario(params=self.params, users=users, seed=self.seed,
                        channel_model=self.channel_model)


def scenario_from_dict(raw: dict) -> Scenario:
    """Build a Scenario from the JSON schema; raises ScenarioError with the
    offending field on any violation."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario root must be a JSON object")
    sys_raw = raw.get("system", {})
    if not isinstance(sys_raw, dict):
        raise ScenarioError("field 'system' must be an object")
    known = {"bandwidth_hz", "processing_gain", "noise_power", "max_power",
             "carriers", "rx_antennas", "common_rate_bps"}
    unknown = set(sys_raw) - known
    if unknown:
        raise ScenarioError(f"unknown system field(s): {sorted(unknown)}")
    try:
        params = SystemParams(**sys_raw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid system parameters: {exc}") from exc

    users_raw = raw.get("users", [])
    if not isinstance(users_raw, list) or not users_raw:
        raise ScenarioError("field 'users' must be a non-empty list")
    users = []
    for i, u in enumerate(users_raw):
        if not isinstance(u, dict):
            raise ScenarioError(f"users[{i}] must be an object")
        allowed = {"distance_m", "gains", "rate_bps", "arrival_rate_pps",
                   "delay_bound_s", "pricing_factor"}
        unknown = set(u) - allowed
        if unknown:
            raise ScenarioError(f"users[{i}]: unknown field(s) {sorted(unknown)}")
        kwargs = dict(u)
        if "gains" in kwargs and kwargs["gains"] is not None:
            kwargs["gains"] = np.atleast_2d(np.asarray(kwargs["gains"], dtype=float))
        try:
            users.append(UserProfile(id=i, **kwargs))
        except ValueError as exc:
            raise ScenarioError(f"users[{i}]: {exc}") from exc
        if users[-1].gains is None and users[-1].distance_m is None:
            raise ScenarioError(f"users[{i}]: needs either 'gains' or 'distance_m'")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("field 'seed' must be an integer")
    channel_model = raw.get("channel_model", "rayleigh")
    if channel_model not in ("rayleigh", "path-loss-only"):
        raise ScenarioError(f"field 'channel_model' must be 'rayleigh' or "
                            f"'path-loss-only', got {channel_model!r}")
    return Scenario(params=params, users=users, seed=seed, channel_model=channel_model)


def load_scenario(path: str) -> Scenario:
    """Read a scenario JSON file; JSON syntax errors keep their line/column."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return scenario_from_dict(raw)
