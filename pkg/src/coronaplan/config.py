"""Run configuration: JSON ingestion with explicit unit conversion.

Config keys carry their unit in the name (nJ, pJ, meters, minutes) because
mixed-unit parameter tables are the likeliest user error source; everything is
converted to SI (J, m, min) at load time. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .model import CostParams, NetworkSpec, Variant
from .optimizer import SolverConfig

# divisors are exact powers of ten, so nJ -> J and pJ -> J conversions are
# correctly rounded (multiplying by 1e-9 would round twice)
NANO_PER_UNIT = 1e9
PICO_PER_UNIT = 1e12

# (json key, NetworkSpec field, divisor to SI)
_NETWORK_KEYS = (
    ("radius_m", "radius", 1.0),
    ("density_per_m2", "density", 1.0),
    ("data_rate_bits_per_min", "data_rate", 1.0),
    ("compression_factor", "compression", 1.0),
    ("lifetime_min", "lifetime", 1.0),
    ("mgmt_energy_nJ_per_min", "mgmt_energy", NANO_PER_UNIT),
    ("tx_min_m", "tx_min", 1.0),
    ("tx_max_m", "tx_max", 1.0),
    ("gen_energy_nJ_per_bit", "gen_energy", NANO_PER_UNIT),
    ("elec_energy_nJ_per_bit", "elec_energy", NANO_PER_UNIT),
    ("amp_energy_pJ_per_bit_m2", "amp_energy", PICO_PER_UNIT),
    ("agg_energy_nJ_per_bit", "agg_energy", NANO_PER_UNIT),
)

_COST_KEYS = (
    ("hw_cost_per_sensor", "hw_cost", 1.0),
    ("energy_cost_per_J", "energy_cost", 1.0),
    ("sink_cost", "sink_cost", 1.0),
)

_SOLVER_KEYS = (
    ("restarts", "restarts"),
    ("max_iterations", "max_iterations"),
    ("width_tolerance_m", "width_tolerance"),
    ("objective_tolerance", "objective_tolerance"),
    ("seed", "seed"),
)


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs: network, cost, variant, solver knobs."""

    spec: NetworkSpec
    cost: CostParams
    variant: Variant
    solver: SolverConfig


def _number(section: dict, key: str, where: str) -> float:
    if key not in section:
        raise ConfigError(f"{where}: missing key '{key}'")
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number")
    return float(value)


def _section(data: dict, name: str) -> dict:
    if name not in data:
        raise ConfigError(f"missing section '{name}'")
    section = data[name]
    if not isinstance(section, dict):
        raise ConfigError(f"section '{name}' must be an object")
    return section


def config_from_dict(data: dict) -> RunConfig:
    """Build a validated RunConfig from parsed JSON."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    known_top = {"network", "cost", "variant", "solver"}
    extra = set(data) - known_top
    if extra:
        raise ConfigError(f"unknown key '{sorted(extra)[0]}'")

    network = _section(data, "network")
    unknown = set(network) - {key for key, _, _ in _NETWORK_KEYS}
    if unknown:
        raise ConfigError(f"network: unknown key '{sorted(unknown)[0]}'")
    spec_kwargs = {field: _number(network, key, "network") / divisor
                   for key, field, divisor in _NETWORK_KEYS}
    try:
        spec = NetworkSpec(**spec_kwargs)
    except ValueError as exc:
        raise ConfigError(f"network: {exc}") from None

    cost_section = _section(data, "cost")
    unknown = set(cost_section) - {key for key, _, _ in _COST_KEYS}
    if unknown:
        raise ConfigError(f"cost: unknown key '{sorted(unknown)[0]}'")
    cost_kwargs = {field: _number(cost_section, key, "cost") / divisor
                   for key, field, divisor in _COST_KEYS}
    try:
        cost = CostParams(**cost_kwargs)
    except ValueError as exc:
        raise ConfigError(f"cost: {exc}") from None

    raw_variant = data.get("variant", Variant.BASELINE.value)
    try:
        variant = Variant(raw_variant)
    except ValueError:
        raise ConfigError(f"variant: expected 'baseline' or 'improved', got {raw_variant!r}") from None

    solver_section = data.get("solver", {})
    if not isinstance(solver_section, dict):
        raise ConfigError("section 'solver' must be an object")
    unknown = set(solver_section) - {key for key, _ in _SOLVER_KEYS}
    if unknown:
        raise ConfigError(f"solver: unknown key '{sorted(unknown)[0]}'")
    solver_kwargs = {}
    for key, field in _SOLVER_KEYS:
        if key in solver_section:
            value = _number(solver_section, key, "solver")
            if field in ("restarts", "max_iterations", "seed"):
                if not value.is_integer():
                    raise ConfigError(f"solver.{key}: expected an integer")
                value = int(value)
            solver_kwargs[field] = value
    try:
        solver = SolverConfig(**solver_kwargs)
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from None

    return RunConfig(spec=spec, cost=cost, variant=variant, solver=solver)


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def default_config() -> RunConfig:
    """The bundled reference parameter set."""
    text = resources.files("coronaplan").joinpath("data/default_config.json").read_text("utf-8")
    return config_from_dict(json.loads(text))
