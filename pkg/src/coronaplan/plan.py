"""Deployment plans: integerized provisioning per corona plus JSON serialization.

A plan is the concrete artifact handed to whoever throws the sensors: how many
nodes go on each ring, how many clusters they must form, which transmission
distances to configure, and how much battery to assemble per node. Plans echo
the full network and cost parameters so a plan file is self-contained.

File format: JSON, UTF-8, fixed key order as emitted by :func:`plan_to_dict`,
lengths in meters, energies in joules, mandatory ``schema_version``. Unknown
keys are rejected on load.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from . import model
from .errors import InfeasibleProvision, ParseError, SchemaMismatch
from .model import CoronaLayout, CostParams, NetworkSpec, Variant
from .optimizer import Solution

SCHEMA_VERSION = 1

# tolerance for radius/width consistency checks on parsed plans [m]
_GEOM_ATOL = 1e-6


@dataclass(frozen=True)
class CoronaProvision:
    """Everything needed to provision one corona."""

    index: int                 # 1-based, innermost first
    inner_radius: float        # [m]
    outer_radius: float        # [m]
    width: float               # [m]
    node_count: int            # sensors to throw on this corona
    cluster_count: int         # angular sectors each forming one cluster
    member_tx_distance: float  # configured member uplink distance [m]
    head_tx_distance: float    # configured head uplink distance [m]
    initial_energy: float      # battery assembled per node [J]
    head_fraction: float       # design share of heads (continuous)


@dataclass(frozen=True)
class DeploymentPlan:
    """Integerized deployment artifact for one solved layout."""

    spec: NetworkSpec
    cost: CostParams
    variant: Variant
    provisions: tuple[CoronaProvision, ...]
    total_cost: float   # recomputed from the integer provisions [currency]
    cpua_value: float   # of the originating solution [currency/m^2]
    schema_version: int = SCHEMA_VERSION

    @property
    def k(self) -> int:
        return len(self.provisions)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(p.width for p in self.provisions)


def build_plan(spec: NetworkSpec, cost: CostParams, solution: Solution) -> DeploymentPlan:
    """Integerize a solution into a deployment plan.

    Node counts round half-up; cluster counts take the ceiling of the covering
    bound (the bound is a minimum, so rounding down would break coverage).
    """
    if not solution.converged:
        raise ValueError("refusing to provision from a non-converged solution")
    layout = solution.layout
    rates = model.corona_rates(spec, layout, solution.variant)
    provisions = []
    for rt in rates:
        nodes = int(math.floor(rt.node_count + 0.5))
        clusters = int(math.ceil(rt.head_count - 1e-9))
        if nodes < clusters:
            raise InfeasibleProvision(
                f"corona {rt.index}: {nodes} nodes cannot form {clusters} clusters"
            )
        if not rt.provisioned_energy > 0:
            raise InfeasibleProvision(
                f"corona {rt.index}: zero provisioned energy (no load, no management drain)"
            )
        j = rt.index - 1
        provisions.append(CoronaProvision(
            index=rt.index,
            inner_radius=layout.radii[j - 1] if j > 0 else 0.0,
            outer_radius=layout.radii[j],
            width=layout.widths[j],
            node_count=nodes,
            cluster_count=clusters,
            member_tx_distance=layout.widths[j],
            head_tx_distance=rt.head_tx_distance,
            initial_energy=rt.provisioned_energy,
            head_fraction=rt.head_fraction,
        ))
    total = cost.sink_cost + sum(
        p.node_count * (cost.hw_cost + cost.energy_cost * p.initial_energy)
        for p in provisions
    )
    return DeploymentPlan(
        spec=spec,
        cost=cost,
        variant=solution.variant,
        provisions=tuple(provisions),
        total_cost=total,
        cpua_value=solution.cpua_value,
    )


# ---------------------------------------------------------------------------
# serialization

_SPEC_KEYS = (
    ("radius_m", "radius"),
    ("density_per_m2", "density"),
    ("data_rate_bits_per_min", "data_rate"),
    ("compression_factor", "compression"),
    ("lifetime_min", "lifetime"),
    ("mgmt_energy_J_per_min", "mgmt_energy"),
    ("tx_min_m", "tx_min"),
    ("tx_max_m", "tx_max"),
    ("gen_energy_J_per_bit", "gen_energy"),
    ("elec_energy_J_per_bit", "elec_energy"),
    ("amp_energy_J_per_bit_m2", "amp_energy"),
    ("agg_energy_J_per_bit", "agg_energy"),
)

_COST_KEYS = (
    ("hw_cost_per_sensor", "hw_cost"),
    ("energy_cost_per_J", "energy_cost"),
    ("sink_cost", "sink_cost"),
)

_PROVISION_KEYS = (
    ("index", "index"),
    ("inner_radius_m", "inner_radius"),
    ("outer_radius_m", "outer_radius"),
    ("width_m", "width"),
    ("node_count", "node_count"),
    ("cluster_count", "cluster_count"),
    ("member_tx_distance_m", "member_tx_distance"),
    ("head_tx_distance_m", "head_tx_distance"),
    ("initial_energy_J", "initial_energy"),
    ("head_fraction", "head_fraction"),
)

_INT_FIELDS = {"index", "node_count", "cluster_count"}


def plan_to_dict(plan: DeploymentPlan) -> dict:
    """Plan as a JSON-ready dict with the documented key order."""
    return {
        "schema_version": plan.schema_version,
        "variant": plan.variant.value,
        "network": {key: getattr(plan.spec, attr) for key, attr in _SPEC_KEYS},
        "cost": {key: getattr(plan.cost, attr) for key, attr in _COST_KEYS},
        "coronas": [
            {key: getattr(p, attr) for key, attr in _PROVISION_KEYS}
            for p in plan.provisions
        ],
        "total_cost": plan.total_cost,
        "cpua": plan.cpua_value,
    }


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ParseError(path, f"missing key '{key}'")
    return mapping[key]


def _number(mapping: dict, key: str, path: str) -> float:
    value = _require(mapping, key, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{path}.{key}", "expected a number")
    return float(value)


def _integer(mapping: dict, key: str, path: str) -> int:
    value = _require(mapping, key, path)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{path}.{key}", "expected an integer")
    return value


def _reject_unknown(mapping: dict, known: tuple[str, ...], path: str) -> None:
    extra = set(mapping) - set(known)
    if extra:
        raise ParseError(path, f"unknown key '{sorted(extra)[0]}'")


def plan_from_dict(data: dict) -> DeploymentPlan:
    """Parse and fully validate a plan dict; raises ParseError/SchemaMismatch."""
    if not isinstance(data, dict):
        raise ParseError("$", "expected an object")
    version = _require(data, "schema_version", "$")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    _reject_unknown(data, ("schema_version", "variant", "network", "cost", "coronas",
                           "total_cost", "cpua"), "$")
    raw_variant = _require(data, "variant", "$")
    try:
        variant = Variant(raw_variant)
    except ValueError:
        raise ParseError("$.variant", f"unknown variant {raw_variant!r}") from None

    network = _require(data, "network", "$")
    if not isinstance(network, dict):
        raise ParseError("$.network", "expected an object")
    _reject_unknown(network, tuple(k for k, _ in _SPEC_KEYS), "$.network")
    try:
        spec = NetworkSpec(**{attr: _number(network, key, "$.network")
                              for key, attr in _SPEC_KEYS})
    except ValueError as exc:
        raise ParseError("$.network", str(exc)) from None

    cost_data = _require(data, "cost", "$")
    if not isinstance(cost_data, dict):
        raise ParseError("$.cost", "expected an object")
    _reject_unknown(cost_data, tuple(k for k, _ in _COST_KEYS), "$.cost")
    try:
        cost = CostParams(**{attr: _number(cost_data, key, "$.cost")
                             for key, attr in _COST_KEYS})
    except ValueError as exc:
        raise ParseError("$.cost", str(exc)) from None

    coronas = _require(data, "coronas", "$")
    if not isinstance(coronas, list) or not coronas:
        raise ParseError("$.coronas", "expected a non-empty array")
    provisions = []
    prev_outer = 0.0
    for pos, entry in enumerate(coronas):
        path = f"$.coronas[{pos}]"
        if not isinstance(entry, dict):
            raise ParseError(path, "expected an object")
        _reject_unknown(entry, tuple(k for k, _ in _PROVISION_KEYS), path)
        fields = {}
        for key, attr in _PROVISION_KEYS:
            if attr in _INT_FIELDS:
                fields[attr] = _integer(entry, key, path)
            else:
                fields[attr] = _number(entry, key, path)
        p = CoronaProvision(**fields)
        if p.index != pos + 1:
            raise ParseError(f"{path}.index", f"expected {pos + 1}, got {p.index}")
        if abs(p.inner_radius - prev_outer) > _GEOM_ATOL:
            raise ParseError(f"{path}.inner_radius_m",
                             f"does not continue the previous corona ({prev_outer!r})")
        if abs(p.outer_radius - p.inner_radius - p.width) > _GEOM_ATOL:
            raise ParseError(f"{path}.width_m", "radii and width disagree")
        if p.width <= 0:
            raise ParseError(f"{path}.width_m", "must be > 0")
        if p.cluster_count < 1:
            raise ParseError(f"{path}.cluster_count", "must be >= 1")
        if p.node_count < p.cluster_count:
            raise ParseError(f"{path}.node_count", "fewer nodes than clusters")
        if not p.initial_energy > 0:
            raise ParseError(f"{path}.initial_energy_J", "must be > 0")
        prev_outer = p.outer_radius
        provisions.append(p)
    if abs(prev_outer - spec.radius) > _GEOM_ATOL:
        raise ParseError("$.coronas", "outermost radius does not reach the detection radius")

    return DeploymentPlan(
        spec=spec,
        cost=cost,
        variant=variant,
        provisions=tuple(provisions),
        total_cost=_number(data, "total_cost", "$"),
        cpua_value=_number(data, "cpua", "$"),
        schema_version=SCHEMA_VERSION,
    )


def roundtrip(plan: DeploymentPlan) -> DeploymentPlan:
    """Serialize then parse; the result must equal the input structurally."""
    return plan_from_dict(json.loads(json.dumps(plan_to_dict(plan))))


def save_plan(plan: DeploymentPlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan), indent=2) + "\n", encoding="utf-8")


def load_plan(path: str | Path) -> DeploymentPlan:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return plan_from_dict(data)


def layout_of(plan: DeploymentPlan) -> CoronaLayout:
    """The continuous layout a plan was built from."""
    return CoronaLayout(plan.widths)
