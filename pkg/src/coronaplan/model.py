"""Analytic per-corona energy and cost model for ring-clustered sensor networks.

The detection area is a disk split into concentric rings ("coronas") by the
ordered widths of a :class:`CoronaLayout`. Nodes in each corona form covering
clusters; cluster heads aggregate member data and forward everything inward
toward the sink at the center. All quantities here are continuous rates;
integerization of node and cluster counts happens in :mod:`coronaplan.plan`.

Units are SI throughout: meters, joules, and a time unit of one minute.
Corona 1 is the innermost ring; index arguments are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import LayoutError, ModelInfeasible

# relative tolerance between a layout's outer radius and the detection radius
RADIUS_RTOL = 1e-9
# absolute tolerance [m] for the nonincreasing-width requirement of IMPROVED
MONOTONE_ATOL = 1e-9


class Variant(Enum):
    """Rule for the distance a cluster head budgets for its uplink transmission."""

    BASELINE = "baseline"  # a head transmits over its own corona's width
    IMPROVED = "improved"  # a head bridges the next corona inward, so it budgets
    #                        that corona's width (corona 1 keeps its own width)


@dataclass(frozen=True)
class NetworkSpec:
    """Physical and traffic parameters of the network."""

    radius: float        # detection area radius [m]
    density: float       # node density [nodes/m^2]
    data_rate: float     # sensed data per node [bit/min]
    compression: float   # head aggregation ratio, in [0, 1]; 0 means nothing leaves a cluster
    lifetime: float      # design lifetime [min]
    mgmt_energy: float   # per-node cluster management drain [J/min]
    tx_min: float        # lower bound on node transmission distance [m]
    tx_max: float        # upper bound on node transmission distance [m]
    gen_energy: float    # cost of sensing one bit [J/bit]
    elec_energy: float   # radio electronics cost per bit, tx or rx [J/bit]
    amp_energy: float    # transmit amplifier cost [J/bit/m^2]
    agg_energy: float    # aggregation cost per bit at a head [J/bit]

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if not self.density > 0:
            raise ValueError("density must be > 0")
        if not self.data_rate > 0:
            raise ValueError("data_rate must be > 0")
        if not 0 <= self.compression <= 1:
            raise ValueError("compression must be in [0, 1]")
        if not self.lifetime > 0:
            raise ValueError("lifetime must be > 0")
        if not 0 < self.tx_min <= self.tx_max:
            raise ValueError("transmission bounds must satisfy 0 < tx_min <= tx_max")
        for name in ("mgmt_energy", "gen_energy", "elec_energy", "amp_energy", "agg_energy"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def area(self) -> float:
        """Detected area [m^2]."""
        return math.pi * self.radius ** 2


@dataclass(frozen=True)
class CostParams:
    """Monetary parameters of the cost model (one sensor costs hw_cost + energy_cost * battery)."""

    hw_cost: float      # hardware cost per sensor [currency]
    energy_cost: float  # cost per joule of provisioned battery [currency/J]
    sink_cost: float    # fixed cost of the externally powered sink [currency]

    def __post_init__(self):
        for name in ("hw_cost", "energy_cost", "sink_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class CoronaLayout:
    """Ordered corona widths, innermost first; radii are the cumulative sums."""

    widths: tuple[float, ...]
    radii: tuple[float, ...] = field(init=False, compare=False)

    def __post_init__(self):
        widths = tuple(float(w) for w in self.widths)
        if len(widths) < 1:
            raise LayoutError("a layout needs at least one corona")
        if any(not math.isfinite(w) or w <= 0 for w in widths):
            raise LayoutError("every corona width must be finite and > 0")
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "radii", tuple(np.cumsum(widths).tolist()))

    @property
    def k(self) -> int:
        return len(self.widths)

    @property
    def outer_radius(self) -> float:
        return self.radii[-1]


@dataclass(frozen=True)
class CoronaRates:
    """All analytic per-corona quantities for one corona under one variant."""

    index: int                # 1-based corona index
    node_count: float         # continuous population
    head_fraction: float      # share of nodes acting as heads, in (0, 1]
    head_count: float         # continuous covering cluster count 2*pi*r/c
    head_tx_distance: float   # distance a head budgets for its uplink [m]
    ch_rate: float            # per-head energy rate [J/min]
    member_rate: float        # per-member energy rate [J/min]
    intra_rate: float         # corona total, in-cluster traffic [J/min]
    inter_rate: float         # corona total, relay traffic through it [J/min]
    total_rate: float         # intra + inter [J/min]
    avg_rate: float           # total per node [J/min]
    provisioned_energy: float # battery sized for the design lifetime [J]


class RateArrays(NamedTuple):
    """Vectorized rate table over the trailing (corona) axis."""

    node_count: np.ndarray
    head_fraction: np.ndarray
    head_count: np.ndarray
    head_distance: np.ndarray
    ch_rate: np.ndarray
    member_rate: np.ndarray
    intra_rate: np.ndarray
    inter_rate: np.ndarray


def head_distances(widths: np.ndarray, variant: Variant) -> np.ndarray:
    """Per-corona head transmission distances for a width array of shape (..., k)."""
    c = np.asarray(widths, dtype=float)
    if variant is Variant.BASELINE:
        return c.copy()
    d = np.empty_like(c)
    d[..., :1] = c[..., :1]
    d[..., 1:] = c[..., :-1]
    return d


def rate_arrays(spec: NetworkSpec, widths: np.ndarray, variant: Variant,
                check: bool = True, closed_outer: bool = True) -> RateArrays:
    """Compute every per-corona rate for width vectors of shape (..., k).

    With ``check`` the covering feasibility (head fraction <= 1) is enforced and
    violations raise :class:`ModelInfeasible`; without it callers must inspect
    ``head_fraction`` themselves (used for bulk grid screening).

    ``closed_outer`` pins the outermost relay rate to exactly zero (nothing
    lies outside the last corona). The solver turns it off to keep the
    objective a smooth function of free widths; on feasible layouts the raw
    term vanishes anyway.
    """
    c = np.asarray(widths, dtype=float)
    r = np.cumsum(c, axis=-1)
    r_prev = r - c
    rho = spec.density
    n = rho * math.pi * (r * r - r_prev * r_prev)
    heads = 2.0 * math.pi * r / c
    p = 2.0 * r / (rho * c * c * (2.0 * r - c))
    if check and np.any(p > 1.0):
        flat = int(np.argmax(p > 1.0))
        i = flat % c.shape[-1] + 1
        raise ModelInfeasible(
            f"corona {i}: covering needs a head fraction of {np.ravel(p)[flat]:.4g} > 1; "
            "density is too low or the corona too thin for the cluster model"
        )
    d = head_distances(c, variant)
    l = spec.data_rate
    mix = spec.compression
    gen, elec, amp, agg = spec.gen_energy, spec.elec_energy, spec.amp_energy, spec.agg_energy

    # per head: generate, receive members' bits, aggregate the cluster's bits,
    # transmit the compressed aggregate over d
    ch = l * (gen + (1.0 / p - 1.0) * elec + agg / p + mix * (amp * d * d + elec) / p)
    # per member: generate and send one hop over the corona width
    member = l * (gen + amp * c * c + elec)
    # corona totals; intra is the head/member mix in closed form
    intra = n * l * (gen + (2.0 * (1.0 - p) + mix) * elec
                     + (1.0 - p) * amp * c * c + mix * amp * d * d + agg)
    inter = rho * math.pi * (spec.radius ** 2 - r * r) * mix * l * (2.0 * elec + amp * d * d)
    if closed_outer:
        inter[..., -1] = 0.0
    return RateArrays(n, p, heads, d, ch, member, intra, inter)


def _checked_widths(spec: NetworkSpec, layout: CoronaLayout,
                    variant: Variant | None = None) -> np.ndarray:
    """Validate a layout against the network parameters (and variant); return widths."""
    w = np.asarray(layout.widths, dtype=float)
    if abs(layout.outer_radius - spec.radius) > RADIUS_RTOL * spec.radius:
        raise LayoutError(
            f"layout outer radius {layout.outer_radius!r} does not match the "
            f"detection radius {spec.radius!r}"
        )
    if variant is Variant.IMPROVED and np.any(np.diff(w) > MONOTONE_ATOL):
        raise LayoutError("widths must be nonincreasing outward under the IMPROVED rule")
    return w


def _check_index(layout: CoronaLayout, i: int) -> int:
    if not 1 <= i <= layout.k:
        raise IndexError(f"corona index {i} out of range 1..{layout.k}")
    return i - 1


def node_count(spec: NetworkSpec, layout: CoronaLayout, i: int) -> float:
    """Continuous node population of corona i: density * pi * (r_i^2 - r_{i-1}^2)."""
    j = _check_index(layout, i)
    _checked_widths(spec, layout)
    r_out = layout.radii[j]
    r_in = layout.radii[j - 1] if j > 0 else 0.0
    return spec.density * math.pi * (r_out * r_out - r_in * r_in)


def head_fraction(spec: NetworkSpec, layout: CoronaLayout, i: int) -> float:
    """Share of corona-i nodes that must act as heads so clusters cover the ring."""
    j = _check_index(layout, i)
    w = _checked_widths(spec, layout)
    ra = rate_arrays(spec, w, Variant.BASELINE)
    return float(ra.head_fraction[j])


def head_tx_distance(layout: CoronaLayout, variant: Variant, i: int) -> float:
    """Distance a corona-i head budgets for its uplink under the given variant."""
    j = _check_index(layout, i)
    if variant is Variant.IMPROVED and np.any(np.diff(layout.widths) > MONOTONE_ATOL):
        raise LayoutError("widths must be nonincreasing outward under the IMPROVED rule")
    return float(head_distances(np.asarray(layout.widths), variant)[j])


def ch_energy_rate(spec: NetworkSpec, layout: CoronaLayout, variant: Variant, i: int) -> float:
    """Energy rate of one cluster head in corona i [J/min]."""
    j = _check_index(layout, i)
    w = _checked_widths(spec, layout, variant)
    return float(rate_arrays(spec, w, variant).ch_rate[j])


def member_energy_rate(spec: NetworkSpec, layout: CoronaLayout, i: int) -> float:
    """Energy rate of one non-head sensor in corona i [J/min]."""
    j = _check_index(layout, i)
    _checked_widths(spec, layout)
    c = layout.widths[j]
    return spec.data_rate * (spec.gen_energy + spec.amp_energy * c * c + spec.elec_energy)


def intra_energy_rate(spec: NetworkSpec, layout: CoronaLayout, variant: Variant, i: int) -> float:
    """In-cluster energy rate of all corona-i nodes [J/min]."""
    j = _check_index(layout, i)
    w = _checked_widths(spec, layout, variant)
    return float(rate_arrays(spec, w, variant).intra_rate[j])


def inter_energy_rate(spec: NetworkSpec, layout: CoronaLayout, variant: Variant, i: int) -> float:
    """Relay energy rate of corona-i heads for traffic from farther out [J/min]."""
    j = _check_index(layout, i)
    w = _checked_widths(spec, layout, variant)
    return float(rate_arrays(spec, w, variant).inter_rate[j])


def corona_energy_rate(spec: NetworkSpec, layout: CoronaLayout, variant: Variant,
                       i: int) -> CoronaRates:
    """Full rate record for corona i, including lifetime provisioning."""
    j = _check_index(layout, i)
    w = _checked_widths(spec, layout, variant)
    ra = rate_arrays(spec, w, variant)
    return _rates_at(spec, layout, ra, j)


def corona_rates(spec: NetworkSpec, layout: CoronaLayout,
                 variant: Variant) -> tuple[CoronaRates, ...]:
    """Rate records for every corona of the layout."""
    w = _checked_widths(spec, layout, variant)
    ra = rate_arrays(spec, w, variant)
    return tuple(_rates_at(spec, layout, ra, j) for j in range(layout.k))


def _rates_at(spec: NetworkSpec, layout: CoronaLayout, ra: RateArrays, j: int) -> CoronaRates:
    total = float(ra.intra_rate[j] + ra.inter_rate[j])
    avg = total / float(ra.node_count[j])
    return CoronaRates(
        index=j + 1,
        node_count=float(ra.node_count[j]),
        head_fraction=float(ra.head_fraction[j]),
        head_count=float(ra.head_count[j]),
        head_tx_distance=float(ra.head_distance[j]),
        ch_rate=float(ra.ch_rate[j]),
        member_rate=float(ra.member_rate[j]),
        intra_rate=float(ra.intra_rate[j]),
        inter_rate=float(ra.inter_rate[j]),
        total_rate=total,
        avg_rate=avg,
        provisioned_energy=(avg + spec.mgmt_energy) * spec.lifetime,
    )


def total_energy_rate(spec: NetworkSpec, layout: CoronaLayout, variant: Variant) -> float:
    """Network-wide energy rate, the optimization objective [J/min]."""
    w = _checked_widths(spec, layout, variant)
    ra = rate_arrays(spec, w, variant)
    return float(np.sum(ra.intra_rate + ra.inter_rate))


def total_cost(spec: NetworkSpec, cost: CostParams, layout: CoronaLayout,
               variant: Variant) -> float:
    """Total network cost: hardware for all sensors, provisioned energy, sink."""
    w = _checked_widths(spec, layout, variant)
    ra = rate_arrays(spec, w, variant)
    avg = (ra.intra_rate + ra.inter_rate) / ra.node_count
    provisioned = (avg + spec.mgmt_energy) * spec.lifetime
    hardware = cost.hw_cost * spec.density * spec.area
    return hardware + cost.energy_cost * float(np.sum(ra.node_count * provisioned)) + cost.sink_cost


def cpua(spec: NetworkSpec, cost: CostParams, layout: CoronaLayout, variant: Variant) -> float:
    """Cost per unit detected area [currency/m^2].

    Expanded form: hardware density + management provisioning + data-energy
    provisioning + sink share. Identical to total_cost / area.
    """
    area = spec.area
    return (cost.hw_cost * spec.density
            + cost.energy_cost * spec.density * spec.mgmt_energy * spec.lifetime
            + spec.lifetime * cost.energy_cost * total_energy_rate(spec, layout, variant) / area
            + cost.sink_cost / area)
