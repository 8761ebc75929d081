"""Round-based Monte-Carlo validation of the analytic model.

Nodes are thrown area-uniformly per corona, clusters are equal angular sectors,
heads rotate uniformly at random among alive sector members each round, and
data flows inward: members to their head, heads to the angularly nearest head
of the next corona in (corona 1 to the sink). One round is one time unit.

FixedPower charging uses the design distances (member: corona width, head: the
plan's head distance), which is what the analytic model assumes; Geometric
charging uses actual Euclidean distances and exists only for exploration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import model
from .plan import DeploymentPlan, layout_of
from .model import NetworkSpec


class DistanceMode(Enum):
    FIXED_POWER = "fixed"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class SimConfig:
    """Run length, seeding, and charging mode of one simulation."""

    rounds: int
    seed: int = 0
    lifetime_scale: float = 1.0       # shrinks batteries for desk-scale lifetime runs
    distance_mode: DistanceMode = DistanceMode.FIXED_POWER

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if not 0 < self.lifetime_scale <= 1:
            raise ValueError("lifetime_scale must be in (0, 1]")


@dataclass
class World:
    """Placed node population; parallel arrays, one entry per node.

    Nodes are stored corona-major in placement order. run() treats a World as
    read-only, so one placement can back many simulation runs.
    """

    corona: np.ndarray   # 0-based corona index per node
    radius: np.ndarray   # polar radius [m]
    angle: np.ndarray    # polar angle [rad), in [0, 2*pi)
    sector: np.ndarray   # angular sector id within the corona
    energy: np.ndarray   # unscaled provisioned battery [J]
    seed: int

    @property
    def node_count(self) -> int:
        return self.corona.shape[0]


@dataclass(frozen=True)
class SimulationReport:
    """Per-round, per-corona energy ledger plus lifetime statistics."""

    rounds: int
    seed: int
    lifetime_scale: float
    distance_mode: DistanceMode
    per_round_corona_energy: np.ndarray  # (rounds, k) J actually drawn
    relay_bits_in: np.ndarray            # (rounds, k) bits received from farther out
    alive_counts: np.ndarray             # (rounds, k) alive after the round
    initial_energy: np.ndarray           # per node, scaled battery [J]
    residual_energy: np.ndarray          # per node, after the run [J]
    node_corona: np.ndarray              # per node, 0-based corona index
    death_round: np.ndarray              # per node, 1-based round of death; 0 = survived
    first_death_round: int | None
    mean_lifetime: np.ndarray            # per corona, censored nodes count as `rounds`
    min_lifetime: np.ndarray             # per corona
    censored: np.ndarray                 # per corona, nodes alive at the end
    empty_sectors: int                   # sector-rounds with no alive member
    lost_relay_bits: float               # relay bits with no inner head to receive them


@dataclass(frozen=True)
class ModelComparison:
    """Mean simulated round energy per corona against the analytic rates."""

    per_corona_deviation: np.ndarray  # relative, signed
    worst_corona: int                 # 1-based
    max_abs_deviation: float
    bound: float
    passed: bool


def place_nodes(plan: DeploymentPlan, seed: int) -> World:
    """Throw each corona's nodes area-uniformly on its annulus.

    Radii come from the inverse CDF r = sqrt(r_in^2 + u*(r_out^2 - r_in^2));
    angles are uniform. Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    coronas, radii, angles, sectors, energies = [], [], [], [], []
    for j, prov in enumerate(plan.provisions):
        n = prov.node_count
        u = rng.random(n)
        r = np.sqrt(prov.inner_radius ** 2 + u * (prov.outer_radius ** 2 - prov.inner_radius ** 2))
        theta = rng.random(n) * (2.0 * math.pi)
        sector_width = 2.0 * math.pi / prov.cluster_count
        sec = np.minimum((theta / sector_width).astype(np.int64), prov.cluster_count - 1)
        coronas.append(np.full(n, j, dtype=np.int64))
        radii.append(r)
        angles.append(theta)
        sectors.append(sec)
        energies.append(np.full(n, prov.initial_energy))
    return World(
        corona=np.concatenate(coronas),
        radius=np.concatenate(radii),
        angle=np.concatenate(angles),
        sector=np.concatenate(sectors),
        energy=np.concatenate(energies),
        seed=seed,
    )


class _Groups:
    """Alive members of one corona grouped by sector (CSR-style)."""

    __slots__ = ("members", "starts", "counts")

    def __init__(self, members: np.ndarray, sectors: np.ndarray):
        if members.size == 0:
            self.members = members
            self.starts = np.empty(0, dtype=np.int64)
            self.counts = np.empty(0, dtype=np.int64)
            return
        order = np.argsort(sectors, kind="stable")
        self.members = members[order]
        sorted_sectors = sectors[order]
        boundaries = np.flatnonzero(np.diff(sorted_sectors)) + 1
        self.starts = np.concatenate([[0], boundaries])
        ends = np.concatenate([boundaries, [len(members)]])
        self.counts = ends - self.starts


def _nearest_by_angle(targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Index into ``targets`` of the circularly nearest angle for each source."""
    order = np.argsort(targets, kind="stable")
    sorted_t = targets[order]
    pos = np.searchsorted(sorted_t, sources)
    right = pos % len(sorted_t)
    left = (pos - 1) % len(sorted_t)

    def circ(a, b):
        diff = np.abs(a - b)
        return np.minimum(diff, 2.0 * math.pi - diff)

    pick = np.where(circ(sorted_t[left], sources) <= circ(sorted_t[right], sources), left, right)
    return order[pick]


def _polar_dist2(r1, a1, r2, a2):
    return r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * np.cos(a1 - a2)


def run(world: World, plan: DeploymentPlan, cfg: SimConfig) -> SimulationReport:
    """Simulate ``cfg.rounds`` rounds of sensing, clustering, and relaying.

    Rounds are synchronous: charges are computed from the alive set at the
    start of the round, and a node that cannot fully pay its charge dies at
    that round and pays nothing (partial rounds are not credited).
    """
    spec = plan.spec
    k = plan.k
    n = world.node_count
    fixed = cfg.distance_mode is DistanceMode.FIXED_POWER
    rng = np.random.default_rng(cfg.seed)

    residual = world.energy * cfg.lifetime_scale
    initial = residual.copy()
    alive = np.ones(n, dtype=bool)
    death_round = np.zeros(n, dtype=np.int64)

    ledger = np.zeros((cfg.rounds, k))
    relay_ledger = np.zeros((cfg.rounds, k))
    alive_counts = np.zeros((cfg.rounds, k), dtype=np.int64)

    l = spec.data_rate
    mix = spec.compression
    gen, elec, amp, agg = spec.gen_energy, spec.elec_energy, spec.amp_energy, spec.agg_energy
    base_charge = gen * l + spec.mgmt_energy
    member_tx_fixed = [l * (elec + amp * p.width ** 2) for p in plan.provisions]
    head_dist_fixed = [p.head_tx_distance for p in plan.provisions]
    corona_ids = [np.flatnonzero(world.corona == j) for j in range(k)]

    groups: list[_Groups | None] = [None] * k
    dirty = [True] * k
    empty_sectors = 0
    lost_bits = 0.0

    for rnd in range(1, cfg.rounds + 1):
        if not alive.any():
            break
        # refresh sector membership where deaths happened, then elect heads
        heads: list[np.ndarray] = []
        counts: list[np.ndarray] = []
        for j in range(k):
            if dirty[j]:
                ids = corona_ids[j][alive[corona_ids[j]]]
                groups[j] = _Groups(ids, world.sector[ids])
                dirty[j] = False
            g = groups[j]
            live_sectors = g.counts.size
            empty_sectors += plan.provisions[j].cluster_count - live_sectors
            if live_sectors == 0:
                heads.append(np.empty(0, dtype=np.int64))
                counts.append(np.empty(0, dtype=np.int64))
                continue
            u = rng.random(live_sectors)
            pick = g.starts + np.minimum((u * g.counts).astype(np.int64), g.counts - 1)
            heads.append(g.members[pick])
            counts.append(g.counts)

        charge = np.zeros(n)
        for j in range(k):
            g = groups[j]
            ids = g.members
            if ids.size == 0:
                continue
            if fixed:
                charge[ids] = base_charge + member_tx_fixed[j]
                head_member_tx = member_tx_fixed[j]
            else:
                head_of = np.repeat(np.arange(heads[j].size), counts[j])
                hid = heads[j][head_of]
                d2 = _polar_dist2(world.radius[ids], world.angle[ids],
                                  world.radius[hid], world.angle[hid])
                charge[ids] = base_charge + l * (elec + amp * d2)
                head_member_tx = charge[heads[j]] - base_charge
            # heads do not uplink as members; they receive, aggregate, and forward
            h = heads[j]
            cnt = counts[j]
            charge[h] -= head_member_tx
            charge[h] += elec * l * (cnt - 1) + agg * l * cnt

        # relay pass, outermost corona inward
        out_bits = [mix * l * counts[j].astype(float) for j in range(k)]
        relay_in = [np.zeros(heads[j].size) for j in range(k)]
        for j in range(k - 1, -1, -1):
            h = heads[j]
            if h.size == 0:
                continue
            total_out = out_bits[j] + relay_in[j]
            if j == 0:
                d2 = (world.radius[h] ** 2 if not fixed
                      else np.full(h.size, head_dist_fixed[0] ** 2))
            else:
                inner = heads[j - 1]
                if inner.size == 0:
                    # heads still transmit; the bits have nowhere to land
                    lost_bits += float(total_out.sum())
                    d2 = np.full(h.size, head_dist_fixed[j] ** 2)
                else:
                    target = _nearest_by_angle(world.angle[inner], world.angle[h])
                    np.add.at(relay_in[j - 1], target, total_out)
                    if fixed:
                        d2 = np.full(h.size, head_dist_fixed[j] ** 2)
                    else:
                        tid = inner[target]
                        d2 = _polar_dist2(world.radius[h], world.angle[h],
                                          world.radius[tid], world.angle[tid])
            charge[h] += total_out * (elec + amp * d2) + elec * relay_in[j]

        # settle: who can pay, who dies; the dead draw nothing this round
        cannot = charge > residual
        dying = alive & cannot
        payers = alive & ~cannot
        residual[payers] -= charge[payers]
        paid = np.where(payers, charge, 0.0)
        ledger[rnd - 1] = np.bincount(world.corona, weights=paid, minlength=k)
        for j in range(k):
            relay_ledger[rnd - 1, j] = float(relay_in[j].sum())
        if dying.any():
            death_round[dying] = rnd
            alive[dying] = False
            for j in np.unique(world.corona[dying]):
                dirty[j] = True
        alive_counts[rnd - 1] = np.bincount(world.corona, weights=alive, minlength=k).astype(np.int64)

    lifetimes = np.where(death_round > 0, death_round, cfg.rounds)
    mean_life = np.zeros(k)
    min_life = np.zeros(k)
    censored = np.zeros(k, dtype=np.int64)
    for j in range(k):
        ids = corona_ids[j]
        mean_life[j] = float(lifetimes[ids].mean()) if ids.size else 0.0
        min_life[j] = float(lifetimes[ids].min()) if ids.size else 0.0
        censored[j] = int(np.count_nonzero(death_round[ids] == 0))
    deaths = death_round[death_round > 0]
    return SimulationReport(
        rounds=cfg.rounds,
        seed=cfg.seed,
        lifetime_scale=cfg.lifetime_scale,
        distance_mode=cfg.distance_mode,
        per_round_corona_energy=ledger,
        relay_bits_in=relay_ledger,
        alive_counts=alive_counts,
        initial_energy=initial,
        residual_energy=residual,
        node_corona=world.corona.copy(),
        death_round=death_round,
        first_death_round=int(deaths.min()) if deaths.size else None,
        mean_lifetime=mean_life,
        min_lifetime=min_life,
        censored=censored,
        empty_sectors=empty_sectors,
        lost_relay_bits=lost_bits,
    )


def compare_to_model(report: SimulationReport, spec: NetworkSpec,
                     plan: DeploymentPlan, bound: float = 0.03) -> ModelComparison:
    """Relative deviation of mean simulated round energy from the analytic rates.

    The reference per corona is the analytic total rate plus the management
    drain of its continuous population. Meaningful for FixedPower runs over a
    window without deaths; rounds after extinction would bias the mean.
    """
    if report.rounds < 1:
        raise ValueError("cannot compare a zero-round report")
    rates = model.corona_rates(spec, layout_of(plan), plan.variant)
    target = np.array([rt.total_rate + rt.node_count * spec.mgmt_energy for rt in rates])
    mean_energy = report.per_round_corona_energy.mean(axis=0)
    deviation = (mean_energy - target) / target
    worst = int(np.argmax(np.abs(deviation)))
    return ModelComparison(
        per_corona_deviation=deviation,
        worst_corona=worst + 1,
        max_abs_deviation=float(np.abs(deviation[worst])),
        bound=bound,
        passed=bool(np.all(np.abs(deviation) <= bound)),
    )


def write_trace(report: SimulationReport, path: str | Path) -> None:
    """CSV trace with one row per (round, corona): energy drawn and alive count."""
    k = report.per_round_corona_energy.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("round,corona,energy_J,alive_count\n")
        for r in range(report.rounds):
            for j in range(k):
                fh.write(f"{r + 1},{j + 1},{float(report.per_round_corona_energy[r, j])!r},"
                         f"{int(report.alive_counts[r, j])}\n")


def summary_dict(report: SimulationReport, comparison: ModelComparison | None = None) -> dict:
    """JSON-ready summary block of a run."""
    out = {
        "rounds": report.rounds,
        "seed": report.seed,
        "lifetime_scale": report.lifetime_scale,
        "distance_mode": report.distance_mode.value,
        "total_energy_J": float(report.per_round_corona_energy.sum()),
        "first_death_round": report.first_death_round,
        "mean_lifetime": [float(x) for x in report.mean_lifetime],
        "min_lifetime": [float(x) for x in report.min_lifetime],
        "censored": [int(x) for x in report.censored],
        "empty_sectors": report.empty_sectors,
        "lost_relay_bits": report.lost_relay_bits,
    }
    if comparison is not None:
        out["deviation_per_corona"] = [float(x) for x in comparison.per_corona_deviation]
        out["max_abs_deviation"] = comparison.max_abs_deviation
        out["deviation_bound"] = comparison.bound
        out["deviation_passed"] = comparison.passed
    return out


def write_summary(report: SimulationReport, path: str | Path,
                  comparison: ModelComparison | None = None) -> None:
    Path(path).write_text(json.dumps(summary_dict(report, comparison), indent=2) + "\n",
                          encoding="utf-8")
