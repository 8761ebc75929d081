"""Corona-width optimization: per-count solves, the count sweep, and oracles.

The objective is the network-wide energy rate (minimizing it is equivalent to
minimizing cost per unit area once the fixed terms are added back). For a
given corona count k the feasible set is the slab
``{tx_min <= c_i <= tx_max, sum c_i = radius}``, intersected with the
nonincreasing-width cone for the IMPROVED variant. The local solver is a
multi-start projected gradient descent with Barzilai-Borwein steps; the
exhaustive :func:`grid_oracle` exists to validate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import model
from .errors import GridTooLarge, Infeasible, ModelInfeasible
from .model import CoronaLayout, CostParams, NetworkSpec, Variant

# slack for the "does any width vector sum to the radius" feasibility checks [m]
FEAS_ATOL = 1e-9
# a width within this distance of a transmission bound counts as on the bound [m]
BOUND_ATOL = 1e-9

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the local descent; defaults converge well for desk-scale specs."""

    restarts: int = 8
    max_iterations: int = 500
    width_tolerance: float = 1e-6       # stop when the projected step moves less [m]
    objective_tolerance: float = 1e-14  # or when an accepted step improves less [J/min]
    seed: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not (self.width_tolerance > 0 and self.objective_tolerance > 0):
            raise ValueError("tolerances must be > 0")


@dataclass(frozen=True)
class Solution:
    """One solved corona count: the widths and their objective values."""

    k: int
    layout: CoronaLayout
    total_energy: float   # [J/min]
    cpua_value: float     # [currency/m^2]
    variant: Variant
    converged: bool
    evaluations: int


@dataclass(frozen=True)
class SweepResult:
    """Solutions for every feasible corona count; best by CPUA, ties to smaller k."""

    solutions: tuple[Solution, ...]
    best_index: int

    @property
    def best(self) -> Solution:
        return self.solutions[self.best_index]


class ObjectiveGradient(NamedTuple):
    """Energy-rate gradient with respect to every corona width."""

    values: np.ndarray   # d(total energy)/d(width_j) [J/min per m]
    at_boundary: bool    # some width sits on a transmission bound (KKT caveat)


def feasible_corona_counts(spec: NetworkSpec) -> range:
    """Inclusive range of corona counts admitted by the transmission bounds."""
    k_min = max(1, math.ceil(spec.radius / spec.tx_max - FEAS_ATOL))
    k_max = math.floor(spec.radius / spec.tx_min + FEAS_ATOL)
    if k_min > k_max:
        raise Infeasible(
            f"no corona count fits: ceil(R/tx_max)={k_min} exceeds floor(R/tx_min)={k_max}"
        )
    return range(k_min, k_max + 1)


def _objective(spec: NetworkSpec, widths: np.ndarray, variant: Variant) -> float:
    # smooth extension off the sum constraint, so finite differences of this
    # function match the analytic gradient componentwise
    ra = model.rate_arrays(spec, widths, variant, closed_outer=False)
    return float(np.sum(ra.intra_rate + ra.inter_rate))


def _gradient(spec: NetworkSpec, widths: np.ndarray, variant: Variant) -> np.ndarray:
    """Analytic gradient of the total energy rate with respect to the widths.

    Derived from the head-count form of the corona terms:
    f_i = rho*pi*(r_i^2-r_{i-1}^2)*l*(A + amp*c_i^2 + m*amp*d_i^2)
        - (2*pi*r_i/c_i)*l*(B + amp*c_i^2)
        + rho*pi*(R^2-r_i^2)*m*l*(B + amp*d_i^2)
    with A = gen + (2+m)*elec + agg and B = 2*elec; r depends on all widths
    up to i, d on the variant's distance rule.
    """
    c = np.asarray(widths, dtype=float)
    k = c.shape[0]
    r = np.cumsum(c)
    r_prev = r - c
    d = model.head_distances(c, variant)
    rho, l = spec.density, spec.data_rate
    mix = spec.compression
    amp = spec.amp_energy
    A = spec.gen_energy + (2.0 + mix) * spec.elec_energy + spec.agg_energy
    B = 2.0 * spec.elec_energy
    t_pop = A + amp * c * c + mix * amp * d * d
    df_dr = (rho * math.pi * 2.0 * r * l * t_pop
             - (2.0 * math.pi / c) * l * (B + amp * c * c)
             - rho * math.pi * 2.0 * r * mix * l * (B + amp * d * d))
    df_dr_prev = -rho * math.pi * 2.0 * r_prev * l * t_pop
    df_dc = (rho * math.pi * (r * r - r_prev * r_prev) * l * 2.0 * amp * c
             + (2.0 * math.pi * r / (c * c)) * l * (B + amp * c * c)
             - (2.0 * math.pi * r / c) * l * 2.0 * amp * c)
    df_dd = (rho * math.pi * (r * r - r_prev * r_prev) * l * mix * amp * 2.0 * d
             + rho * math.pi * (spec.radius ** 2 - r * r) * mix * l * amp * 2.0 * d)
    # r_i enters every width up to i; r_{i-1} every width up to i-1
    rev_r = np.cumsum(df_dr[::-1])[::-1]
    rev_rp = np.concatenate([np.cumsum(df_dr_prev[::-1])[::-1][1:], [0.0]])
    g = rev_r + rev_rp + df_dc
    if variant is Variant.BASELINE:
        g += df_dd
    else:
        g[0] += df_dd[0]
        g[:-1] += df_dd[1:]
    return g


def objective_gradient(spec: NetworkSpec, layout: CoronaLayout,
                       variant: Variant) -> ObjectiveGradient:
    """Gradient of the total energy rate at a layout, with a bound-contact flag."""
    w = model._checked_widths(spec, layout, variant)
    on_bound = bool(np.any(w - spec.tx_min <= BOUND_ATOL) or np.any(spec.tx_max - w <= BOUND_ATOL))
    return ObjectiveGradient(_gradient(spec, w, variant), on_bound)


# ---------------------------------------------------------------------------
# projections onto the feasible set


def _project_sum_box(y: np.ndarray, lo: float, hi: float, total: float) -> np.ndarray:
    """Euclidean projection onto {lo <= x <= hi, sum x = total}.

    The projection is clip(y - tau) for the shift tau that lands the sum on the
    target. The clipped sum is piecewise linear and nonincreasing in tau with
    breakpoints at y_i - hi and y_i - lo, so the crossing segment can be solved
    exactly.
    """
    pts = np.sort(np.concatenate([y - hi, y - lo]))
    sums = np.clip(y[None, :] - pts[:, None], lo, hi).sum(axis=1)
    idx = int(np.searchsorted(-sums, -total))
    if idx == 0:
        tau = pts[0]
    elif idx == len(pts):
        tau = pts[-1]
    else:
        left, right = pts[idx - 1], pts[idx]
        s_left, s_right = sums[idx - 1], sums[idx]
        if s_left == s_right:
            tau = left
        else:
            tau = left + (total - s_left) * (right - left) / (s_right - s_left)
    return np.clip(y - tau, lo, hi)


def _isotonic_nonincreasing(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto nonincreasing sequences (pool adjacent violators)."""
    vals: list[float] = []
    sizes: list[int] = []
    for v in y:
        vals.append(float(v))
        sizes.append(1)
        while len(vals) > 1 and vals[-2] < vals[-1]:
            merged = (vals[-1] * sizes[-1] + vals[-2] * sizes[-2]) / (sizes[-1] + sizes[-2])
            sizes[-2] += sizes[-1]
            vals[-2] = merged
            del vals[-1], sizes[-1]
    return np.repeat(vals, sizes)


def _project(y: np.ndarray, lo: float, hi: float, total: float, monotone: bool) -> np.ndarray:
    """Projection onto the width slab, Dykstra-combined with the monotone cone."""
    if not monotone:
        return _project_sum_box(y, lo, hi, total)
    x = np.asarray(y, dtype=float)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(600):
        u = _project_sum_box(x + p, lo, hi, total)
        p = x + p - u
        v = _isotonic_nonincreasing(u + q)
        q = u + q - v
        if float(np.max(np.abs(v - x))) < 1e-14:
            return v
        x = v
    return x


def _polish(w: np.ndarray, lo: float, hi: float, total: float, monotone: bool) -> np.ndarray:
    """Snap a near-feasible point exactly onto the box (and cone), fix the sum."""
    w = np.clip(w, lo, hi)
    if monotone:
        w = np.minimum.accumulate(w)
        w = np.clip(w, lo, hi)
    resid = total - float(w.sum())
    if resid != 0.0:
        margins = np.minimum(hi - w, w - lo)
        j = int(np.argmax(margins))
        trial = w[j] + resid
        ok = lo <= trial <= hi
        if ok and monotone:
            ok = (j == 0 or trial <= w[j - 1]) and (j == len(w) - 1 or w[j + 1] <= trial)
        if ok:
            w = w.copy()
            w[j] = trial
    return w


def _start_points(k: int, lo: float, hi: float, total: float,
                  restarts: int, seed: int) -> list[np.ndarray]:
    """Deterministic start set: the equal split plus a seeded Kronecker lattice."""
    points = [np.full(k, total / k)]
    alphas = np.sqrt(np.asarray(_PRIMES[:k], dtype=float)) % 1.0
    phase = (seed * alphas + 0.5) % 1.0
    for s in range(1, restarts):
        u = (phase + s * alphas) % 1.0
        points.append(lo + u * (hi - lo))
    return points


def _descend(spec: NetworkSpec, variant: Variant, x0: np.ndarray, lo: float, hi: float,
             total: float, monotone: bool, cfg: SolverConfig):
    """One projected-gradient descent; returns (x, f, evaluations, converged)."""
    evals = 0

    def f(w: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        try:
            return _objective(spec, w, variant)
        except ModelInfeasible:
            return math.inf

    x = _project(np.asarray(x0, dtype=float), lo, hi, total, monotone)
    fx = f(x)
    if not math.isfinite(fx):
        return x, fx, evals, False
    x_prev: np.ndarray | None = None
    g_prev: np.ndarray | None = None
    step = 1.0
    converged = False
    for _ in range(cfg.max_iterations):
        g = _gradient(spec, x, variant)
        if x_prev is not None and g_prev is not None:
            dx = x - x_prev
            dg = g - g_prev
            curv = float(dx @ dg)
            step = float(dx @ dx) / curv if curv > 1e-30 else 1.0
            step = min(max(step, 1e-8), 1e12)
        t = step
        accepted = False
        y = x
        fy = fx
        for _ in range(60):
            y = _project(x - t * g, lo, hi, total, monotone)
            fy = f(y)
            gap = float(g @ (x - y))
            if fy <= fx - 1e-4 * gap and gap > 0.0:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = True  # no descent along the projection arc: stationary
            break
        move = float(np.max(np.abs(y - x)))
        drop = fx - fy
        x_prev, g_prev = x, g
        x, fx = y, fy
        if move < cfg.width_tolerance or drop < cfg.objective_tolerance:
            converged = True
            break
    return x, fx, evals, converged


def _check_k_feasible(spec: NetworkSpec, k: int) -> None:
    if k < 1:
        raise Infeasible(f"corona count must be >= 1, got {k}")
    if k * spec.tx_min > spec.radius + FEAS_ATOL or k * spec.tx_max < spec.radius - FEAS_ATOL:
        raise Infeasible(
            f"k={k}: no width vector in [{spec.tx_min}, {spec.tx_max}] sums to {spec.radius}"
        )


def _finish(spec: NetworkSpec, cost: CostParams, k: int, variant: Variant,
            widths: np.ndarray, converged: bool, evaluations: int) -> Solution:
    layout = CoronaLayout(tuple(widths.tolist()))
    return Solution(
        k=k,
        layout=layout,
        total_energy=model.total_energy_rate(spec, layout, variant),
        cpua_value=model.cpua(spec, cost, layout, variant),
        variant=variant,
        converged=converged,
        evaluations=evaluations,
    )


def optimize_widths(spec: NetworkSpec, cost: CostParams, k: int, variant: Variant,
                    cfg: SolverConfig | None = None) -> Solution:
    """Locally minimize the energy rate over corona widths for a fixed count k."""
    cfg = cfg or SolverConfig()
    _check_k_feasible(spec, k)
    lo, hi, total = spec.tx_min, spec.tx_max, spec.radius
    monotone = variant is Variant.IMPROVED
    # a pinched slab leaves exactly one width vector; return it without search
    if k == 1 or abs(k * lo - total) <= FEAS_ATOL or abs(k * hi - total) <= FEAS_ATOL:
        return _finish(spec, cost, k, variant, np.full(k, total / k), True, 1)
    best_x: np.ndarray | None = None
    best_f = math.inf
    best_conv = False
    evaluations = 0
    for x0 in _start_points(k, lo, hi, total, cfg.restarts, cfg.seed):
        x, fx, evals, conv = _descend(spec, variant, x0, lo, hi, total, monotone, cfg)
        evaluations += evals
        if fx < best_f:
            best_x, best_f, best_conv = x, fx, conv
    if best_x is None or not math.isfinite(best_f):
        raise ModelInfeasible("every start point was infeasible under the cluster model")
    polished = _polish(best_x, lo, hi, total, monotone)
    return _finish(spec, cost, k, variant, polished, best_conv, evaluations + 1)


def sweep(spec: NetworkSpec, cost: CostParams, variant: Variant,
          cfg: SolverConfig | None = None) -> SweepResult:
    """Solve every feasible corona count and pick the lowest CPUA (smaller k wins ties)."""
    solutions = tuple(
        optimize_widths(spec, cost, k, variant, cfg) for k in feasible_corona_counts(spec)
    )
    best = 0
    for idx, sol in enumerate(solutions):
        if sol.cpua_value < solutions[best].cpua_value:
            best = idx
    return SweepResult(solutions, best)


def grid_oracle(spec: NetworkSpec, cost: CostParams, k: int, variant: Variant,
                step: float, max_evaluations: int = 2_000_000) -> Solution:
    """Exhaustive grid minimum over widths; brute-force reference for the solver.

    The first k-1 widths range over {tx_min, tx_min+step, ...}; the last is
    whatever the radius leaves, kept when it lands inside the bounds. The
    returned minimum is within one grid cell of the true optimum for this
    smooth objective.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    _check_k_feasible(spec, k)
    lo, hi, total = spec.tx_min, spec.tx_max, spec.radius
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    candidates = lo + step * np.arange(n)
    candidates = candidates[candidates <= hi + 1e-12]
    if k == 1:
        widths = np.array([total])
        return _finish(spec, cost, k, variant, widths, True, 1)
    n_points = len(candidates) ** (k - 1)
    if n_points > max_evaluations:
        raise GridTooLarge(
            f"k={k} with step {step} needs {n_points} grid evaluations "
            f"(budget {max_evaluations})"
        )
    mesh = np.meshgrid(*([candidates] * (k - 1)), indexing="ij")
    free = np.stack([m.ravel() for m in mesh], axis=1)
    last = total - free.sum(axis=1)
    grid = np.concatenate([free, last[:, None]], axis=1)
    feasible = (last >= lo - FEAS_ATOL) & (last <= hi + FEAS_ATOL)
    if variant is Variant.IMPROVED:
        feasible &= np.all(np.diff(grid, axis=1) <= 1e-12, axis=1)
    if not np.any(feasible):
        raise Infeasible(f"k={k}: no feasible point on the width grid")
    grid = grid[feasible]
    best_val = math.inf
    best_row: np.ndarray | None = None
    for start in range(0, grid.shape[0], 100_000):
        chunk = grid[start:start + 100_000]
        ra = model.rate_arrays(spec, chunk, variant, check=False, closed_outer=False)
        energy = np.sum(ra.intra_rate + ra.inter_rate, axis=1)
        energy[np.any(ra.head_fraction > 1.0, axis=1)] = math.inf
        j = int(np.argmin(energy))
        if energy[j] < best_val:
            best_val = float(energy[j])
            best_row = chunk[j]
    if best_row is None or not math.isfinite(best_val):
        raise ModelInfeasible("every grid point is infeasible under the cluster model")
    widths = _polish(best_row, lo, hi, total, variant is Variant.IMPROVED)
    return _finish(spec, cost, k, variant, widths, True, int(grid.shape[0]))


def sample_feasible_widths(spec: NetworkSpec, k: int, variant: Variant,
                           rng: np.random.Generator, interior: float = 0.0) -> np.ndarray:
    """Random feasible width vector; ``interior`` in [0, 1) blends toward the equal split."""
    _check_k_feasible(spec, k)
    lo, hi, total = spec.tx_min, spec.tx_max, spec.radius
    raw = rng.uniform(lo, hi, k)
    w = _project(raw, lo, hi, total, variant is Variant.IMPROVED)
    w = _polish(w, lo, hi, total, variant is Variant.IMPROVED)
    if interior > 0.0:
        w = (1.0 - interior) * w + interior * np.full(k, total / k)
    return w
