import pytest

import coronaplan as cp

# Golden targets for the bundled parameter set. CPUA values must land inside
# [target - 3e-3, target + 1e-3]; widths within 2.0 m elementwise.
BASELINE_CPUA = {
    3: 0.6833738, 4: 0.657183, 5: 0.6480672, 6: 0.6448367,
    7: 0.6467813, 8: 0.6532441, 9: 0.6635786, 10: 0.6771291,
}
IMPROVED_CPUA = {
    3: 0.6872822, 4: 0.6607977, 5: 0.6512453, 6: 0.6477956,
    7: 0.6493199, 8: 0.6551868, 9: 0.6645543, 10: 0.6771290,
}
BASELINE_K6_WIDTHS = (58.5, 42.3, 33.9, 25.3, 20.0, 20.0)
IMPROVED_K6_WIDTHS = (49.8, 45.7, 36.8, 27.7, 20.0, 20.0)
CPUA_BAND_BELOW = 3e-3
CPUA_BAND_ABOVE = 1e-3
WIDTH_TOL = 2.0


def in_band(value: float, target: float) -> bool:
    return target - CPUA_BAND_BELOW <= value <= target + CPUA_BAND_ABOVE


@pytest.fixture(scope="session")
def default_spec():
    # SI form of the bundled default config
    return cp.NetworkSpec(
        radius=200.0, density=0.0318, data_rate=256.0, compression=0.1,
        lifetime=1e5, mgmt_energy=100e-9, tx_min=20.0, tx_max=80.0,
        gen_energy=50e-9, elec_energy=50e-9, amp_energy=10e-12, agg_energy=5e-9,
    )


@pytest.fixture(scope="session")
def default_cost():
    return cp.CostParams(hw_cost=10.0, energy_cost=2.0, sink_cost=200.0)


@pytest.fixture(scope="session")
def solver_cfg():
    return cp.SolverConfig()


@pytest.fixture(scope="session")
def toy_spec(default_spec):
    # small disk with a pinched width range: exactly one feasible count (k=2)
    return cp.NetworkSpec(
        radius=50.0, density=default_spec.density, data_rate=default_spec.data_rate,
        compression=default_spec.compression, lifetime=default_spec.lifetime,
        mgmt_energy=default_spec.mgmt_energy, tx_min=20.0, tx_max=30.0,
        gen_energy=default_spec.gen_energy, elec_energy=default_spec.elec_energy,
        amp_energy=default_spec.amp_energy, agg_energy=default_spec.agg_energy,
    )


@pytest.fixture(scope="session")
def baseline_sweep(default_spec, default_cost, solver_cfg):
    return cp.sweep(default_spec, default_cost, cp.Variant.BASELINE, solver_cfg)


@pytest.fixture(scope="session")
def improved_sweep(default_spec, default_cost, solver_cfg):
    return cp.sweep(default_spec, default_cost, cp.Variant.IMPROVED, solver_cfg)


@pytest.fixture(scope="session")
def k6_solution(baseline_sweep):
    return baseline_sweep.best


@pytest.fixture(scope="session")
def k6_plan(default_spec, default_cost, k6_solution):
    return cp.build_plan(default_spec, default_cost, k6_solution)


@pytest.fixture(scope="session")
def k10_plan(default_spec, default_cost, solver_cfg):
    sol = cp.optimize_widths(default_spec, default_cost, 10, cp.Variant.BASELINE, solver_cfg)
    return cp.build_plan(default_spec, default_cost, sol)
