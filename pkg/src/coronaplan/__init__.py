"""Planning toolkit for corona-structured wireless sensor networks.

Analytic energy/cost model over concentric ring layouts, corona-width
optimization with an exhaustive validation oracle, machine-readable deployment
plans, and a round-based Monte-Carlo simulator that checks the model.
"""

from .config import RunConfig, config_from_dict, default_config, load_config
from .errors import (ConfigError, CoronaPlanError, GridTooLarge, Infeasible,
                     InfeasibleProvision, LayoutError, ModelInfeasible,
                     ParseError, SchemaMismatch)
from .model import (CoronaLayout, CoronaRates, CostParams, NetworkSpec, Variant,
                    ch_energy_rate, corona_energy_rate, corona_rates, cpua,
                    head_fraction, head_tx_distance, inter_energy_rate,
                    intra_energy_rate, member_energy_rate, node_count,
                    total_cost, total_energy_rate)
from .optimizer import (ObjectiveGradient, Solution, SolverConfig, SweepResult,
                        feasible_corona_counts, grid_oracle, objective_gradient,
                        optimize_widths, sample_feasible_widths, sweep)
from .plan import (CoronaProvision, DeploymentPlan, build_plan, layout_of,
                   load_plan, plan_from_dict, plan_to_dict, roundtrip, save_plan)
from .sim import (DistanceMode, ModelComparison, SimConfig, SimulationReport,
                  World, compare_to_model, place_nodes, run, summary_dict,
                  write_summary, write_trace)

__version__ = "0.1.0"
