"""gridbench: transient-stability simulation and controller cost benchmarking
for networked third-order synchronous-machine grids."""

from .controllers import (ControllerConfig, ControllerState, gab_control,
                          ilf_control, integral_step, llf_control)
from .grid_model import (DisturbanceProfile, GridState, NetworkParameters,
                         SteadyStateError, armature_current, dynamics_jacobian,
                         dynamics_rhs, electrical_power, find_steady_state)
from .metrics import (ConstraintSpec, FeasibilityReport, Trajectory,
                      angular_velocity_stats, constraint_loss, control_cost,
                      is_feasible, psi_mean_omega, psi_sync, psi_voltage)
from .optimal_control import (ControlSchedule, CostateTrajectory, OcpSolution,
                              SolverConfig, evaluate, gradient,
                              hamiltonian_gradient, integrate_costate_backward,
                              solve_ocp)
from .simulate import (IntegrationBlowUpError, IntegrationConfig,
                       integrate_closed_loop, integrate_open_loop, rk4_step,
                       write_trajectory_csv)
from .bench_cli import (BenchmarkReport, BenchmarkRow, Scenario, ScenarioError,
                        default_constraints, default_controllers,
                        default_network, emit_outputs, load_scenario,
                        run_benchmark, scenario_from_dict, scenario_to_dict)

__version__ = "0.1.0"
