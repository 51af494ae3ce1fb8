"""Benchmark harness and command-line interface.

Loads scenario files (JSON or TOML), runs the closed-loop controllers and
optionally the optimal control on a shared grid, and emits trajectory CSVs
plus a comparative report (control cost, per-constraint losses, feasibility).

Subcommands: ``simulate`` (one controller run), ``optimize`` (optimal control
only), ``bench`` (full comparison), ``gradcheck`` (adjoint-vs-finite-difference
audit). Exit codes: 0 success, 1 validation error, 2 runtime failure in any
row, 3 optimal control infeasible.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from .controllers import ControllerConfig
from .grid_model import (DisturbanceProfile, GridState, NetworkParameters,
                         SteadyStateError, find_steady_state)
from .metrics import (ConstraintSpec, Trajectory, angular_velocity_stats,
                      constraint_losses, control_cost, is_feasible)
from .optimal_control import ControlSchedule, OcpSolution, SolverConfig, solve_ocp
from .simulate import (IntegrationConfig, IntegrationBlowUpError,
                       integrate_closed_loop, integrate_open_loop,
                       write_trajectory_csv)


class ScenarioError(ValueError):
    """Scenario file failed validation; message carries the field path."""


# ---------------------------------------------------------------------------
# default scenario: the four-node ring test system

def default_network() -> NetworkParameters:
    b = np.diag([-66.1, -82.2, -69.6, -53.6])
    b[0, 1] = b[1, 0] = 34.13
    b[0, 3] = b[3, 0] = 28.0
    b[1, 2] = b[2, 1] = 44.1
    b[2, 3] = b[3, 2] = 22.1
    return NetworkParameters(
        inertia=[5.22, 3.98, 4.49, 4.22],
        damping=[1.60, 1.22, 1.38, 1.42],
        exciter_voltage=[7.01, 6.09, 6.29, 6.67],
        transient_time=[5.54, 7.41, 6.11, 6.22],
        reactance=[1.84, 1.62, 1.80, 1.94],
        transient_reactance=[0.25, 0.17, 0.36, 0.44],
        susceptance=b,
        net_injection=[-0.9, 0.4, -0.7, 1.2],
        nominal_frequency=50.0,
    )


#: published operating point used as the Newton guess for the default network
DEFAULT_ANGLE_GUESS = (0.0911, 0.0973, 0.0930, 0.115)
DEFAULT_VOLTAGE_GUESS = (0.998, 0.997, 1.0, 1.0)


def default_constraints(n_nodes: int = 4) -> ConstraintSpec:
    return ConstraintSpec(n_nodes=n_nodes)


def default_controllers(n_nodes: int = 4) -> list[ControllerConfig]:
    return [
        ControllerConfig(law="llf", llf_gain=1.0, n_nodes=n_nodes),
        ControllerConfig(law="ilf", ilf_gain=15.0, n_nodes=n_nodes),
        ControllerConfig(law="gab", gab_gain=60.0, n_nodes=n_nodes),
    ]


@dataclass(frozen=True)
class Scenario:
    network: NetworkParameters
    disturbance: DisturbanceProfile
    constraints: ConstraintSpec
    integration: IntegrationConfig
    controllers: tuple[ControllerConfig, ...]
    solve_oc: bool
    solver: SolverConfig
    initial_state: GridState

    def scenario_hash(self) -> str:
        """Stable digest of everything that determines the results."""
        blob = json.dumps(scenario_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# scenario (de)serialization

_NETWORK_KEYS = {"inertia", "damping", "exciter_voltage", "transient_time",
                 "reactance", "transient_reactance", "susceptance",
                 "net_injection", "nominal_frequency"}
_DISTURBANCE_KEYS = {"kind", "node", "magnitude", "onset", "duration",
                     "table_times", "table_values"}
_CONSTRAINT_KEYS = {"omega_min", "omega_max", "v_min", "v_max", "u_min", "u_max",
                    "terminal_weights", "tolerances", "horizon"}
_INTEGRATION_KEYS = {"horizon", "macro_steps", "substeps", "breakpoint_alignment"}
_CONTROLLER_KEYS = {"law", "llf_gain", "ilf_gain", "gab_gain", "adjacency",
                    "clamp", "label"}
_SOLVER_KEYS = {"method", "max_iterations", "accuracy", "penalty_initial",
                "penalty_growth", "inner_iterations"}
_TOP_KEYS = {"network", "disturbance", "constraints", "integration",
             "controllers", "solve_oc", "solver", "initial_guess"}


def _reject_unknown(section: dict, allowed: set, path: str):
    for key in section:
        if key not in allowed:
            raise ScenarioError(f"unknown key {path}.{key}" if path else
                                f"unknown key {key}")


def load_scenario(path) -> Scenario:
    """Parse, validate and complete a scenario file (JSON or TOML).

    Missing sections fall back to the default four-node system; unknown keys
    are rejected with their field path. The initial state is the zero-control
    steady state, solved from the configured (or default) Newton guess.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    if path.suffix.lower() == ".toml":
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"TOML parse error in {path}: {exc}") from exc
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"JSON parse error in {path}: {exc}") from exc
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario root must be a table/object")
    _reject_unknown(raw, _TOP_KEYS, "")

    net_cfg = dict(raw.get("network", {}))
    _reject_unknown(net_cfg, _NETWORK_KEYS, "network")
    try:
        if net_cfg:
            defaults = default_network()
            for key in _NETWORK_KEYS:
                net_cfg.setdefault(key, getattr(defaults, key))
            network = NetworkParameters(**net_cfg)
        else:
            network = default_network()
    except ValueError as exc:
        raise ScenarioError(f"network: {exc}") from exc
    n = network.n_nodes

    dist_cfg = dict(raw.get("disturbance", {}))
    _reject_unknown(dist_cfg, _DISTURBANCE_KEYS, "disturbance")
    dist_cfg.setdefault("kind", "temporary")
    if dist_cfg.get("table_times") is not None:
        dist_cfg["table_times"] = np.asarray(dist_cfg["table_times"], dtype=float)
        dist_cfg["table_values"] = np.asarray(dist_cfg["table_values"], dtype=float)
    try:
        disturbance = DisturbanceProfile(**dist_cfg)
    except ValueError as exc:
        raise ScenarioError(f"disturbance: {exc}") from exc
    if disturbance.kind != "custom" and not 0 <= disturbance.node < n:
        raise ScenarioError(f"disturbance.node: {disturbance.node} out of range "
                            f"for N={n}")

    cons_cfg = dict(raw.get("constraints", {}))
    _reject_unknown(cons_cfg, _CONSTRAINT_KEYS, "constraints")
    try:
        constraints = ConstraintSpec(n_nodes=n, **cons_cfg)
    except ValueError as exc:
        raise ScenarioError(f"constraints: {exc}") from exc

    icfg_cfg = dict(raw.get("integration", {}))
    _reject_unknown(icfg_cfg, _INTEGRATION_KEYS, "integration")
    icfg_cfg.setdefault("horizon", constraints.horizon)
    try:
        integration = IntegrationConfig(**icfg_cfg)
    except ValueError as exc:
        raise ScenarioError(f"integration: {exc}") from exc
    if abs(integration.horizon - constraints.horizon) > 1e-12:
        raise ScenarioError("integration.horizon must equal constraints.horizon")

    ctrl_list = raw.get("controllers")
    controllers = []
    if ctrl_list is None:
        controllers = default_controllers(n)
    else:
        for idx, entry in enumerate(ctrl_list):
            entry = dict(entry)
            _reject_unknown(entry, _CONTROLLER_KEYS, f"controllers[{idx}]")
            try:
                controllers.append(ControllerConfig(
                    n_nodes=n, u_min=constraints.u_min, u_max=constraints.u_max,
                    **entry))
            except ValueError as exc:
                raise ScenarioError(f"controllers[{idx}]: {exc}") from exc

    solver_cfg = dict(raw.get("solver", {}))
    _reject_unknown(solver_cfg, _SOLVER_KEYS, "solver")
    try:
        solver = SolverConfig(**solver_cfg)
    except ValueError as exc:
        raise ScenarioError(f"solver: {exc}") from exc

    guess_cfg = dict(raw.get("initial_guess", {}))
    _reject_unknown(guess_cfg, {"angle", "voltage"}, "initial_guess")
    if n == 4:
        angle = guess_cfg.get("angle", DEFAULT_ANGLE_GUESS)
        voltage = guess_cfg.get("voltage", DEFAULT_VOLTAGE_GUESS)
    else:
        angle = guess_cfg.get("angle", np.zeros(n))
        voltage = guess_cfg.get("voltage", np.ones(n))
    try:
        guess = GridState(angle=angle, angular_velocity=np.zeros(n), voltage=voltage)
        initial_state = find_steady_state(network, guess)
    except (ValueError, SteadyStateError) as exc:
        raise ScenarioError(f"initial_guess: steady state solve failed: {exc}") from exc

    return Scenario(network=network, disturbance=disturbance,
                    constraints=constraints, integration=integration,
                    controllers=tuple(controllers),
                    solve_oc=bool(raw.get("solve_oc", False)),
                    solver=solver, initial_state=initial_state)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Round-trippable plain-dict form (load_scenario(dump) == scenario)."""
    net = scenario.network
    dist = scenario.disturbance
    spec = scenario.constraints
    icfg = scenario.integration
    out = {
        "network": {
            "inertia": net.inertia.tolist(),
            "damping": net.damping.tolist(),
            "exciter_voltage": net.exciter_voltage.tolist(),
            "transient_time": net.transient_time.tolist(),
            "reactance": net.reactance.tolist(),
            "transient_reactance": net.transient_reactance.tolist(),
            "susceptance": net.susceptance.tolist(),
            "net_injection": net.net_injection.tolist(),
            "nominal_frequency": net.nominal_frequency,
        },
        "disturbance": {
            "kind": dist.kind, "node": dist.node, "magnitude": dist.magnitude,
            "onset": dist.onset, "duration": dist.duration,
        },
        "constraints": {
            "omega_min": spec.omega_min, "omega_max": spec.omega_max,
            "v_min": spec.v_min.tolist(), "v_max": spec.v_max.tolist(),
            "u_min": spec.u_min.tolist(), "u_max": spec.u_max.tolist(),
            "terminal_weights": spec.terminal_weights.tolist(),
            "tolerances": spec.tolerances.tolist(),
            "horizon": spec.horizon,
        },
        "integration": {
            "horizon": icfg.horizon, "macro_steps": icfg.macro_steps,
            "substeps": icfg.substeps,
            "breakpoint_alignment": icfg.breakpoint_alignment,
        },
        "controllers": [
            {"law": c.law, "llf_gain": c.llf_gain.tolist(),
             "ilf_gain": c.ilf_gain.tolist(), "gab_gain": c.gab_gain.tolist(),
             "adjacency": c.adjacency.tolist(), "clamp": c.clamp, "label": c.label}
            for c in scenario.controllers
        ],
        "solve_oc": scenario.solve_oc,
        "solver": {
            "method": scenario.solver.method,
            "max_iterations": scenario.solver.max_iterations,
            "accuracy": scenario.solver.accuracy,
            "penalty_initial": scenario.solver.penalty_initial,
            "penalty_growth": scenario.solver.penalty_growth,
            "inner_iterations": scenario.solver.inner_iterations,
        },
        "initial_guess": {
            "angle": scenario.initial_state.angle.tolist(),
            "voltage": scenario.initial_state.voltage.tolist(),
        },
    }
    if dist.kind == "custom":
        out["disturbance"]["table_times"] = dist.table_times.tolist()
        out["disturbance"]["table_values"] = dist.table_values.tolist()
    return out


# ---------------------------------------------------------------------------
# benchmark

@dataclass(frozen=True)
class BenchmarkRow:
    name: str
    status: str                     # "ok" or "failed: <reason>"
    objective: float | None = None
    losses: tuple | None = None
    feasible: bool | None = None
    terminal_sigma: float | None = None
    terminal_mean_omega: float | None = None
    iterations: int | None = None   # optimal-control rows only
    oc_status: str | None = None
    wall_time: float = 0.0

    def to_dict(self, n_nodes: int) -> dict:
        out = {"name": self.name, "status": self.status}
        if self.losses is not None:
            out.update({
                "J": self.objective,
                **{f"C_{i + 1}": self.losses[i] for i in range(n_nodes + 2)},
                "feasible": self.feasible,
                "terminal_sigma": self.terminal_sigma,
                "terminal_mean_omega": self.terminal_mean_omega,
            })
        if self.iterations is not None:
            out["iterations"] = self.iterations
            out["oc_status"] = self.oc_status
        return out


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[BenchmarkRow, ...]
    n_nodes: int
    metadata: dict
    timings: dict

    @property
    def all_ok(self) -> bool:
        return all(row.status == "ok" for row in self.rows)

    def to_dict(self, include_timings: bool = True) -> dict:
        out = {
            "metadata": self.metadata,
            "rows": [row.to_dict(self.n_nodes) for row in self.rows],
        }
        if include_timings:
            out["timings"] = self.timings
        return out


def _row_from_trajectory(name: str, traj: Trajectory, spec: ConstraintSpec,
                         wall: float, iterations=None, oc_status=None) -> BenchmarkRow:
    report = is_feasible(traj, spec)
    mean, sigma = angular_velocity_stats(traj.omega[-1])
    return BenchmarkRow(
        name=name, status="ok", objective=control_cost(traj),
        losses=tuple(float(c) for c in report.losses),
        feasible=report.feasible, terminal_sigma=sigma, terminal_mean_omega=mean,
        iterations=iterations, oc_status=oc_status, wall_time=wall)


def run_benchmark(scenario: Scenario) -> tuple[BenchmarkReport, dict]:
    """Closed-loop run per configured controller, plus the optimal control
    when requested. A failing row is recorded and the benchmark continues.
    Returns the report and the trajectories keyed by row name."""
    rows: list[BenchmarkRow] = []
    trajectories: dict[str, Trajectory] = {}
    timings: dict[str, float] = {}
    oc_solution: OcpSolution | None = None

    for config in scenario.controllers:
        t0 = time.perf_counter()
        try:
            traj = integrate_closed_loop(scenario.network, scenario.initial_state,
                                         scenario.disturbance, config,
                                         scenario.integration)
            wall = time.perf_counter() - t0
            rows.append(_row_from_trajectory(config.label, traj,
                                             scenario.constraints, wall))
            trajectories[config.label] = traj
        except (IntegrationBlowUpError, ValueError) as exc:
            wall = time.perf_counter() - t0
            rows.append(BenchmarkRow(name=config.label,
                                     status=f"failed: {exc}", wall_time=wall))
        timings[config.label] = rows[-1].wall_time

    if scenario.solve_oc:
        t0 = time.perf_counter()
        try:
            oc_solution = solve_ocp(scenario)
            wall = time.perf_counter() - t0
            traj = integrate_open_loop(scenario.network, scenario.initial_state,
                                       scenario.disturbance, oc_solution.schedule,
                                       scenario.integration)
            rows.append(_row_from_trajectory("oc", traj, scenario.constraints, wall,
                                             iterations=oc_solution.iterations,
                                             oc_status=oc_solution.status))
            trajectories["oc"] = traj
        except (IntegrationBlowUpError, FloatingPointError, ValueError) as exc:
            wall = time.perf_counter() - t0
            rows.append(BenchmarkRow(name="oc", status=f"failed: {exc}",
                                     wall_time=wall))
        timings["oc"] = rows[-1].wall_time

    metadata = {
        "scenario_hash": scenario.scenario_hash(),
        "disturbance": scenario.disturbance.kind,
        "macro_steps": scenario.integration.macro_steps,
        "substeps": scenario.integration.substeps,
        "n_nodes": scenario.network.n_nodes,
    }
    report = BenchmarkReport(rows=tuple(rows), n_nodes=scenario.network.n_nodes,
                             metadata=metadata, timings=timings)
    extras = {"trajectories": trajectories, "oc_solution": oc_solution}
    return report, extras


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit_outputs(report: BenchmarkReport, trajectories: dict, out_dir,
                 scenario: Scenario, oc_solution: OcpSolution | None = None) -> list[Path]:
    """Write report.json, report.csv, per-run trajectory CSVs and, when the
    optimal control was solved, its schedule CSV and summary JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    written.append(path)

    n = report.n_nodes
    loss_cols = [f"C_{i + 1}" for i in range(n + 2)]
    path = out_dir / "report.csv"
    with open(path, "w") as fh:
        fh.write(",".join(["name", "status", "J", *loss_cols, "feasible",
                           "terminal_sigma", "terminal_mean_omega"]) + "\n")
        for row in report.rows:
            cells = [row.name, row.status.replace(",", ";")]
            if row.losses is None:
                cells += [""] * (n + 6)
            else:
                cells += [_fmt(row.objective), *(_fmt(c) for c in row.losses),
                          _fmt(row.feasible), _fmt(row.terminal_sigma),
                          _fmt(row.terminal_mean_omega)]
            fh.write(",".join(cells) + "\n")
    written.append(path)

    kind = scenario.disturbance.kind
    for name, traj in trajectories.items():
        path = out_dir / f"{name}_{kind}.csv"
        write_trajectory_csv(traj, scenario.network, path)
        written.append(path)

    if oc_solution is not None:
        path = out_dir / "oc_schedule.csv"
        with open(path, "w") as fh:
            fh.write(",".join(["k", "t_start",
                               *(f"u_{i + 1}" for i in range(n))]) + "\n")
            sched = oc_solution.schedule
            for k in range(sched.n_intervals):
                fh.write(",".join([str(k), _fmt(float(sched.partition[k])),
                                   *(_fmt(v) for v in sched.values[k])]) + "\n")
        written.append(path)
        path = out_dir / "oc_summary.json"
        path.write_text(json.dumps({
            "J": oc_solution.objective,
            **{f"C_{i + 1}": float(c)
               for i, c in enumerate(oc_solution.constraint_losses)},
            "status": oc_solution.status,
            "iterations": oc_solution.iterations,
            "wall_time": oc_solution.wall_time,
            "message": oc_solution.message,
        }, indent=2) + "\n")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# CLI

def _load_or_default(args) -> Scenario:
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        scenario = scenario_from_dict({})
    updates = {}
    if getattr(args, "paper_scale", False):
        updates = {"macro_steps": 1500, "substeps": 2}
    if getattr(args, "macro_steps", None):
        updates["macro_steps"] = args.macro_steps
    if getattr(args, "substeps", None):
        updates["substeps"] = args.substeps
    if updates:
        scenario = replace(scenario,
                           integration=replace(scenario.integration, **updates))
    if getattr(args, "disturbance", None):
        scenario = replace(scenario, disturbance=replace(
            scenario.disturbance, kind=args.disturbance))
    return scenario


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--scenario", help="scenario file (JSON or TOML)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--paper-scale", action="store_true",
                        help="force the n_p=1500 partition")
    parser.add_argument("--macro-steps", type=int, help="override macro steps")
    parser.add_argument("--substeps", type=int, help="override RK4 substeps")
    parser.add_argument("--disturbance", choices=["none", "temporary", "persistent"],
                        help="override the disturbance kind")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; the pipeline is deterministic")


def _cmd_simulate(args) -> int:
    scenario = _load_or_default(args)
    wanted = args.controller
    configs = [c for c in scenario.controllers if c.label == wanted]
    if not configs:
        if wanted == "none":
            configs = [ControllerConfig(law="none",
                                        n_nodes=scenario.network.n_nodes)]
        else:
            print(f"controller {wanted!r} not in scenario "
                  f"(have: {[c.label for c in scenario.controllers]})",
                  file=sys.stderr)
            return 1
    scenario = replace(scenario, controllers=(configs[0],), solve_oc=False)
    report, extras = run_benchmark(scenario)
    emit_outputs(report, extras["trajectories"], args.out, scenario)
    _print_report(report)
    return 0 if report.all_ok else 2


def _cmd_optimize(args) -> int:
    scenario = _load_or_default(args)
    scenario = replace(scenario, controllers=(), solve_oc=True)
    report, extras = run_benchmark(scenario)
    emit_outputs(report, extras["trajectories"], args.out, scenario,
                 oc_solution=extras["oc_solution"])
    _print_report(report)
    if not report.all_ok:
        return 2
    if extras["oc_solution"].status != "converged":
        return 3
    return 0


def _cmd_bench(args) -> int:
    scenario = _load_or_default(args)
    if args.with_oc:
        scenario = replace(scenario, solve_oc=True)
    report, extras = run_benchmark(scenario)
    emit_outputs(report, extras["trajectories"], args.out, scenario,
                 oc_solution=extras["oc_solution"])
    _print_report(report)
    if not report.all_ok:
        return 2
    oc = extras["oc_solution"]
    if oc is not None and oc.status != "converged":
        return 3
    return 0


def _cmd_gradcheck(args) -> int:
    # imported here to keep CLI startup light
    from .gradcheck import run_gradcheck
    scenario = _load_or_default(args)
    ok = run_gradcheck(scenario, n_intervals=args.intervals,
                       n_spot_checks=args.spot_checks, seed=args.seed or 0,
                       rel_tol=args.rel_tol, verbose=True)
    return 0 if ok else 2


def _print_report(report: BenchmarkReport):
    n = report.n_nodes
    header = f"{'name':>6} {'J':>12} {'C_1':>12} {'C_2':>12} " \
             f"{'max C_v':>12} {'feasible':>9} {'sigma(T)':>12} {'<omega>(T)':>12}"
    print(header)
    for row in report.rows:
        if row.losses is None:
            print(f"{row.name:>6} {row.status}")
            continue
        max_cv = max(row.losses[2:2 + n])
        print(f"{row.name:>6} {row.objective:>12.5g} {row.losses[0]:>12.5g} "
              f"{row.losses[1]:>12.5g} {max_cv:>12.5g} {str(row.feasible):>9} "
              f"{row.terminal_sigma:>12.5g} {row.terminal_mean_omega:>12.5g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridbench",
        description="Power-grid transient-stability controller benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="closed-loop run for one controller")
    _add_common(p)
    p.add_argument("--controller", default="llf",
                   help="controller label from the scenario, or 'none'")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimize", help="solve the optimal control problem")
    _add_common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("bench", help="full controller comparison")
    _add_common(p)
    p.add_argument("--with-oc", action="store_true",
                   help="also solve the optimal control")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("gradcheck", help="adjoint vs finite-difference audit")
    _add_common(p)
    p.add_argument("--intervals", type=int, default=20,
                   help="schedule intervals for the audit")
    p.add_argument("--spot-checks", type=int, default=0,
                   help="0 checks the full gradient, else a random subset")
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
