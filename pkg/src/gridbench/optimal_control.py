"""Constrained optimal control by control parametrization.

Controls are piecewise constant on the macro partition; the resulting
finite-dimensional program minimizes the quadratic control cost subject to the
constraint losses staying within their tolerances and box bounds on every
held value. Gradients of the losses come from an exact discrete adjoint: the
reverse-mode sweep through the forward RK4 stages differentiates the very
functionals the quadrature produces, so they match finite differences of the
discrete problem to solver precision.

Two solver backends: "slsqp" (sequential least-squares programming, the
classic choice for this problem class) and "auglag" (augmented-Lagrangian
outer loop around box-projected L-BFGS-B), selectable per scenario.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np
import scipy.optimize

from . import _kernels
from .grid_model import NetworkParameters
from .metrics import ConstraintSpec, Trajectory, constraint_losses, control_cost, trapezoid_weights
from .simulate import IntegrationConfig, aligned_disturbance, disturbance_table, integrate_open_loop

if TYPE_CHECKING:  # pragma: no cover
    from .bench_cli import Scenario


@dataclass(frozen=True)
class ControlSchedule:
    """Step controls: values[k] is held on [partition[k], partition[k+1])."""

    partition: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.partition, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if p.ndim != 1 or p.size < 2 or np.any(np.diff(p) <= 0) or p[0] != 0.0:
            raise ValueError("partition must be strictly increasing from 0")
        if v.ndim != 2 or v.shape[0] != p.size - 1:
            raise ValueError("values must have one row per partition interval")
        object.__setattr__(self, "partition", p)
        object.__setattr__(self, "values", v)

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.partition[-1])

    @classmethod
    def zeros(cls, n_intervals: int, n_nodes: int, horizon: float) -> "ControlSchedule":
        return cls(partition=np.linspace(0.0, horizon, n_intervals + 1),
                   values=np.zeros((n_intervals, n_nodes)))

    def value_at(self, t: float) -> np.ndarray:
        """Right-continuous lookup; the final interval is closed at T."""
        k = np.searchsorted(self.partition, t, side="right") - 1
        k = min(max(int(k), 0), self.n_intervals - 1)
        return self.values[k]

    def refine(self, factor: int) -> "ControlSchedule":
        """Split every interval into ``factor`` equal parts; represents the
        identical control function on the nested finer partition."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        old = self.partition
        pieces = [np.linspace(old[k], old[k + 1], factor + 1)[:-1]
                  for k in range(self.n_intervals)]
        new_partition = np.concatenate(pieces + [old[-1:]])
        return ControlSchedule(partition=new_partition,
                               values=np.repeat(self.values, factor, axis=0))

    def interval_lengths(self) -> np.ndarray:
        return np.diff(self.partition)


@dataclass(frozen=True)
class CostateTrajectory:
    """Adjoint state per sample for one functional (grid shared with the
    forward trajectory). The cost costate is identically zero because the
    quadratic control rate has no state dependence; constraint costates pick
    up their terminal values from the weighted terminal losses."""

    functional: str
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class EvaluationResult:
    objective: float
    constraint_losses: np.ndarray
    trajectory: Trajectory


@dataclass(frozen=True)
class SolverConfig:
    """``max_iterations`` bounds SLSQP iterations or augmented-Lagrangian
    outer rounds; ``inner_iterations`` bounds each L-BFGS-B inner solve.

    Both backends reach the same optima on the benchmark scenarios; auglag is
    the default because it avoids SLSQP's dense least-squares subproblem,
    whose cost grows cubically with the schedule dimension.
    """

    method: str = "auglag"
    max_iterations: int = 500
    accuracy: float = 1e-6
    initial_schedule: ControlSchedule | None = None
    penalty_initial: float = 10.0
    penalty_growth: float = 10.0
    inner_iterations: int = 1000
    outer_iterations: int = 30

    def __post_init__(self):
        if self.method not in ("slsqp", "auglag"):
            raise ValueError(f"unknown solver method {self.method!r}")


@dataclass(frozen=True)
class OcpSolution:
    schedule: ControlSchedule
    objective: float
    constraint_losses: np.ndarray
    iterations: int
    status: str  # converged | infeasible | iteration-limit
    message: str = ""
    wall_time: float = 0.0


def evaluate(schedule: ControlSchedule, scenario: "Scenario",
             icfg: IntegrationConfig | None = None) -> EvaluationResult:
    """Forward-integrate the schedule and score it: control cost plus the
    N+2 constraint losses."""
    icfg = icfg or scenario.integration
    traj = integrate_open_loop(scenario.network, scenario.initial_state,
                               scenario.disturbance, schedule, icfg)
    return EvaluationResult(objective=control_cost(traj),
                            constraint_losses=constraint_losses(traj, scenario.constraints),
                            trajectory=traj)


def hamiltonian_gradient(network: NetworkParameters, u: np.ndarray,
                         costate: np.ndarray, functional: str | int = "cost",
                         ) -> np.ndarray:
    """Control gradient of the Hamiltonian L + z . f.

    The control enters the dynamics only through omega_dot (scaled by 1/M_i),
    so dH/du_i = z_{N+i}/M_i, plus 2 u_i for the cost functional whose rate is
    the squared control; constraint rates carry no direct u term. Independent
    of the current state.
    """
    n = network.n_nodes
    u = np.asarray(u, dtype=float)
    costate = np.asarray(costate, dtype=float)
    if u.shape != (n,) or costate.shape != (3 * n,):
        raise ValueError("u must be length N and costate length 3N")
    out = costate[n:2 * n] / network.inertia
    if functional == "cost":
        out = out + 2.0 * u
    return out


class _Workspace:
    """Shared arrays for one (scenario, grid) pair plus a one-slot cache of
    the most recent forward/adjoint evaluation, keyed on the control bytes.
    SLSQP and the augmented-Lagrangian loop both query objective, constraints
    and jacobians at identical points; the cache collapses those calls into
    one forward pass and one adjoint sweep per point."""

    def __init__(self, scenario: "Scenario", icfg: IntegrationConfig):
        net = scenario.network
        spec = scenario.constraints
        if abs(icfg.horizon - spec.horizon) > 1e-12 * max(1.0, spec.horizon):
            raise ValueError("integration horizon differs from constraint horizon")
        self.network = net
        self.spec = spec
        self.icfg = icfg
        self.n = net.n_nodes
        self.n_p = icfg.macro_steps
        self.h = icfg.substep_dt
        self.x0 = scenario.initial_state.as_vector()
        disturbance = scenario.disturbance
        if icfg.breakpoint_alignment:
            disturbance = aligned_disturbance(disturbance, icfg)
        self.xi_mid = disturbance_table(disturbance, icfg, self.n)
        self.times = icfg.sample_times()
        self.quad_w = trapezoid_weights(self.times)
        self._args = (net.susceptance, net.net_injection, net.damping, net.inertia,
                      net.exciter_voltage, net.transient_time,
                      net.reactance - net.transient_reactance)
        self._bounds = (spec.omega_min, spec.omega_max, spec.v_min, spec.v_max)
        self._key = None
        self._entry = None
        self.n_forward = 0
        self.n_adjoint = 0

    def forward_states(self, u_values: np.ndarray) -> np.ndarray:
        return _kernels.forward_kernel(self.x0, u_values, self.xi_mid,
                                       self.n_p, self.icfg.substeps, self.h, *self._args)

    def losses_of_states(self, xs: np.ndarray) -> np.ndarray:
        n = self.n
        om = xs[:, n:2 * n]
        v = xs[:, 2 * n:]
        mean = om.mean(axis=1)
        losses = np.empty((xs.shape[0], self.spec.n_constraints))
        losses[:, 0] = ((om - mean[:, None]) ** 2).mean(axis=1)
        psi2 = (self.spec.omega_max - mean) * (mean - self.spec.omega_min)
        losses[:, 1] = np.minimum(0.0, psi2) ** 2
        psiv = (self.spec.v_max[None, :] - v) * (v - self.spec.v_min[None, :])
        losses[:, 2:] = np.minimum(0.0, psiv) ** 2
        return self.quad_w @ losses + self.spec.terminal_weights * losses[-1]

    def adjoint_gradients(self, u_values: np.ndarray, xs: np.ndarray,
                          record_costates: bool = False):
        grad, costates = _kernels.adjoint_kernel(
            xs, u_values, self.xi_mid, self.quad_w, self.spec.terminal_weights,
            self.n_p, self.icfg.substeps, self.h, *self._args, *self._bounds,
            record_costates)
        self.n_adjoint += 1
        return grad, costates

    # -- cached accessors on flattened control vectors --
    def _lookup(self, u_flat: np.ndarray) -> dict:
        key = u_flat.tobytes()
        if key != self._key:
            u_values = u_flat.reshape(self.n_p, self.n).copy()
            xs = self.forward_states(u_values)
            if not np.isfinite(xs[-1]).all():
                raise FloatingPointError("forward integration blew up during solve")
            self.n_forward += 1
            self._key = key
            self._entry = {"u": u_values, "xs": xs,
                           "losses": self.losses_of_states(xs), "grad": None}
        return self._entry

    def losses(self, u_flat: np.ndarray) -> np.ndarray:
        return self._lookup(u_flat)["losses"]

    def loss_gradients(self, u_flat: np.ndarray) -> np.ndarray:
        entry = self._lookup(u_flat)
        if entry["grad"] is None:
            grad, _ = self.adjoint_gradients(entry["u"], entry["xs"])
            entry["grad"] = grad.reshape(self.n_p * self.n, self.spec.n_constraints)
        return entry["grad"]


def _functional_index(functional, n_constraints: int) -> int | None:
    """None for the cost; 0-based constraint column otherwise."""
    if functional == "cost":
        return None
    eta = int(functional)
    if not 1 <= eta <= n_constraints:
        raise IndexError(f"constraint index must be in 1..{n_constraints}, got {eta}")
    return eta - 1


def _schedule_for_grid(schedule: ControlSchedule, icfg: IntegrationConfig) -> np.ndarray:
    macro = np.linspace(0.0, icfg.horizon, icfg.macro_steps + 1)
    if schedule.partition.size != macro.size or \
            not np.allclose(schedule.partition, macro, rtol=0.0, atol=1e-9):
        raise ValueError("schedule partition must coincide with the macro grid")
    return np.asarray(schedule.values, dtype=float)


def gradient(functional, schedule: ControlSchedule, scenario: "Scenario",
             icfg: IntegrationConfig | None = None) -> np.ndarray:
    """d(functional)/d(schedule values), shape (n_intervals, N).

    The cost gradient is analytic (2 u Delta_k: the cost never depends on the
    state); constraint gradients come from the discrete adjoint sweep.
    """
    icfg = icfg or scenario.integration
    u_values = _schedule_for_grid(schedule, icfg)
    column = _functional_index(functional, scenario.constraints.n_constraints)
    if column is None:
        return 2.0 * u_values * schedule.interval_lengths()[:, None]
    ws = _Workspace(scenario, icfg)
    xs = ws.forward_states(u_values)
    grad, _ = ws.adjoint_gradients(u_values, xs)
    return grad[:, :, column]


def integrate_costate_backward(functional, traj: Trajectory, scenario: "Scenario",
                               icfg: IntegrationConfig | None = None,
                               ) -> CostateTrajectory:
    """Adjoint state of the chosen functional at every forward sample.

    values[s] is the sensitivity of the discrete functional to the state at
    sample s. The terminal value carries the weighted terminal loss gradient;
    inactive constraints (hinge never engaged) yield identically zero
    costates, as does the cost functional.
    """
    icfg = icfg or scenario.integration
    column = _functional_index(functional, scenario.constraints.n_constraints)
    if column is None:
        return CostateTrajectory(functional="cost", times=traj.times.copy(),
                                 values=np.zeros_like(traj.states))
    ws = _Workspace(scenario, icfg)
    if traj.times.size != ws.times.size or not np.allclose(traj.times, ws.times):
        raise ValueError("trajectory grid does not match the integration config")
    u_values = traj.controls[::icfg.substeps][:ws.n_p]
    _, costates = ws.adjoint_gradients(u_values, traj.states, record_costates=True)
    return CostateTrajectory(functional=f"constraint_{column + 1}",
                             times=traj.times.copy(),
                             values=costates[:, :, column])


def _status_from(feasible: bool, hit_limit: bool) -> str:
    """converged requires a normal solver exit AND all losses in tolerance."""
    if hit_limit:
        return "iteration-limit"
    return "converged" if feasible else "infeasible"


def _tightened_tolerances(spec: ConstraintSpec) -> tuple[np.ndarray, np.ndarray]:
    """Internal tolerances sit slightly inside the true ones so the reported
    losses of an active constraint land strictly on the feasible side; the
    per-constraint scale keeps the solver's feasibility slack below that
    margin even for the effectively-hard 1e-10 tolerances."""
    eps = spec.tolerances
    scale = np.maximum(eps, 1e-6)
    eps_tight = np.maximum(eps - np.maximum(1e-3 * eps, 1e-11), 0.0)
    return eps_tight, scale


def solve_ocp(scenario: "Scenario", icfg: IntegrationConfig | None = None,
              solver: SolverConfig | None = None) -> OcpSolution:
    """Minimize the control cost subject to loss tolerances and box bounds.

    The reported solution re-evaluates the returned schedule from scratch;
    ``converged`` is only claimed when every loss is inside its (untightened)
    tolerance. Deterministic: no randomness anywhere in the pipeline.
    """
    icfg = icfg or scenario.integration
    solver = solver or scenario.solver
    ws = _Workspace(scenario, icfg)
    spec = scenario.constraints
    n_p, n = ws.n_p, ws.n
    dt = icfg.macro_dt
    lo = np.tile(spec.u_min, n_p)
    hi = np.tile(spec.u_max, n_p)

    if solver.initial_schedule is not None:
        u0 = _schedule_for_grid(solver.initial_schedule, icfg).ravel()
        u0 = np.clip(u0, lo, hi)
    else:
        u0 = np.zeros(n_p * n)

    t_start = time.perf_counter()
    if solver.method == "slsqp":
        u_flat, iterations, hit_limit, message = _solve_slsqp(ws, solver, u0, lo, hi, dt)
    else:
        u_flat, iterations, hit_limit, message = _solve_auglag(ws, solver, u0, lo, hi, dt)
    wall = time.perf_counter() - t_start

    u_flat = np.clip(u_flat, lo, hi)
    schedule = ControlSchedule(partition=np.linspace(0.0, icfg.horizon, n_p + 1),
                               values=u_flat.reshape(n_p, n))
    result = evaluate(schedule, scenario, icfg)
    feasible = bool(np.all(result.constraint_losses <= spec.tolerances))
    return OcpSolution(schedule=schedule, objective=result.objective,
                       constraint_losses=result.constraint_losses,
                       iterations=iterations,
                       status=_status_from(feasible, hit_limit and not feasible),
                       message=message, wall_time=wall)


def _solve_slsqp(ws: _Workspace, solver: SolverConfig, u0, lo, hi, dt):
    """SLSQP on the scaled constraints g = (eps' - C)/scale >= 0."""
    spec = ws.spec
    eps_tight, scale = _tightened_tolerances(spec)
    constraints = [
        {"type": "ineq",
         "fun": (lambda u, e=e: (eps_tight[e] - ws.losses(u)[e]) / scale[e]),
         "jac": (lambda u, e=e: -ws.loss_gradients(u)[:, e] / scale[e])}
        for e in range(spec.n_constraints)
    ]
    res = scipy.optimize.minimize(
        lambda u: float(u @ u) * dt, u0, jac=lambda u: 2.0 * dt * u,
        bounds=np.column_stack([lo, hi]), constraints=constraints,
        method="SLSQP",
        options={"maxiter": solver.max_iterations, "ftol": solver.accuracy})
    return res.x, int(res.nit), res.status == 9, str(res.message)


def _solve_auglag(ws: _Workspace, solver: SolverConfig, u0, lo, hi, dt):
    """Augmented-Lagrangian outer loop with box-projected L-BFGS-B inners.

    Works on the scaled violations c = (C - eps')/scale with the standard
    inequality form: merit = J + sum(max(0, mu + rho c)^2 - mu^2)/(2 rho),
    multiplier update mu <- max(0, mu + rho c), penalty growth whenever the
    worst violation fails to shrink 4x. Terminates once the iterate is
    feasible and the objective has stabilized between outer rounds. The
    squared-hinge losses are C^1 but not C^2; L-BFGS-B absorbs the curvature
    jumps (quasi-Newton updates that fail the curvature condition are skipped
    internally).
    """
    spec = ws.spec
    eps_tight, scale = _tightened_tolerances(spec)
    mu = np.zeros(spec.n_constraints)
    rho = solver.penalty_initial
    u = u0.copy()
    bounds = np.column_stack([lo, hi])
    total_inner = 0
    prev_violation = np.inf
    objective_prev = None
    for _ in range(solver.outer_iterations):
        def merit(u_flat):
            c = (ws.losses(u_flat) - eps_tight) / scale
            active = np.maximum(0.0, mu + rho * c)
            value = float(u_flat @ u_flat) * dt \
                + float((active ** 2 - mu ** 2).sum()) / (2.0 * rho)
            grad = 2.0 * dt * u_flat + ws.loss_gradients(u_flat) @ (active / scale)
            return value, grad

        res = scipy.optimize.minimize(
            merit, u, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": solver.inner_iterations, "ftol": 1e-16,
                     "gtol": 1e-10})
        u = res.x
        total_inner += int(res.nit)
        c = (ws.losses(u) - eps_tight) / scale
        violation = float(np.max(c))
        objective = float(u @ u) * dt
        if violation <= 0.0:
            if objective_prev is not None and \
                    abs(objective - objective_prev) <= solver.accuracy * max(1.0, objective):
                return u, total_inner, False, "feasible, objective stabilized"
            objective_prev = objective
        else:
            objective_prev = None
        mu = np.maximum(0.0, mu + rho * c)
        if violation > 0.25 * prev_violation:
            rho *= solver.penalty_growth
        prev_violation = max(violation, 1e-300)
    return u, total_inner, True, "outer iteration limit reached"
