"""Adjoint-gradient audit: compare against central finite differences.

The finite differences are taken on the same discrete functionals the adjoint
differentiates (forward RK4 + trapezoid quadrature on the stored grid), so
agreement is limited only by the FD truncation error. Substeps are chosen to
keep the RK4 step inside the stability region of the grid's fastest voltage
mode regardless of how coarse the control partition is.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .optimal_control import ControlSchedule, _Workspace, gradient
from .simulate import IntegrationConfig

#: RK4 step guaranteeing stability for the default network (|lambda| < 56/s)
MAX_STABLE_DT = 0.05


def audit_grid(horizon: float, n_intervals: int) -> IntegrationConfig:
    substeps = max(1, math.ceil(horizon / n_intervals / MAX_STABLE_DT))
    return IntegrationConfig(horizon=horizon, macro_steps=n_intervals,
                             substeps=substeps)


def random_schedule(scenario, n_intervals: int, seed: int,
                    amplitude: float = 0.3) -> ControlSchedule:
    rng = np.random.default_rng(seed)
    spec = scenario.constraints
    values = rng.normal(0.0, amplitude, (n_intervals, scenario.network.n_nodes))
    values = np.clip(values, spec.u_min, spec.u_max)
    return ControlSchedule(partition=np.linspace(0.0, spec.horizon, n_intervals + 1),
                           values=values)


def gradcheck_report(scenario, schedule: ControlSchedule,
                     icfg: IntegrationConfig | None = None,
                     fd_step: float = 1e-6, abs_floor: float = 1e-8,
                     coordinates=None) -> dict:
    """Max relative adjoint-vs-FD error per functional ("cost", 1..N+2).

    ``coordinates``: optional list of flat schedule indices to difference;
    None differences every entry.
    """
    icfg = icfg or audit_grid(scenario.constraints.horizon, schedule.n_intervals)
    ws = _Workspace(scenario, icfg)
    n_p, n = schedule.n_intervals, schedule.n_nodes
    u0 = np.asarray(schedule.values, dtype=float).ravel()

    dt = icfg.macro_dt
    cost_grad = 2.0 * u0 * dt
    loss_grads = ws.loss_gradients(u0).copy()

    def all_functionals(u_flat):
        cost = float(u_flat @ u_flat) * dt
        return np.concatenate([[cost], ws.losses(u_flat)])

    if coordinates is None:
        coordinates = range(u0.size)
    n_func = 1 + scenario.constraints.n_constraints
    max_rel = np.zeros(n_func)
    for idx in coordinates:
        up = u0.copy()
        up[idx] += fd_step
        um = u0.copy()
        um[idx] -= fd_step
        fd = (all_functionals(up) - all_functionals(um)) / (2.0 * fd_step)
        adjoint = np.concatenate([[cost_grad[idx]], loss_grads[idx]])
        denom = np.maximum(np.abs(fd), abs_floor)
        max_rel = np.maximum(max_rel, np.abs(adjoint - fd) / denom)

    return {"cost": max_rel[0],
            **{eta: max_rel[eta] for eta in range(1, n_func)}}


def run_gradcheck(scenario, n_intervals: int = 20, n_spot_checks: int = 0,
                  seed: int = 0, rel_tol: float = 1e-4,
                  verbose: bool = False) -> bool:
    schedule = random_schedule(scenario, n_intervals, seed)
    coords = None
    if n_spot_checks:
        rng = np.random.default_rng(seed + 1)
        coords = rng.choice(schedule.values.size,
                            size=min(n_spot_checks, schedule.values.size),
                            replace=False)
    report = gradcheck_report(scenario, schedule, coordinates=coords)
    ok = all(v < rel_tol for v in report.values())
    if verbose:
        for functional, err in report.items():
            label = functional if functional == "cost" else f"C_{functional}"
            flag = "ok" if err < rel_tol else "FAIL"
            print(f"gradcheck {label:>6}: max rel err {err:.3e}  [{flag}]")
        print(f"gradcheck overall: {'ok' if ok else 'FAIL'} "
              f"(n_intervals={n_intervals}, tol={rel_tol})")
    return ok
