"""Synchronization statistics, constraint loss functionals and control cost.

Constraints are indexed eta = 1..N+2: eta=1 is the synchronization loss
(variance of the angular velocities), eta=2 the mean-angular-velocity band and
eta=2+i the voltage band at node i (1-based). Each loss is the integral of the
squared negative part of the constraint function plus a weighted terminal
term; a trajectory is feasible when every loss is within its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid_model import GridState, _as_float_array


@dataclass(frozen=True)
class ConstraintSpec:
    """Bounds, terminal weights and tolerances for the N+2 constraints."""

    omega_min: float = -math.pi / 10
    omega_max: float = math.pi / 10
    v_min: np.ndarray | float = 0.94
    v_max: np.ndarray | float = 1.06
    u_min: np.ndarray | float = -5.0
    u_max: np.ndarray | float = 5.0
    terminal_weights: np.ndarray | float = 1.0
    tolerances: np.ndarray | None = None
    horizon: float = 60.0
    n_nodes: int = 4

    def __post_init__(self):
        n = self.n_nodes
        for name in ("v_min", "v_max", "u_min", "u_max"):
            object.__setattr__(self, name, _as_float_array(getattr(self, name), n, name))
        w = _as_float_array(self.terminal_weights, n + 2, "terminal_weights")
        object.__setattr__(self, "terminal_weights", w)
        tol = self.tolerances
        if tol is None:
            tol = np.array([1e-4] + [1e-10] * (n + 1))
        tol = _as_float_array(tol, n + 2, "tolerances")
        object.__setattr__(self, "tolerances", tol)
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        if np.any(self.v_min >= self.v_max):
            raise ValueError("v_min must be below v_max")
        if np.any(self.u_min >= self.u_max):
            raise ValueError("u_min must be below u_max")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if np.any(w < 0) or np.any(tol < 0):
            raise ValueError("weights and tolerances must be non-negative")

    @property
    def n_constraints(self) -> int:
        return self.n_nodes + 2


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed- or open-loop run on [0, T].

    ``states`` holds packed 3N state vectors, one row per sample. ``controls``
    row s is the zero-order-hold value active on [t_s, t_{s+1}) (the last row
    repeats the final held value so all arrays stay aligned with ``times``).
    ``disturbances`` records the right-continuous xi at each sample time.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    disturbances: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0) or t[0] != 0.0:
            raise ValueError("times must be strictly increasing from 0")
        k = t.size
        for name in ("states", "controls", "disturbances"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape[0] != k:
                raise ValueError(f"{name} not aligned with times")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "times", t)

    @property
    def n_nodes(self) -> int:
        return self.states.shape[1] // 3

    @property
    def angle(self) -> np.ndarray:
        return self.states[:, :self.n_nodes]

    @property
    def omega(self) -> np.ndarray:
        return self.states[:, self.n_nodes:2 * self.n_nodes]

    @property
    def voltage(self) -> np.ndarray:
        return self.states[:, 2 * self.n_nodes:]

    def state_at(self, index: int) -> GridState:
        return GridState.from_vector(self.states[index])


def angular_velocity_stats(omega) -> tuple[float, float]:
    """Mean and population standard deviation of the angular velocities."""
    omega = np.asarray(omega, dtype=float)
    if omega.size == 0:
        raise ValueError("empty angular-velocity vector")
    mean = float(omega.mean())
    return mean, float(np.sqrt(((omega - mean) ** 2).mean()))


def psi_sync(state: GridState) -> float:
    """Synchronization constraint function: minus the spread of omega (<= 0)."""
    _, sigma = angular_velocity_stats(state.angular_velocity)
    return -sigma


def psi_mean_omega(state: GridState, spec: ConstraintSpec) -> float:
    """Positive while the mean angular velocity stays inside its band."""
    mean, _ = angular_velocity_stats(state.angular_velocity)
    return (spec.omega_max - mean) * (mean - spec.omega_min)


def psi_voltage(state: GridState, spec: ConstraintSpec, node: int) -> float:
    """Positive while the voltage at ``node`` stays inside its band."""
    if not 0 <= node < state.n_nodes:
        raise IndexError(f"node {node} out of range")
    v = state.voltage[node]
    return float((spec.v_max[node] - v) * (v - spec.v_min[node]))


def sample_losses(traj: Trajectory, spec: ConstraintSpec) -> np.ndarray:
    """min(0, psi_eta)^2 at each sample; shape (n_samples, N+2)."""
    n = traj.n_nodes
    om = traj.omega
    v = traj.voltage
    mean = om.mean(axis=1)
    out = np.empty((traj.times.size, spec.n_constraints))
    out[:, 0] = ((om - mean[:, None]) ** 2).mean(axis=1)  # sigma^2: psi_1 <= 0 always
    psi2 = (spec.omega_max - mean) * (mean - spec.omega_min)
    out[:, 1] = np.minimum(0.0, psi2) ** 2
    psiv = (spec.v_max[None, :] - v) * (v - spec.v_min[None, :])
    out[:, 2:] = np.minimum(0.0, psiv) ** 2
    return out


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    """Composite-trapezoid quadrature weights for a sample grid."""
    d = np.diff(times)
    w = np.zeros(times.size)
    w[0] = d[0] / 2
    w[-1] = d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    return w


def constraint_losses(traj: Trajectory, spec: ConstraintSpec) -> np.ndarray:
    """All N+2 losses: trapezoid of the squared hinge plus the terminal term."""
    losses = sample_losses(traj, spec)
    w = trapezoid_weights(traj.times)
    return w @ losses + spec.terminal_weights * losses[-1]


def constraint_loss(traj: Trajectory, spec: ConstraintSpec, eta: int) -> float:
    """Loss C_eta for one constraint, eta in 1..N+2."""
    if not 1 <= eta <= spec.n_constraints:
        raise IndexError(f"eta must be in 1..{spec.n_constraints}, got {eta}")
    _check_span(traj, spec)
    return float(constraint_losses(traj, spec)[eta - 1])


def control_cost(traj: Trajectory) -> float:
    """J = integral of sum_i u_i^2, exact for the zero-order-hold controls.

    Each grid segment [t_s, t_{s+1}) contributes its held squared control
    times the segment length, so piecewise-constant schedules are integrated
    without quadrature error.
    """
    rate = (traj.controls[:-1] ** 2).sum(axis=1)
    return float(rate @ np.diff(traj.times))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    losses: np.ndarray
    tolerances: np.ndarray

    @property
    def margins(self) -> np.ndarray:
        return self.tolerances - self.losses

    def to_dict(self) -> dict:
        return {
            "feasible": bool(self.feasible),
            "constraints": [
                {"eta": i + 1, "loss": float(c), "tolerance": float(e),
                 "margin": float(e - c), "satisfied": bool(c <= e)}
                for i, (c, e) in enumerate(zip(self.losses, self.tolerances))
            ],
        }


def is_feasible(traj: Trajectory, spec: ConstraintSpec) -> FeasibilityReport:
    """Check C_eta <= eps_eta for every constraint."""
    _check_span(traj, spec)
    losses = constraint_losses(traj, spec)
    ok = bool(np.all(losses <= spec.tolerances))
    return FeasibilityReport(feasible=ok, losses=losses,
                             tolerances=spec.tolerances.copy())


def _check_span(traj: Trajectory, spec: ConstraintSpec):
    if abs(traj.times[-1] - spec.horizon) > 1e-9 * max(1.0, spec.horizon):
        raise ValueError(
            f"trajectory ends at t={traj.times[-1]}, expected horizon {spec.horizon}")
