"""Fixed-step RK4 integration of the grid model over [0, T].

The horizon is divided into ``macro_steps`` control intervals; controls are
zero-order-hold on each interval (sampled controllers and open-loop schedules
share this convention). Each interval is integrated with ``substeps`` classical
RK4 steps, and the trajectory records every substep boundary, so the macro
grid is a subset of the stored samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .controllers import ControllerConfig, ControllerState, evaluate_control, integral_step
from .grid_model import DisturbanceProfile, GridState, NetworkParameters, rhs_vector
from .metrics import Trajectory


class IntegrationBlowUpError(RuntimeError):
    """State left the finite range during integration."""


@dataclass(frozen=True)
class IntegrationConfig:
    horizon: float = 60.0
    macro_steps: int = 1500
    substeps: int = 2
    breakpoint_alignment: bool = True

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.macro_steps < 1 or self.substeps < 1:
            raise ValueError("macro_steps and substeps must be >= 1")

    @property
    def macro_dt(self) -> float:
        return self.horizon / self.macro_steps

    @property
    def substep_dt(self) -> float:
        return self.macro_dt / self.substeps

    @property
    def n_samples(self) -> int:
        return self.macro_steps * self.substeps + 1

    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_samples)

    @classmethod
    def paper_scale(cls) -> "IntegrationConfig":
        """n_p = 1500 partition used for the reported loss values."""
        return cls(macro_steps=1500, substeps=2)

    @classmethod
    def desk_scale(cls) -> "IntegrationConfig":
        """Coarse partition for interactive work and the optimal-control solve.

        Four substeps keep the RK4 step at 0.05 s; the fastest voltage mode of
        the default network (|lambda| ~ 32 1/s) is unstable at 0.1 s steps.
        """
        return cls(macro_steps=300, substeps=4)


def rk4_step(rhs, state: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``rhs(t, state)``; O(dt^5) local error."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = rhs(t, state)
    k2 = rhs(t + dt / 2, state + (dt / 2) * k1)
    k3 = rhs(t + dt / 2, state + (dt / 2) * k2)
    k4 = rhs(t + dt, state + dt * k3)
    out = state + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationBlowUpError(f"non-finite state after step at t={t}")
    return out


def aligned_disturbance(disturbance: DisturbanceProfile, icfg: IntegrationConfig,
                        ) -> DisturbanceProfile:
    """Snap the disturbance breakpoints onto the substep grid.

    A no-op when they already coincide (the default onset 10 s / offset 30 s
    land exactly on every grid whose substep divides 10). Keeps any RK4 step
    from straddling a jump in xi.
    """
    bps = disturbance.breakpoints()
    if bps.size == 0:
        return disturbance
    h = icfg.substep_dt
    snapped = np.round(bps / h) * h
    if np.array_equal(snapped, bps):
        return disturbance
    return disturbance.shifted(snapped)


def disturbance_table(disturbance: DisturbanceProfile, icfg: IntegrationConfig,
                      n_nodes: int) -> np.ndarray:
    """xi per substep, sampled at segment midpoints; shape (K, N).

    Midpoint sampling makes each RK4 step see a constant xi, which is exact
    once breakpoints are grid-aligned.
    """
    k_total = icfg.macro_steps * icfg.substeps
    h = icfg.substep_dt
    out = np.zeros((k_total, n_nodes))
    bps = disturbance.breakpoints()
    if bps.size == 0:
        return out
    for s in range(k_total):
        out[s] = disturbance.value_at((s + 0.5) * h, n_nodes)
    return out


def _integrate(params: NetworkParameters, initial: GridState,
               disturbance: DisturbanceProfile, icfg: IntegrationConfig,
               control_for_interval) -> Trajectory:
    """Shared macro-step loop; ``control_for_interval(k, x)`` yields the held u."""
    if initial.n_nodes != params.n_nodes:
        raise ValueError("initial state does not match network size")
    n = params.n_nodes
    if icfg.breakpoint_alignment:
        disturbance = aligned_disturbance(disturbance, icfg)
    xi_mid = disturbance_table(disturbance, icfg, n)

    k_total = icfg.macro_steps * icfg.substeps
    times = icfg.sample_times()
    states = np.empty((k_total + 1, 3 * n))
    controls = np.empty((k_total + 1, n))
    h = icfg.substep_dt
    x = initial.as_vector()
    states[0] = x
    s = 0
    for k in range(icfg.macro_steps):
        u = control_for_interval(k, x)
        for _ in range(icfg.substeps):
            xi = xi_mid[s]
            k1 = rhs_vector(params, x, u, xi)
            k2 = rhs_vector(params, x + (h / 2) * k1, u, xi)
            k3 = rhs_vector(params, x + (h / 2) * k2, u, xi)
            k4 = rhs_vector(params, x + h * k3, u, xi)
            x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            controls[s] = u
            s += 1
            states[s] = x
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowUpError(
                f"state blew up in interval {k} (t ~ {times[s]:.3f} s)")
    controls[k_total] = controls[k_total - 1]
    xi_samples = np.array([disturbance.value_at(t, n) for t in times])
    return Trajectory(times=times, states=states, controls=controls,
                      disturbances=xi_samples)


def integrate_closed_loop(params: NetworkParameters, initial: GridState,
                          disturbance: DisturbanceProfile,
                          controller: ControllerConfig,
                          icfg: IntegrationConfig) -> Trajectory:
    """Run the feedback loop: at each macro boundary the controller samples
    omega, updates its trapezoidal integral, and emits a control held constant
    over the next interval."""
    n = params.n_nodes
    ctrl_state = ControllerState.initial(n)

    def control_for_interval(k: int, x: np.ndarray) -> np.ndarray:
        nonlocal ctrl_state
        omega = x[n:2 * n]
        if k > 0:
            ctrl_state = integral_step(ctrl_state, k * icfg.macro_dt, omega)
        else:
            ctrl_state = ControllerState(accumulated_integral=np.zeros(n),
                                         last_sample=omega.copy(), last_time=0.0)
        return evaluate_control(controller, ctrl_state, omega)

    return _integrate(params, initial, disturbance, icfg, control_for_interval)


def integrate_open_loop(params: NetworkParameters, initial: GridState,
                        disturbance: DisturbanceProfile, schedule,
                        icfg: IntegrationConfig) -> Trajectory:
    """Integrate with controls read from a piecewise-constant schedule whose
    partition must coincide with the macro grid."""
    macro_times = np.linspace(0.0, icfg.horizon, icfg.macro_steps + 1)
    if schedule.partition.size != macro_times.size or \
            not np.allclose(schedule.partition, macro_times, rtol=0, atol=1e-9):
        raise ValueError(
            f"schedule partition ({schedule.partition.size - 1} intervals) does not "
            f"match the macro grid ({icfg.macro_steps} intervals)")
    values = schedule.values

    return _integrate(params, initial, disturbance, icfg,
                      lambda k, x: values[k])


TRAJECTORY_BASE_COLUMNS = ("theta", "omega", "freq", "V", "u", "xi")


def trajectory_header(n_nodes: int) -> list[str]:
    cols = ["t"]
    for base in TRAJECTORY_BASE_COLUMNS:
        cols += [f"{base}_{i + 1}" for i in range(n_nodes)]
    cols += ["mean_omega", "sigma_omega"]
    return cols


def write_trajectory_csv(traj: Trajectory, params: NetworkParameters, path):
    """Emit the sample grid as CSV (17 significant digits, '.' decimal)."""
    n = traj.n_nodes
    f_nom = params.nominal_frequency
    om = traj.omega
    mean = om.mean(axis=1)
    sigma = np.sqrt(((om - mean[:, None]) ** 2).mean(axis=1))
    freq = f_nom + om / (2 * math.pi)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(n))
        for s in range(traj.times.size):
            row = [traj.times[s], *traj.angle[s], *om[s], *freq[s],
                   *traj.voltage[s], *traj.controls[s], *traj.disturbances[s],
                   mean[s], sigma[s]]
            writer.writerow([f"{v:.17g}" for v in row])
