"""Third-order networked synchronous-machine model.

Per node i the state is (theta_i, omega_i, V_i): rotor angle relative to the
grid reference, angular-velocity deviation from the synchronous reference
Omega = 2*pi*F, and normalized machine voltage. The network is lossless with a
symmetric susceptance matrix; exciter voltages are constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SteadyStateError(RuntimeError):
    """Newton iteration failed to reach the requested residual."""


def _as_float_array(value, n: int | None = None, name: str = "array") -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if n is not None:
        if arr.ndim == 0:
            arr = np.full(n, float(arr))
        elif arr.shape != (n,):
            raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    return arr


@dataclass(frozen=True)
class NetworkParameters:
    """Per-node machine constants plus the line susceptance matrix.

    All electrical quantities are in per unit; inertia and the transient time
    constant are in seconds (squared, for inertia). ``net_injection`` is
    mechanical power minus aggregate load, positive for net generation.
    """

    inertia: np.ndarray
    damping: np.ndarray
    exciter_voltage: np.ndarray
    transient_time: np.ndarray
    reactance: np.ndarray
    transient_reactance: np.ndarray
    susceptance: np.ndarray
    net_injection: np.ndarray
    nominal_frequency: float = 50.0

    def __post_init__(self):
        m = _as_float_array(self.inertia, None, "inertia")
        if m.ndim != 1 or m.size < 2:
            raise ValueError("need at least 2 nodes")
        n = m.size
        for name in ("inertia", "damping", "exciter_voltage", "transient_time",
                     "reactance", "transient_reactance", "net_injection"):
            arr = _as_float_array(getattr(self, name), n, name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        b = np.asarray(self.susceptance, dtype=float)
        if b.shape != (n, n):
            raise ValueError(f"susceptance must be {n}x{n}, got {b.shape}")
        if not np.array_equal(b, b.T):
            i, j = np.argwhere(b != b.T)[0]
            raise ValueError(
                f"susceptance must be symmetric: susceptance[{i}][{j}]={b[i, j]!r} "
                f"!= susceptance[{j}][{i}]={b[j, i]!r}")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "susceptance", b)
        if np.any(self.inertia <= 0):
            raise ValueError("inertia must be positive")
        if np.any(self.transient_time <= 0):
            raise ValueError("transient_time must be positive")
        if np.any(self.damping < 0):
            raise ValueError("damping must be non-negative")

    @property
    def n_nodes(self) -> int:
        return self.inertia.size

    @property
    def reference_angular_velocity(self) -> float:
        return 2.0 * math.pi * self.nominal_frequency


@dataclass(frozen=True)
class GridState:
    """State triple (angle, angular_velocity, voltage), each of length N."""

    angle: np.ndarray
    angular_velocity: np.ndarray
    voltage: np.ndarray

    def __post_init__(self):
        th = _as_float_array(self.angle, None, "angle")
        n = th.size
        for name in ("angle", "angular_velocity", "voltage"):
            arr = _as_float_array(getattr(self, name), n, name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return self.angle.size

    def as_vector(self) -> np.ndarray:
        """Pack as the 3N vector (theta, omega, V)."""
        return np.concatenate([self.angle, self.angular_velocity, self.voltage])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "GridState":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 3:
            raise ValueError(f"state vector length must be 3N, got {x.shape}")
        n = x.size // 3
        return cls(angle=x[:n], angular_velocity=x[n:2 * n], voltage=x[2 * n:])


@dataclass(frozen=True)
class DisturbanceProfile:
    """Piecewise-constant perturbation of the net power injection.

    ``temporary`` applies ``magnitude`` at ``node`` on [onset, onset+duration),
    ``persistent`` from onset onward, ``none`` is identically zero. ``custom``
    takes explicit right-continuous breakpoints: ``table_times`` (sorted) and
    ``table_values`` with one row of per-node values per breakpoint.
    """

    kind: str = "none"
    node: int = 0
    magnitude: float = -2.0
    onset: float = 10.0
    duration: float = 20.0
    table_times: np.ndarray | None = None
    table_values: np.ndarray | None = None

    _KINDS = ("none", "temporary", "persistent", "custom")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}, got {self.kind!r}")
        if self.kind == "custom":
            if self.table_times is None or self.table_values is None:
                raise ValueError("custom disturbance needs table_times and table_values")
            t = np.asarray(self.table_times, dtype=float)
            v = np.asarray(self.table_values, dtype=float)
            if t.ndim != 1 or v.ndim != 2 or v.shape[0] != t.size:
                raise ValueError("table_values must have one row per breakpoint")
            if np.any(np.diff(t) <= 0):
                raise ValueError("table_times must be strictly increasing")
            object.__setattr__(self, "table_times", t)
            object.__setattr__(self, "table_values", v)

    def breakpoints(self) -> np.ndarray:
        """Times where the profile jumps."""
        if self.kind == "none":
            return np.empty(0)
        if self.kind == "temporary":
            return np.array([self.onset, self.onset + self.duration])
        if self.kind == "persistent":
            return np.array([self.onset])
        return self.table_times.copy()

    def value_at(self, t: float, n_nodes: int) -> np.ndarray:
        """Per-node disturbance at time t (right-continuous at breakpoints)."""
        xi = np.zeros(n_nodes)
        if self.kind == "temporary":
            if self.onset <= t < self.onset + self.duration:
                xi[self.node] = self.magnitude
        elif self.kind == "persistent":
            if t >= self.onset:
                xi[self.node] = self.magnitude
        elif self.kind == "custom":
            if self.table_values.shape[1] != n_nodes:
                raise ValueError("custom table width does not match network size")
            k = np.searchsorted(self.table_times, t, side="right") - 1
            if k >= 0:
                xi[:] = self.table_values[k]
        return xi

    def shifted(self, new_breakpoints: np.ndarray) -> "DisturbanceProfile":
        """Copy with breakpoints replaced (used for grid alignment)."""
        if self.kind == "none":
            return self
        if self.kind == "temporary":
            return DisturbanceProfile(kind=self.kind, node=self.node,
                                      magnitude=self.magnitude,
                                      onset=new_breakpoints[0],
                                      duration=new_breakpoints[1] - new_breakpoints[0])
        if self.kind == "persistent":
            return DisturbanceProfile(kind=self.kind, node=self.node,
                                      magnitude=self.magnitude,
                                      onset=new_breakpoints[0], duration=self.duration)
        return DisturbanceProfile(kind="custom", node=self.node,
                                  magnitude=self.magnitude, onset=self.onset,
                                  duration=self.duration,
                                  table_times=new_breakpoints,
                                  table_values=self.table_values)


# ---------------------------------------------------------------------------
# dynamics

def rhs_vector(params: NetworkParameters, x: np.ndarray, u: np.ndarray,
               xi: np.ndarray) -> np.ndarray:
    """Right-hand side on packed 3N vectors. No validation: hot path."""
    n = params.n_nodes
    th = x[:n]
    om = x[n:2 * n]
    v = x[2 * n:]
    dth = th[:, None] - th[None, :]
    b_sin = params.susceptance * np.sin(dth)
    b_cos = params.susceptance * np.cos(dth)
    p_e = (b_sin * (v[:, None] * v[None, :])).sum(axis=1)
    i_d = b_cos @ v
    return np.concatenate([
        om,
        (params.net_injection + xi - p_e + u - params.damping * om) / params.inertia,
        (params.exciter_voltage - v
         + i_d * (params.reactance - params.transient_reactance)) / params.transient_time,
    ])


def electrical_power(params: NetworkParameters, state: GridState, node: int) -> float:
    """Electrical power drawn from the network at ``node``:
    sum_j B_ij sin(theta_i - theta_j) V_i V_j.
    """
    return float(electrical_power_all(params, state)[_check_node(params, node)])


def electrical_power_all(params: NetworkParameters, state: GridState) -> np.ndarray:
    _check_state(params, state)
    th, v = state.angle, state.voltage
    dth = th[:, None] - th[None, :]
    return (params.susceptance * np.sin(dth) * (v[:, None] * v[None, :])).sum(axis=1)


def armature_current(params: NetworkParameters, state: GridState, node: int) -> float:
    """Armature current at ``node``: sum_j B_ij cos(theta_i - theta_j) V_j."""
    return float(armature_current_all(params, state)[_check_node(params, node)])


def armature_current_all(params: NetworkParameters, state: GridState) -> np.ndarray:
    _check_state(params, state)
    th, v = state.angle, state.voltage
    dth = th[:, None] - th[None, :]
    return (params.susceptance * np.cos(dth)) @ v


def _check_node(params: NetworkParameters, node: int) -> int:
    if not 0 <= node < params.n_nodes:
        raise IndexError(f"node {node} out of range for N={params.n_nodes}")
    return node


def _check_state(params: NetworkParameters, state: GridState):
    if state.n_nodes != params.n_nodes:
        raise ValueError(f"state has {state.n_nodes} nodes, network has {params.n_nodes}")


def dynamics_rhs(params: NetworkParameters, state: GridState, control,
                 disturbance) -> GridState:
    """Time derivative (theta_dot, omega_dot, V_dot) of the third-order model.

    ``control`` and ``disturbance`` are per-node active-power adjustments u_i
    and net-injection perturbations xi_i. Returned in a GridState container.
    """
    _check_state(params, state)
    n = params.n_nodes
    u = _as_float_array(control, n, "control")
    xi = _as_float_array(disturbance, n, "disturbance")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(xi))):
        raise ValueError("control/disturbance must be finite")
    dx = rhs_vector(params, state.as_vector(), u, xi)
    return GridState.from_vector(dx)


def dynamics_jacobian(params: NetworkParameters, x: np.ndarray) -> np.ndarray:
    """Analytic Jacobian of rhs_vector with respect to the packed state."""
    n = params.n_nodes
    th = x[:n]
    v = x[2 * n:]
    dth = th[:, None] - th[None, :]
    b_sin = params.susceptance * np.sin(dth)
    b_cos = params.susceptance * np.cos(dth)
    vv = v[:, None] * v[None, :]

    dpe_dth = -b_cos * vv
    np.fill_diagonal(dpe_dth, 0.0)
    np.fill_diagonal(dpe_dth, -dpe_dth.sum(axis=1))
    dpe_dv = b_sin * v[:, None]
    np.fill_diagonal(dpe_dv, b_sin @ v)
    did_dth = b_sin * v[None, :]
    np.fill_diagonal(did_dth, 0.0)
    np.fill_diagonal(did_dth, -did_dth.sum(axis=1))
    did_dv = b_cos

    m = params.inertia
    t_do = params.transient_time
    dx_re = params.reactance - params.transient_reactance
    jac = np.zeros((3 * n, 3 * n))
    jac[:n, n:2 * n] = np.eye(n)
    jac[n:2 * n, :n] = -dpe_dth / m[:, None]
    jac[n:2 * n, n:2 * n] = np.diag(-params.damping / m)
    jac[n:2 * n, 2 * n:] = -dpe_dv / m[:, None]
    jac[2 * n:, :n] = did_dth * (dx_re / t_do)[:, None]
    jac[2 * n:, 2 * n:] = (did_dv * dx_re[:, None] - np.eye(n)) / t_do[:, None]
    return jac


def find_steady_state(params: NetworkParameters, initial_guess: GridState,
                      tol: float = 1e-8, max_iterations: int = 50) -> GridState:
    """Solve rhs = 0 with u = xi = 0 by damped Newton iteration.

    omega is fixed at zero and theta_1 is gauge-fixed to the guess value (the
    dynamics are invariant under a common angle shift, so the full Jacobian is
    singular regardless of damping). The node-1 power-balance residual is the
    dependent equation dropped from the square Newton system; the returned
    state is verified against the full right-hand side at ``tol``.
    """
    _check_state(params, initial_guess)
    n = params.n_nodes
    zeros = np.zeros(n)
    th = initial_guess.angle.copy()
    v = initial_guess.voltage.copy()

    def residual(th_, v_):
        x = np.concatenate([th_, zeros, v_])
        return rhs_vector(params, x, zeros, zeros), x

    f, x = residual(th, v)
    rows = np.concatenate([np.arange(n + 1, 2 * n), np.arange(2 * n, 3 * n)])
    cols = np.concatenate([np.arange(1, n), np.arange(2 * n, 3 * n)])
    for _ in range(max_iterations):
        norm = np.max(np.abs(f))
        if norm <= tol:
            return GridState(angle=th, angular_velocity=zeros, voltage=v)
        jac = dynamics_jacobian(params, x)[np.ix_(rows, cols)]
        try:
            step = np.linalg.solve(jac, -np.concatenate([f[n + 1:2 * n], f[2 * n:]]))
        except np.linalg.LinAlgError as exc:
            raise SteadyStateError(f"singular Newton system: {exc}") from exc
        alpha = 1.0
        for _ in range(40):
            th_try = th.copy()
            th_try[1:] += alpha * step[:n - 1]
            v_try = v + alpha * step[n - 1:]
            f_try, x_try = residual(th_try, v_try)
            if np.all(np.isfinite(f_try)) and np.max(np.abs(f_try)) < norm:
                th, v, f, x = th_try, v_try, f_try, x_try
                break
            alpha *= 0.5
        else:
            raise SteadyStateError(
                f"line search stalled at residual {norm:.3e} (tol {tol:.1e})")
    raise SteadyStateError(
        f"no convergence within {max_iterations} iterations "
        f"(residual {np.max(np.abs(f)):.3e}, tol {tol:.1e})")
