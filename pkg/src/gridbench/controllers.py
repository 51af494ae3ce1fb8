"""Distributed frequency-control laws evaluated online at integration steps.

Three laws: llf (proportional to the local angular velocity), ilf (integral of
the local angular velocity) and gab (gather-and-broadcast, integral of the
adjacency-summed angular velocities). The running integrals are accumulated
with the trapezoidal rule as samples arrive.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid_model import _as_float_array

LAWS = ("llf", "ilf", "gab", "none")


@dataclass(frozen=True)
class ControllerConfig:
    law: str = "none"
    llf_gain: np.ndarray | float = 1.0          # nu_i, 1/s
    ilf_gain: np.ndarray | float = 15.0         # kappa_i, 1/s^2
    gab_gain: np.ndarray | float = 60.0         # mu_i, 1/s^2
    adjacency: np.ndarray | None = None         # defaults to all-ones
    clamp: bool = True
    u_min: np.ndarray | float = -5.0
    u_max: np.ndarray | float = 5.0
    n_nodes: int = 4
    label: str = ""

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"law must be one of {LAWS}, got {self.law!r}")
        n = self.n_nodes
        for name in ("llf_gain", "ilf_gain", "gab_gain", "u_min", "u_max"):
            object.__setattr__(self, name, _as_float_array(getattr(self, name), n, name))
        gain = {"llf": self.llf_gain, "ilf": self.ilf_gain, "gab": self.gab_gain}.get(self.law)
        if gain is not None and np.any(gain <= 0):
            raise ValueError(f"{self.law} gain must be positive")
        adj = self.adjacency
        adj = np.ones((n, n)) if adj is None else np.asarray(adj, dtype=float)
        if adj.shape != (n, n):
            raise ValueError(f"adjacency must be {n}x{n}, got {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if not np.all(np.isin(adj, (0.0, 1.0))):
            raise ValueError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adjacency", adj)
        if not self.label:
            object.__setattr__(self, "label", self.law)

    def _clamped(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.u_min, self.u_max) if self.clamp else u


@dataclass(frozen=True)
class ControllerState:
    """Trapezoidal accumulator for the per-node integral of omega."""

    accumulated_integral: np.ndarray
    last_sample: np.ndarray
    last_time: float = 0.0

    @classmethod
    def initial(cls, n_nodes: int) -> "ControllerState":
        return cls(accumulated_integral=np.zeros(n_nodes),
                   last_sample=np.zeros(n_nodes), last_time=0.0)


def integral_step(state: ControllerState, t: float, omega: np.ndarray) -> ControllerState:
    """Advance the running integral of omega to time t (trapezoidal rule)."""
    if t < state.last_time:
        raise ValueError(f"time reversal: t={t} < last_time={state.last_time}")
    omega = np.asarray(omega, dtype=float)
    dt = t - state.last_time
    integral = state.accumulated_integral + dt * (omega + state.last_sample) / 2.0
    return replace(state, accumulated_integral=integral, last_sample=omega.copy(),
                   last_time=t)


def llf_control(config: ControllerConfig, omega: np.ndarray) -> np.ndarray:
    """u_i = -nu_i * omega_i."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (config.n_nodes,):
        raise ValueError(f"omega must have shape ({config.n_nodes},), got {omega.shape}")
    return config._clamped(-config.llf_gain * omega)


def ilf_control(config: ControllerConfig, state: ControllerState) -> np.ndarray:
    """u_i = -(1/kappa_i) * integral of omega_i."""
    return config._clamped(-state.accumulated_integral / config.ilf_gain)


def gab_control(config: ControllerConfig, state: ControllerState) -> np.ndarray:
    """u_i = -(1/mu_i) * sum_j A_ij * integral of omega_j.

    With the all-ones adjacency every node reacts to the summed network
    integral; with the identity adjacency this reduces to ilf_control when
    mu_i = kappa_i.
    """
    if config.adjacency.shape[0] != state.accumulated_integral.size:
        raise ValueError("adjacency dimension does not match controller state")
    return config._clamped(-(config.adjacency @ state.accumulated_integral)
                           / config.gab_gain)


def evaluate_control(config: ControllerConfig, state: ControllerState,
                     omega: np.ndarray) -> np.ndarray:
    """Dispatch on the configured law. ``state`` must already include the
    sample at the current time."""
    if config.law == "llf":
        return llf_control(config, omega)
    if config.law == "ilf":
        return ilf_control(config, state)
    if config.law == "gab":
        return gab_control(config, state)
    return np.zeros(config.n_nodes)
