"""Three-tank plant construction and continuous-time truth simulation.

The plant is a cascade of three tanks: the pump feeds tank 1, each tank
drains into the next, and the level of tank 3 is measured. States are the
stored volumes x (levels are recovered as h = x / psi). A leak in tank 2
enters either as an additive fault flow along the direction F or, exactly
equivalently, as a modified drain coefficient in the state matrix.

Simulation uses fixed-step classical RK4 by default. Because the plant is
piecewise LTI (the input is piecewise constant and the leak switches on
once), an exact discretization per step is also available and serves as
the reference integrator in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DivergenceError, InvalidParameterError, SingularityError

__all__ = [
    "TankParams",
    "StateSpace",
    "PiecewiseConstantSignal",
    "FaultProfile",
    "Trajectory",
    "build_healthy",
    "build_faulty",
    "fault_flow",
    "simulate",
    "steady_state",
    "discretize_zoh",
    "benchmark_params",
]


@dataclass
class TankParams:
    """Physical parameters of the three-tank cascade.

    psi: cross-sectional areas, one per tank (m^2).
    delta: outflow coefficients, one per tank (m^2/s).
    delta_bar: leak coefficient of tank 2 (m^2/s); 0 means healthy.
    """

    psi: np.ndarray
    delta: np.ndarray
    delta_bar: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.delta = np.asarray(self.delta, dtype=float)
        self.delta_bar = float(self.delta_bar)
        if self.psi.shape != (3,) or self.delta.shape != (3,):
            raise InvalidParameterError("psi and delta must each hold 3 values")
        if not (np.isfinite(self.psi).all() and np.isfinite(self.delta).all()):
            raise InvalidParameterError("tank parameters must be finite")
        if np.any(self.psi <= 0.0) or np.any(self.delta <= 0.0):
            raise InvalidParameterError("areas and outflow coefficients must be positive")
        if not np.isfinite(self.delta_bar) or self.delta_bar < 0.0:
            raise InvalidParameterError("leak coefficient must be nonnegative")

    def levels(self, volumes):
        """Convert stored volumes to tank levels h = x / psi (read-only view)."""
        return np.asarray(volumes, dtype=float) / self.psi


@dataclass
class StateSpace:
    """Linear plant matrices (A, B, C) plus the fault entry direction F."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise InvalidParameterError("A must be square")
        if self.B.shape[0] != n or self.C.shape[1] != n or self.F.shape[0] != n:
            raise InvalidParameterError("B, C, F dimensions inconsistent with A")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    @property
    def q(self):
        return self.C.shape[0]


@dataclass
class PiecewiseConstantSignal:
    """Right-continuous staircase signal; the last value extends forever.

    Evaluation before the first breakpoint returns the first value, so a
    signal defined from t=0 behaves as expected for any nonnegative time.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.breakpoints.ndim != 1 or self.breakpoints.size == 0:
            raise InvalidParameterError("signal needs at least one breakpoint")
        if self.breakpoints.shape != self.values.shape:
            raise InvalidParameterError("one value per breakpoint required")
        if np.any(np.diff(self.breakpoints) <= 0.0):
            raise InvalidParameterError("breakpoints must be strictly increasing")

    def __call__(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        idx = np.clip(idx, 0, self.values.size - 1)
        return float(self.values[idx])

    def sample(self, times):
        """Vectorized evaluation over an array of times."""
        idx = np.searchsorted(self.breakpoints, np.asarray(times, dtype=float), side="right") - 1
        return self.values[np.clip(idx, 0, self.values.size - 1)]


@dataclass
class FaultProfile:
    """Leak description: onset time t_f and leak coefficient delta_bar.

    The fault flow is 0 before t_f and (delta_bar / psi2) * x2 afterwards.
    """

    t_f: float
    delta_bar: float

    def __post_init__(self):
        self.t_f = float(self.t_f)
        self.delta_bar = float(self.delta_bar)
        if not np.isfinite(self.delta_bar) or self.delta_bar < 0.0:
            raise InvalidParameterError("leak coefficient must be nonnegative")


@dataclass
class Trajectory:
    """Fixed-step simulation record. All arrays share the same length."""

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    inputs: np.ndarray
    fault_flows: np.ndarray


def benchmark_params(delta_bar=0.0):
    """Default tank parameter set: psi = (2, 1, 2), delta = (1, 1.5, 1)."""
    return TankParams(psi=(2.0, 1.0, 2.0), delta=(1.0, 1.5, 1.0), delta_bar=delta_bar)


def build_healthy(params):
    """Assemble (A, B, C, F) for the leak-free plant."""
    d1, d2, d3 = params.delta
    p1, p2, p3 = params.psi
    A = np.array(
        [
            [-d1 / p1, 0.0, 0.0],
            [d1 / p1, -d2 / p2, 0.0],
            [0.0, d2 / p2, -d3 / p3],
        ]
    )
    B = np.array([[1.0], [0.0], [0.0]])
    C = np.array([[0.0, 0.0, 1.0 / p3]])
    F = np.array([[0.0], [-1.0], [0.0]])
    return StateSpace(A, B, C, F)


def build_faulty(params):
    """Assemble the plant with the tank-2 leak folded into the state matrix."""
    ss = build_healthy(params)
    ss.A[1, 1] = -(params.delta[1] + params.delta_bar) / params.psi[1]
    return ss


def fault_flow(profile, params, x2, t):
    """Leak outflow at time t given the stored volume x2 of tank 2."""
    if t < profile.t_f:
        return 0.0
    return (profile.delta_bar / params.psi[1]) * x2


def discretize_zoh(A, B, dt):
    """Exact zero-order-hold discretization via the augmented exponential.

    Returns (Ad, Bd) such that x[k+1] = Ad x[k] + Bd u[k] reproduces the
    continuous solution exactly for inputs held constant over each step.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n = A.shape[0]
    p = B.shape[1]
    M = np.zeros((n + p, n + p))
    M[:n, :n] = A * dt
    M[:n, n:] = B * dt
    E = expm(M)
    return E[:n, :n], E[:n, n:]


def simulate(params, u, fault, x0, dt=1e-3, horizon=10.0, method="rk4"):
    """Integrate the truth plant on a fixed grid from t=0 to t=horizon.

    The input value and the leak-active flag are sampled at the start of
    each step and held across it. The leak activates at the first sample
    instant at or past t_f. With method="exact" each step applies the
    zero-order-hold discretization of the active piecewise-LTI dynamics,
    which is exact for this plant; "rk4" is the general-purpose default.
    """
    if dt <= 0.0 or horizon <= 0.0:
        raise InvalidParameterError("dt and horizon must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(3)
    if not np.isfinite(x0).all():
        raise InvalidParameterError("initial state must be finite")
    if method not in ("rk4", "exact"):
        raise InvalidParameterError(f"unknown integration method: {method!r}")

    ss = build_healthy(params)
    A = ss.A
    b = ss.B[:, 0]
    c = ss.C[0]
    fdir = ss.F[:, 0]
    if fault is None:
        t_f = np.inf
        leak = 0.0
    else:
        t_f = fault.t_f
        leak = fault.delta_bar / params.psi[1]

    nsteps = int(round(horizon / dt))
    times = np.arange(nsteps + 1) * dt
    states = np.empty((nsteps + 1, 3))
    states[0] = x0

    # Leak folded into the state matrix; identical to A x + F f with
    # f = leak * x2 evaluated from the instantaneous state.
    A_leak = A + np.outer(fdir, np.array([0.0, leak, 0.0]))

    if method == "exact":
        Ad0, Bd0 = discretize_zoh(A, b, dt)
        Ad1, Bd1 = discretize_zoh(A_leak, b, dt)

    x = x0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(nsteps):
            t_k = times[k]
            u_k = u(t_k)
            active = t_k >= t_f - 1e-12
            M = A_leak if active else A
            if method == "rk4":
                k1 = M @ x + b * u_k
                k2 = M @ (x + 0.5 * dt * k1) + b * u_k
                k3 = M @ (x + 0.5 * dt * k2) + b * u_k
                k4 = M @ (x + dt * k3) + b * u_k
                x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                if active:
                    x = Ad1 @ x + Bd1[:, 0] * u_k
                else:
                    x = Ad0 @ x + Bd0[:, 0] * u_k
            if not np.isfinite(x).all():
                raise DivergenceError(f"state became nonfinite at t={times[k + 1]:.6g}")
            states[k + 1] = x

    outputs = states @ c
    inputs = u.sample(times)
    if fault is None:
        flows = np.zeros(nsteps + 1)
    else:
        flows = np.where(times >= t_f - 1e-12, leak * states[:, 1], 0.0)
    return Trajectory(times=times, states=states, outputs=outputs, inputs=inputs, fault_flows=flows)


def steady_state(ss, u_const):
    """Equilibrium x* solving A x* + B u = 0 for a constant input."""
    rhs = -(ss.B[:, 0] * float(u_const))
    try:
        x = np.linalg.solve(ss.A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("state matrix is singular, no unique equilibrium") from exc
    return x
