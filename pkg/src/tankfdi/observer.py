"""Luenberger observer synthesis via the observable canonical form.

The gain is obtained the classical way: transform to the observable
canonical realization, match characteristic coefficients against the
desired pole polynomial to read off the canonical gain, then map back
through the similarity transform. For running the observer there are two
integrators: an RK4 loop driven by a sampled measurement stream (the
general form), and an exact joint propagation of plant plus observer as
one piecewise-LTI system (used where discretization bias must not leak
into residuals, which sit near 1e-5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .analysis import characteristic_polynomial, observability_matrix
from .errors import DivergenceError, InvalidParameterError, NotObservableError
from .model import StateSpace, Trajectory, build_faulty, build_healthy

__all__ = [
    "CanonicalRealization",
    "ObserverDesign",
    "canonical_form",
    "place_observer_poles",
    "run_luenberger",
    "co_simulate",
]


@dataclass
class CanonicalRealization:
    """Observable canonical realization and the transform that produced it."""

    A_o: np.ndarray
    B_o: np.ndarray
    C_o: np.ndarray
    Qbar_O: np.ndarray
    Delta: np.ndarray


@dataclass
class ObserverDesign:
    """Observer gain in canonical and physical coordinates."""

    desired_poles: np.ndarray
    Psi_o: np.ndarray
    Psi: np.ndarray
    Gamma_d: np.ndarray


def canonical_form(ss):
    """Observable canonical realization of (A, B, C).

    A_o carries ones on the subdiagonal and the negated characteristic
    coefficients (constant term first) in its last column; C_o is the
    last unit row. Delta maps canonical coordinates to physical ones,
    x = Delta x_o, computed as inv(Q_O) Qbar_O from the two
    observability matrices.
    """
    rep = observability_matrix(ss)
    if not rep.full_rank:
        raise NotObservableError("pair (A, C) is not observable, canonical form undefined")
    n = ss.n
    eta = characteristic_polynomial(ss.A).coeffs
    A_o = np.zeros((n, n))
    A_o[np.arange(1, n), np.arange(n - 1)] = 1.0
    A_o[:, -1] = -eta[::-1][:n]
    C_o = np.zeros((1, n))
    C_o[0, -1] = 1.0
    canon = StateSpace(A_o, np.zeros((n, 1)), C_o, np.zeros((n, 1)))
    Qbar_O = observability_matrix(canon).matrix
    Delta = np.linalg.solve(rep.matrix, Qbar_O)
    B_o = np.linalg.solve(Delta, ss.B)
    return CanonicalRealization(A_o=A_o, B_o=B_o, C_o=C_o, Qbar_O=Qbar_O, Delta=Delta)


def place_observer_poles(ss, desired):
    """Observer gain Psi assigning the given eigenvalues to A - Psi C.

    The desired set must be closed under conjugation so the gain is
    real. In canonical coordinates the gain components are plain
    coefficient differences between the desired polynomial and the
    open-loop characteristic polynomial (constant term first); Psi is
    that vector mapped back by Delta.
    """
    desired = np.atleast_1d(np.asarray(desired, dtype=complex))
    if desired.size != ss.n:
        raise InvalidParameterError(f"need exactly {ss.n} desired poles")
    alpha = np.poly(desired)
    if np.max(np.abs(alpha.imag)) > 1e-9 * max(1.0, np.max(np.abs(alpha))):
        raise InvalidParameterError("desired poles must be closed under conjugation")
    alpha = alpha.real

    canon = canonical_form(ss)
    eta = characteristic_polynomial(ss.A).coeffs
    # Constant coefficient first: Psi_o[i] multiplies the i-th canonical state.
    Psi_o = alpha[::-1][: ss.n] - eta[::-1][: ss.n]
    Psi = canon.Delta @ Psi_o
    Gamma_d = ss.A - np.outer(Psi, ss.C[0])
    return ObserverDesign(desired_poles=desired, Psi_o=Psi_o, Psi=Psi, Gamma_d=Gamma_d)


def run_luenberger(ss, Psi, u, y_stream, xhat0, dt):
    """Integrate the observer copy against a sampled measurement stream.

    dxhat/dt = A xhat + B u + Psi (y - C xhat), RK4 with the input value
    and the measurement held constant across each step (sampled at the
    step start), matching the truth integrator's convention.
    """
    if dt <= 0.0:
        raise InvalidParameterError("dt must be positive")
    y_stream = np.asarray(y_stream, dtype=float)
    if y_stream.ndim != 1 or y_stream.size < 2:
        raise InvalidParameterError("y_stream must be a 1-D series with at least two samples")
    Psi = np.asarray(Psi, dtype=float).reshape(ss.n)
    xhat0 = np.asarray(xhat0, dtype=float).reshape(ss.n)

    A = ss.A
    b = ss.B[:, 0]
    c = ss.C[0]
    nsteps = y_stream.size - 1
    times = np.arange(nsteps + 1) * dt
    states = np.empty((nsteps + 1, ss.n))
    states[0] = xhat0

    x = xhat0.copy()
    for k in range(nsteps):
        u_k = u(times[k])
        y_k = y_stream[k]

        def deriv(z):
            return A @ z + b * u_k + Psi * (y_k - c @ z)

        k1 = deriv(x)
        k2 = deriv(x + 0.5 * dt * k1)
        k3 = deriv(x + 0.5 * dt * k2)
        k4 = deriv(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(x).all():
            raise DivergenceError(f"observer state became nonfinite at t={times[k + 1]:.6g}")
        states[k + 1] = x

    outputs = states @ c
    inputs = u.sample(times)
    return Trajectory(
        times=times,
        states=states,
        outputs=outputs,
        inputs=inputs,
        fault_flows=np.zeros(nsteps + 1),
    )


def co_simulate(params, Psi, u, fault, x0, xhat0, dt=1e-3, horizon=10.0):
    """Propagate plant and observer jointly, exactly, on one fixed grid.

    The stacked system z = (x, xhat) is LTI on each segment (input
    constant, leak either off or on), so a zero-order-hold exponential
    per regime integrates it without discretization error. The observer
    sees y = C x continuously inside each step instead of a held sample;
    this keeps the fault-free output error on its ideal decay all the
    way down to roundoff, which matters because detection thresholds
    live around 1e-5.

    Returns (truth, estimate) Trajectory pairs on the same grid.
    """
    if dt <= 0.0 or horizon <= 0.0:
        raise InvalidParameterError("dt and horizon must be positive")
    healthy = build_healthy(params)
    A = healthy.A
    b = healthy.B[:, 0]
    c = healthy.C[0]
    Psi = np.asarray(Psi, dtype=float).reshape(3)
    x0 = np.asarray(x0, dtype=float).reshape(3)
    xhat0 = np.asarray(xhat0, dtype=float).reshape(3)

    if fault is None:
        t_f = np.inf
        A_fault = A
    else:
        t_f = fault.t_f
        faulty_params = type(params)(params.psi, params.delta, fault.delta_bar)
        A_fault = build_faulty(faulty_params).A

    Gamma_d = A - np.outer(Psi, c)
    PsiC = np.outer(Psi, c)

    def joint(Ap):
        M = np.zeros((6, 6))
        M[:3, :3] = Ap
        M[3:, :3] = PsiC
        M[3:, 3:] = Gamma_d
        return M

    def zoh(M):
        G = np.zeros((7, 7))
        G[:6, :6] = M * dt
        G[:6, 6] = np.concatenate([b, b]) * dt
        E = expm(G)
        return E[:6, :6], E[:6, 6]

    Ad_h, Bd_h = zoh(joint(A))
    Ad_f, Bd_f = zoh(joint(A_fault))

    nsteps = int(round(horizon / dt))
    times = np.arange(nsteps + 1) * dt
    Z = np.empty((nsteps + 1, 6))
    Z[0, :3] = x0
    Z[0, 3:] = xhat0
    z = Z[0].copy()
    for k in range(nsteps):
        if times[k] >= t_f - 1e-12:
            z = Ad_f @ z + Bd_f * u(times[k])
        else:
            z = Ad_h @ z + Bd_h * u(times[k])
        if not np.isfinite(z).all():
            raise DivergenceError(f"joint state became nonfinite at t={times[k + 1]:.6g}")
        Z[k + 1] = z

    inputs = u.sample(times)
    leak = 0.0 if fault is None else fault.delta_bar / params.psi[1]
    flows = np.where(times >= t_f - 1e-12, leak * Z[:, 1], 0.0) if fault is not None else np.zeros(nsteps + 1)
    truth = Trajectory(times=times, states=Z[:, :3], outputs=Z[:, :3] @ c, inputs=inputs, fault_flows=flows)
    estimate = Trajectory(
        times=times,
        states=Z[:, 3:],
        outputs=Z[:, 3:] @ c,
        inputs=inputs,
        fault_flows=np.zeros(nsteps + 1),
    )
    return truth, estimate
