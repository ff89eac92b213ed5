"""Adaptive-scaling Kalman filter in discrete time.

A standard predict/update recursion where the process-noise term of the
predicted covariance carries a nonnegative multiplier phi. After each
prediction the squared innovation is decomposed against the two parts of
the innovation covariance (state part beta, noise part gamma) and phi is
re-fit from the mismatch, so the filter inflates or discounts process
noise on the fly. With weights a=1, b=c=0 the multiplier stays at phi0
and the recursion is an ordinary Kalman filter.

Update ordering per step: predict and measurement-update both use the
multiplier carried in from the previous step; the re-fitted multiplier
takes effect in the next prediction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SingularityError, UnsupportedShapeError

__all__ = [
    "DiscreteModel",
    "ScalingParams",
    "FilterState",
    "InnovationParts",
    "predict",
    "innovation_decomposition",
    "update_scaling",
    "update",
    "run_askf",
]


@dataclass
class DiscreteModel:
    """Discrete-time model (A, B, Theta, Q, R) shared by both filters.

    B is the channel for both the known input and the process noise, so
    Q is sized by B's column count. R must be positive definite.
    """

    A_k: np.ndarray
    B_k: np.ndarray
    Theta_k: np.ndarray
    Q_k: np.ndarray
    R_k: np.ndarray

    def __post_init__(self):
        self.A_k = np.atleast_2d(np.asarray(self.A_k, dtype=float))
        self.B_k = np.atleast_2d(np.asarray(self.B_k, dtype=float))
        self.Theta_k = np.atleast_2d(np.asarray(self.Theta_k, dtype=float))
        self.Q_k = np.atleast_2d(np.asarray(self.Q_k, dtype=float))
        self.R_k = np.atleast_2d(np.asarray(self.R_k, dtype=float))
        n = self.A_k.shape[0]
        if self.A_k.shape != (n, n):
            raise InvalidParameterError("A_k must be square")
        if self.B_k.shape[0] != n or self.Theta_k.shape[1] != n:
            raise InvalidParameterError("B_k or Theta_k dimensions inconsistent with A_k")
        p = self.B_k.shape[1]
        q = self.Theta_k.shape[0]
        if self.Q_k.shape != (p, p) or self.R_k.shape != (q, q):
            raise InvalidParameterError("Q_k or R_k dimensions inconsistent")
        if not np.allclose(self.Q_k, self.Q_k.T, atol=1e-12):
            raise InvalidParameterError("Q_k must be symmetric")
        if np.min(np.linalg.eigvalsh(self.Q_k)) < -1e-12:
            raise InvalidParameterError("Q_k must be positive semidefinite")
        try:
            np.linalg.cholesky(self.R_k)
        except np.linalg.LinAlgError as exc:
            raise InvalidParameterError("R_k must be positive definite") from exc

    @property
    def n(self):
        return self.A_k.shape[0]

    @property
    def p(self):
        return self.B_k.shape[1]

    @property
    def q(self):
        return self.Theta_k.shape[0]

    def noise_gram(self):
        """B Q B^T, the process-noise contribution per unit of scaling."""
        return self.B_k @ self.Q_k @ self.B_k.T


@dataclass
class ScalingParams:
    """Convex weights of the scaling recursion plus the initial value."""

    a: float
    b: float
    c: float
    phi0: float = 1.0

    def __post_init__(self):
        self.a = float(self.a)
        self.b = float(self.b)
        self.c = float(self.c)
        self.phi0 = float(self.phi0)
        if min(self.a, self.b, self.c) < 0.0:
            raise InvalidParameterError("scaling weights must be nonnegative")
        if abs(self.a + self.b + self.c - 1.0) > 1e-12:
            raise InvalidParameterError("scaling weights must sum to 1")
        if self.phi0 < 0.0:
            raise InvalidParameterError("initial scaling must be nonnegative")


@dataclass
class FilterState:
    """Posterior estimate, covariance, scaling value, and step index."""

    xhat: np.ndarray
    P: np.ndarray
    phi: float
    k: int = 0

    def __post_init__(self):
        self.xhat = np.atleast_1d(np.asarray(self.xhat, dtype=float))
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        self.P = 0.5 * (P + P.T)
        self.phi = float(self.phi)
        if self.phi < 0.0:
            raise InvalidParameterError("scaling must be nonnegative")
        if np.min(np.linalg.eigvalsh(self.P)) < -1e-10:
            raise InvalidParameterError("covariance must be PSD up to roundoff")


@dataclass
class InnovationParts:
    """Split of the innovation covariance alpha = beta + gamma.

    beta carries the propagated state uncertainty plus R; gamma is the
    scaled process-noise share, gamma = phi * gamma_unit. When
    gamma_unit vanishes the innovation says nothing about the process
    noise and the scaling recursion cannot be identified.
    """

    alpha: float
    beta: float
    gamma: float
    gamma_unit: float
    scaling_identifiable: bool


def predict(state, model, u_k):
    """Time update: mean through the model, covariance with scaled noise."""
    u_k = np.atleast_1d(np.asarray(u_k, dtype=float))
    xpred = model.A_k @ state.xhat + model.B_k @ u_k
    Ppred = model.A_k @ state.P @ model.A_k.T + state.phi * model.noise_gram()
    return xpred, Ppred


def innovation_decomposition(state, model):
    """Split the innovation covariance into state and noise shares.

    Scalar-measurement pathway: the scaling update divides by the
    per-unit noise share, so q must be 1 here.
    """
    if model.q != 1:
        raise UnsupportedShapeError("scaling decomposition requires a scalar measurement")
    Th = model.Theta_k
    APA = model.A_k @ state.P @ model.A_k.T
    beta = float((Th @ APA @ Th.T)[0, 0] + model.R_k[0, 0])
    gamma_unit = float((Th @ model.noise_gram() @ Th.T)[0, 0])
    gamma = state.phi * gamma_unit
    return InnovationParts(
        alpha=beta + gamma,
        beta=beta,
        gamma=gamma,
        gamma_unit=gamma_unit,
        scaling_identifiable=gamma_unit > 0.0,
    )


def update_scaling(params, phi_prev, nu_k, beta, gamma_unit):
    """Re-fit the scaling multiplier from the squared innovation.

    ups = a phi0 + b phi_prev + c (nu^2 - beta) / gamma_unit, clipped at
    zero. A squared innovation matching the predicted innovation
    covariance exactly (within 1e-9 relative) takes the consistency
    branch ups = a phi0 + (b + c) phi_prev instead. A nonpositive
    gamma_unit leaves nothing to identify: the multiplier is frozen.
    """
    nu2 = float(np.square(np.atleast_1d(np.asarray(nu_k, dtype=float))[0]))
    if gamma_unit <= 0.0:
        warnings.warn(
            "process noise is invisible in the output; scaling frozen",
            RuntimeWarning,
            stacklevel=2,
        )
        return phi_prev
    alpha = beta + phi_prev * gamma_unit
    if abs(nu2 - alpha) <= 1e-9 * alpha:
        ups = params.a * params.phi0 + (params.b + params.c) * phi_prev
    else:
        ups = params.a * params.phi0 + params.b * phi_prev
        if params.c > 0.0:
            ups += params.c * (nu2 - beta) / gamma_unit
    return max(ups, 0.0)


def update(state, model, xpred, Ppred, y_k, phi=None):
    """Measurement update with the usual gain; covariance re-symmetrized.

    phi, when given, is stored in the returned state (the value to carry
    into the next prediction); otherwise the previous value is kept.
    """
    y_k = np.atleast_1d(np.asarray(y_k, dtype=float))
    Th = model.Theta_k
    Pbar = Th @ Ppred @ Th.T + model.R_k
    try:
        K = np.linalg.solve(Pbar.T, (Ppred @ Th.T).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularityError("innovation covariance is singular") from exc
    nu = y_k - Th @ xpred
    xhat = xpred + K @ nu
    P = (np.eye(model.n) - K @ Th) @ Ppred
    return FilterState(
        xhat=xhat,
        P=0.5 * (P + P.T),
        phi=state.phi if phi is None else phi,
        k=state.k + 1,
    )


def run_askf(model, params, x0_belief, inputs, measurements):
    """Filter a measurement sequence, returning all states incl. the prior.

    inputs[j] drives the transition from sample j to j+1; measurements[j]
    is the observation at sample j+1. The returned list has one more
    entry than the sequences: element 0 is the initial belief.
    """
    xbar0, P0 = x0_belief
    inputs = list(inputs)
    measurements = list(measurements)
    if len(inputs) != len(measurements):
        raise InvalidParameterError("inputs and measurements must have equal length")
    state = FilterState(xhat=xbar0, P=P0, phi=params.phi0, k=0)
    states = [state]
    for u_k, y_k in zip(inputs, measurements):
        xpred, Ppred = predict(state, model, u_k)
        parts = innovation_decomposition(state, model)
        nu = np.atleast_1d(np.asarray(y_k, dtype=float)) - model.Theta_k @ xpred
        phi_next = update_scaling(params, state.phi, nu, parts.beta, parts.gamma_unit)
        state = update(state, model, xpred, Ppred, y_k, phi=phi_next)
        states.append(state)
    return states
