"""Information-form consensus filter over a bank of sensors.

Each sensor contributes an information pair (Theta^T R^-1 Theta,
Theta^T R^-1 y); the bank's averages H and z drive one common update of
the fused covariance and mean. With a single sensor the update is the
ordinary Kalman measurement update written in information form (the
matrix-inversion lemma links the two), which is the main correctness
anchor used in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SingularityError

__all__ = [
    "SensorNetwork",
    "ConsensusState",
    "fused_information",
    "consensus_update",
    "consensus_predict",
    "run_consensus",
]


@dataclass
class SensorNetwork:
    """Measurement matrices and noise covariances, one pair per sensor."""

    sensors: list

    def __post_init__(self):
        if len(self.sensors) < 1:
            raise InvalidParameterError("network needs at least one sensor")
        clean = []
        for Theta_i, R_i in self.sensors:
            Theta_i = np.atleast_2d(np.asarray(Theta_i, dtype=float))
            R_i = np.atleast_2d(np.asarray(R_i, dtype=float))
            if R_i.shape[0] != R_i.shape[1] or R_i.shape[0] != Theta_i.shape[0]:
                raise InvalidParameterError("sensor noise covariance shape mismatch")
            try:
                np.linalg.cholesky(R_i)
            except np.linalg.LinAlgError as exc:
                raise SingularityError("sensor noise covariance must be positive definite") from exc
            clean.append((Theta_i, R_i))
        self.sensors = clean

    @property
    def n(self):
        return len(self.sensors)


@dataclass
class ConsensusState:
    """Prior (xbar, P) and fused posterior (xm, Pk) of one recursion step."""

    xbar: np.ndarray
    P: np.ndarray
    Pk: np.ndarray
    xm: np.ndarray

    def __post_init__(self):
        self.xbar = np.atleast_1d(np.asarray(self.xbar, dtype=float))
        self.xm = np.atleast_1d(np.asarray(self.xm, dtype=float))
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        Pk = np.atleast_2d(np.asarray(self.Pk, dtype=float))
        self.P = 0.5 * (P + P.T)
        self.Pk = 0.5 * (Pk + Pk.T)


def fused_information(net):
    """Averaged information matrix H = (1/n) sum Theta^T R^-1 Theta."""
    H = 0.0
    for Theta_i, R_i in net.sensors:
        H = H + Theta_i.T @ np.linalg.solve(R_i, Theta_i)
    return H / net.n


def consensus_update(state, net, measurements, prior_scaling=1):
    """Fuse one measurement per sensor into the prior.

    The fused covariance solves Pk^-1 = (s P)^-1 + H where s is 1 or the
    sensor count (two published variants of the same recursion; s=1 is
    the default). The mean moves by Pk (z - H xbar) with z the averaged
    information vector.
    """
    if len(measurements) != net.n:
        raise InvalidParameterError("need exactly one measurement per sensor")
    if prior_scaling not in (1, "n"):
        raise InvalidParameterError("prior_scaling must be 1 or 'n'")
    s = float(net.n) if prior_scaling == "n" else 1.0
    H = fused_information(net)
    z = 0.0
    for (Theta_i, R_i), y_i in zip(net.sensors, measurements):
        y_i = np.atleast_1d(np.asarray(y_i, dtype=float))
        z = z + Theta_i.T @ np.linalg.solve(R_i, y_i)
    z = z / net.n

    try:
        prior_inv = np.linalg.inv(s * state.P)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("prior covariance is singular") from exc
    Pk = np.linalg.inv(prior_inv + H)
    Pk = 0.5 * (Pk + Pk.T)
    xm = state.xbar + Pk @ (z - H @ state.xbar)
    return ConsensusState(xbar=state.xbar, P=state.P, Pk=Pk, xm=xm)


def consensus_predict(state, model, u_k, include_input=True):
    """Propagate the fused posterior one step ahead.

    The input feedthrough B u is on by default; leaving it out
    reproduces the bare recursion some formulations print, at the cost
    of a bias whenever the plant is actually driven.
    """
    P_next = model.A_k @ state.Pk @ model.A_k.T + model.noise_gram()
    xbar_next = model.A_k @ state.xm
    if include_input:
        u_k = np.atleast_1d(np.asarray(u_k, dtype=float))
        xbar_next = xbar_next + model.B_k @ u_k
    return ConsensusState(xbar=xbar_next, P=0.5 * (P_next + P_next.T), Pk=state.Pk, xm=state.xm)


def run_consensus(model, net, x0_belief, inputs, measurements, prior_scaling=1, include_input=True):
    """Alternate update and predict over a measurement sequence.

    The recursion is update-then-predict, so the initial belief plays
    the prior for the first measurement: measurements[j] is the sensor
    tuple observed at sample j, and inputs[j] then drives the predicted
    mean from sample j to j+1. The returned list starts with the initial
    belief; entry k (k >= 1) holds the posterior at sample k-1 in xm/Pk
    and the forecast aimed at sample k in xbar/P.
    """
    xbar0, P0 = x0_belief
    inputs = list(inputs)
    measurements = list(measurements)
    if len(inputs) != len(measurements):
        raise InvalidParameterError("inputs and measurements must have equal length")
    state = ConsensusState(xbar=xbar0, P=P0, Pk=P0, xm=xbar0)
    states = [state]
    for u_k, y_k in zip(inputs, measurements):
        if not isinstance(y_k, (tuple, list)):
            y_k = (y_k,)
        state = consensus_update(state, net, list(y_k), prior_scaling=prior_scaling)
        state = consensus_predict(state, model, u_k, include_input=include_input)
        states.append(state)
    return states
