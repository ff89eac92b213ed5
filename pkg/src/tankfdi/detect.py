"""Residual generation and threshold-based fault detection.

The fault-free output error of the observer obeys the error dynamics
exactly, so an analytic envelope on |eps(t)| follows from the modal
expansion of C exp(Gamma_d t) e_hat. Flipping every modal coefficient to
its absolute value gives a curve that can only over-bound the signed
response, and the first time the measured |eps| exceeds it is reported
as the detection instant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParameterError

__all__ = [
    "ThresholdCurve",
    "ResidualTrace",
    "DetectionReport",
    "residual",
    "build_threshold",
    "detect",
    "initial_error_bound",
]


@dataclass
class ThresholdCurve:
    """Decaying envelope eps_bar(t) = sum of c_i exp(p_i t), c_i >= 0.

    signed_modes keeps the raw modal coefficients (sign intact) for
    cross-checking against a matrix-exponential oracle; the detection
    decision only ever uses the conservative absolute-value form. When
    the error dynamics are defective the modal form is unavailable and
    evaluation falls back to a sampled matrix-exponential envelope.
    """

    modes: list
    e_hat: np.ndarray
    signed_modes: list = None
    sampled_fallback: object = field(default=None, repr=False)

    def __post_init__(self):
        self.e_hat = np.atleast_1d(np.asarray(self.e_hat, dtype=float))
        for coeff, pole in self.modes:
            if pole >= 0.0:
                raise InvalidParameterError("threshold poles must be strictly negative")
            if coeff < 0.0:
                raise InvalidParameterError("conservative coefficients must be nonnegative")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.sampled_fallback is not None:
            return self.sampled_fallback(t)
        out = np.zeros_like(t, dtype=float)
        for coeff, pole in self.modes:
            out = out + coeff * np.exp(pole * t)
        return out

    def signed(self, t):
        """Signed modal reconstruction of C exp(Gamma_d t) e_hat."""
        if self.signed_modes is None:
            raise InvalidParameterError("signed modes unavailable in fallback mode")
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t, dtype=float)
        for coeff, pole in self.signed_modes:
            out = out + coeff * np.exp(pole * t)
        return out


@dataclass
class ResidualTrace:
    """Output residual eps(t) = y(t) - yhat(t) on a fixed grid."""

    times: np.ndarray
    residuals: np.ndarray


@dataclass
class DetectionReport:
    """Outcome of comparing |eps| with the threshold curve."""

    detected: bool
    t_d: float
    margin_trace: np.ndarray
    t_f_configured: float = None


def residual(plant_traj, observer_traj):
    """Pointwise output residual between truth and observer trajectories."""
    if plant_traj.times.shape != observer_traj.times.shape or not np.array_equal(
        plant_traj.times, observer_traj.times
    ):
        raise InvalidParameterError("trajectories are on different time grids")
    eps = np.asarray(plant_traj.outputs, dtype=float) - np.asarray(observer_traj.outputs, dtype=float)
    return ResidualTrace(times=plant_traj.times, residuals=eps)


def initial_error_bound(x_lo, x_hi, xhat0):
    """Worst-case componentwise initial error for x0 inside a box.

    e_hat_i = max(x_hi_i - xhat0_i, xhat0_i - x_lo_i), the farthest the
    unknown initial state can sit from the observer's starting guess.
    """
    x_lo = np.atleast_1d(np.asarray(x_lo, dtype=float))
    x_hi = np.atleast_1d(np.asarray(x_hi, dtype=float))
    xhat0 = np.atleast_1d(np.asarray(xhat0, dtype=float))
    if np.any(x_lo > xhat0) or np.any(xhat0 > x_hi):
        raise InvalidParameterError("need x_lo <= xhat0 <= x_hi elementwise")
    return np.maximum(x_hi - xhat0, xhat0 - x_lo)


def build_threshold(Gamma_d, C, e_hat):
    """Modal envelope of the fault-free residual from the error dynamics.

    Eigendecomposition of Gamma_d splits C exp(Gamma_d t) e_hat into
    sum of c_i exp(p_i t); the conservative curve uses |c_i|. Modes are
    ordered slowest pole first. A defective (or complex-mode) Gamma_d
    has no real modal form, in which case the curve degrades to the
    pointwise worst-sign envelope sum_j |(C exp(Gamma_d t))_j| e_hat_j
    evaluated through the matrix exponential.
    """
    Gamma_d = np.atleast_2d(np.asarray(Gamma_d, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    e_hat = np.atleast_1d(np.asarray(e_hat, dtype=float))
    n = Gamma_d.shape[0]
    if C.shape != (1, n) or e_hat.shape != (n,):
        raise InvalidParameterError("C must be 1 x n and e_hat length n")

    vals, vecs = np.linalg.eig(Gamma_d)
    real_modes = np.max(np.abs(vals.imag)) <= 1e-9 * max(1.0, np.max(np.abs(vals)))
    well_conditioned = np.linalg.cond(vecs) < 1e8
    if real_modes and well_conditioned:
        left = (C @ vecs)[0]
        right = np.linalg.solve(vecs, e_hat)
        coeffs = (left * right).real
        poles = vals.real
        order = np.argsort(-poles)
        signed = [(float(coeffs[i]), float(poles[i])) for i in order]
        conservative = [(abs(c), p) for c, p in signed]
        return ThresholdCurve(modes=conservative, e_hat=e_hat, signed_modes=signed)

    row = np.abs(e_hat)

    def envelope(t):
        t = np.asarray(t, dtype=float)
        flat = np.ravel(t)
        out = np.array([(np.abs(C @ expm(Gamma_d * tk)) @ row).item() for tk in flat])
        return out.reshape(t.shape)

    return ThresholdCurve(modes=[], e_hat=e_hat, signed_modes=None, sampled_fallback=envelope)


def detect(res, thr, t_f_hint=None):
    """First threshold crossing of the absolute residual.

    The crossing instant is refined by linear interpolation between the
    bracketing samples of |eps(t)| - eps_bar(t) and rounded to 1e-4 s.
    """
    times = np.asarray(res.times, dtype=float)
    gap = np.abs(np.asarray(res.residuals, dtype=float)) - thr(times)
    margin = -gap
    above = np.flatnonzero(gap > 0.0)
    if above.size == 0:
        return DetectionReport(detected=False, t_d=None, margin_trace=margin, t_f_configured=t_f_hint)
    i = int(above[0])
    if i == 0:
        t_d = times[0]
    else:
        g0 = gap[i - 1]
        g1 = gap[i]
        t_d = times[i - 1] + (times[i] - times[i - 1]) * (-g0) / (g1 - g0)
    return DetectionReport(
        detected=True,
        t_d=round(float(t_d), 4),
        margin_trace=margin,
        t_f_configured=t_f_hint,
    )
