"""Structural and stability analysis for small dense LTI systems.

Characteristic polynomials come from the Faddeev-LeVerrier recursion,
which also yields the adjugate polynomial matrices needed to form SISO
transfer functions without any symbolic algebra. Eigenvalues are the
roots of that polynomial (companion-matrix QR via numpy.roots), which is
perfectly adequate in the n <= 8 regime this module targets and keeps the
pole computation on an independent path from numpy.linalg.eig used
elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, UnsupportedShapeError

__all__ = [
    "Polynomial",
    "TransferFunction",
    "RankReport",
    "characteristic_polynomial",
    "eigenvalues",
    "transfer_function",
    "controllability_matrix",
    "observability_matrix",
    "is_asymptotically_stable",
]

_MAX_DENSE_N = 8


@dataclass
class Polynomial:
    """Real polynomial, coefficients stored highest degree first."""

    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))

    @property
    def degree(self):
        return self.coeffs.size - 1

    def __call__(self, s):
        return np.polyval(self.coeffs, s)


@dataclass
class TransferFunction:
    """SISO rational function numerator/denominator, denominator monic."""

    numerator: Polynomial
    denominator: Polynomial

    def __post_init__(self):
        if self.numerator.coeffs.size >= self.denominator.coeffs.size:
            raise UnsupportedShapeError("transfer function must be strictly proper")

    def __call__(self, s):
        return self.numerator(s) / self.denominator(s)


@dataclass
class RankReport:
    """Numerical rank of a structural test matrix plus the cutoff used."""

    matrix: np.ndarray
    rank: int
    full_rank: bool
    tolerance: float


def _faddeev_leverrier(M):
    """Characteristic coefficients and adjugate matrices of a square M.

    Returns (coeffs, aux, remainder): coeffs are the monic characteristic
    polynomial coefficients highest degree first; aux[j] is the matrix
    coefficient of s^(n-1-j) in adj(sI - M); remainder is the final
    recursion matrix, zero up to roundoff by Cayley-Hamilton.
    """
    n = M.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    aux = []
    Bk = np.eye(n)
    for k in range(1, n + 1):
        aux.append(Bk)
        AB = M @ Bk
        ck = -np.trace(AB) / k
        coeffs[k] = ck
        Bk = AB + ck * np.eye(n)
    return coeffs, aux, Bk


def _as_square(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    if M.shape != (n, n):
        raise UnsupportedShapeError("matrix must be square")
    if n > _MAX_DENSE_N:
        raise UnsupportedShapeError(f"dense recursion limited to n <= {_MAX_DENSE_N}")
    return M


def characteristic_polynomial(M):
    """Monic det(sI - M) by the Faddeev-LeVerrier recursion."""
    M = _as_square(M)
    coeffs, _, _ = _faddeev_leverrier(M)
    return Polynomial(coeffs)


def eigenvalues(M):
    """Eigenvalues as roots of the characteristic polynomial.

    Sorted by real part, then imaginary part, for deterministic output.
    """
    poly = characteristic_polynomial(M)
    try:
        roots = np.roots(poly.coeffs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("root finding did not converge") from exc
    if not np.isfinite(roots).all():
        raise NumericalError("root finding produced nonfinite values")
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def transfer_function(ss):
    """C (sI - A)^-1 B as a strictly proper rational function.

    The numerator is C adj(sI - A) B assembled from the recursion's
    adjugate matrices; no pole-zero cancellation is attempted, so a
    hidden mode stays visible as a common factor.
    """
    if ss.p != 1 or ss.q != 1:
        raise UnsupportedShapeError("transfer_function supports SISO systems only")
    A = _as_square(ss.A)
    coeffs, aux, _ = _faddeev_leverrier(A)
    num = np.array([(ss.C @ Bj @ ss.B)[0, 0] for Bj in aux])
    return TransferFunction(Polynomial(num), Polynomial(coeffs))


def _rank_report(M, n_states):
    s = np.linalg.svd(M, compute_uv=False)
    smax = s[0] if s.size else 0.0
    tol = max(M.shape) * smax * 1e-12
    rank = int(np.count_nonzero(s > tol))
    return RankReport(matrix=M, rank=rank, full_rank=(rank == n_states), tolerance=tol)


def controllability_matrix(ss):
    """[B, AB, ..., A^(n-1) B] with its numerical rank."""
    blocks = []
    col = ss.B.copy()
    for _ in range(ss.n):
        blocks.append(col)
        col = ss.A @ col
    return _rank_report(np.hstack(blocks), ss.n)


def observability_matrix(ss):
    """[C; CA; ...; C A^(n-1)] with its numerical rank."""
    blocks = []
    row = ss.C.copy()
    for _ in range(ss.n):
        blocks.append(row)
        row = row @ ss.A
    return _rank_report(np.vstack(blocks), ss.n)


def is_asymptotically_stable(ss, tol=0.0):
    """True iff every pole of A has real part strictly below -tol."""
    return bool(np.all(eigenvalues(ss.A).real < -tol))
