"""Finite truncations of the block-Toeplitz harmonic operators.

An order-m truncation of the lift of an n x n periodic matrix function is an
n x n grid of (2m+1) x (2m+1) Toeplitz blocks; block (i, j) has entry
(r, c) equal to the (r - c)-th phasor of the (i, j) scalar entry, so phasors
up to |k| <= 2m are required (the corners of each block).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .periodic import PeriodicMatrixFunction

__all__ = [
    "TruncatedBlockToeplitz",
    "toeplitz_lift",
    "frequency_shift",
    "circ_product",
    "harmonic_state_operator",
    "central_spectrum",
    "invertibility_certificate",
    "InvertibilityCertificate",
]


@dataclass(frozen=True)
class TruncatedBlockToeplitz:
    """Dense realization of an m-truncated block-Toeplitz lift."""

    n_rows: int
    n_cols: int
    m: int
    matrix: np.ndarray
    omega: float
    T: float

    @property
    def block_size(self) -> int:
        return 2 * self.m + 1

    def block(self, i: int, j: int) -> np.ndarray:
        b = self.block_size
        return self.matrix[i * b:(i + 1) * b, j * b:(j + 1) * b]


def toeplitz_lift(f: PeriodicMatrixFunction, m: int) -> TruncatedBlockToeplitz:
    """Order-m truncation of the block-Toeplitz lift of ``f``.

    Refuses if phasors up to |k| <= 2m cannot be produced; zero-filling a
    merely-truncated phasor set would silently corrupt the corners.
    """
    if not f.has_phasors_up_to(2 * m):
        raise ValueError(
            f"lift of order m={m} needs phasors to |k|<={2 * m}; "
            "materialize the function first"
        )
    b = 2 * m + 1
    out = np.zeros((f.rows * b, f.cols * b), dtype=complex)
    ph = {k: f.phasor(k) for k in range(-2 * m, 2 * m + 1)}
    for i in range(f.rows):
        for j in range(f.cols):
            col = np.array([ph[k][i, j] for k in range(0, 2 * m + 1)])
            row = np.array([ph[-k][i, j] for k in range(0, 2 * m + 1)])
            out[i * b:(i + 1) * b, j * b:(j + 1) * b] = scipy.linalg.toeplitz(col, row)
    return TruncatedBlockToeplitz(f.rows, f.cols, m, out, f.omega, f.T)


def frequency_shift(n: int, m: int, omega: float) -> np.ndarray:
    """The truncated frequency-shift operator Id_n (x) diag(j*omega*k, |k|<=m)."""
    d = 1j * omega * np.arange(-m, m + 1)
    return np.kron(np.eye(n), np.diag(d))


def circ_product(B: np.ndarray, A: TruncatedBlockToeplitz) -> np.ndarray:
    """Blockwise Kronecker product: block (i, j) of the result is B (x) A_ij."""
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    if A.n_rows != A.n_cols:
        raise ValueError("circ product requires square block structure")
    n = A.n_rows
    p, q = B.shape
    b = A.block_size
    out = np.zeros((n * p * b, n * q * b), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i * p * b:(i + 1) * p * b, j * q * b:(j + 1) * q * b] = \
                np.kron(B, A.block(i, j))
    return out


def harmonic_state_operator(A: PeriodicMatrixFunction, m: int) -> np.ndarray:
    """The truncated harmonic generator: lift of A minus the frequency shift."""
    if A.rows != A.cols:
        raise ValueError("state matrix must be square")
    return toeplitz_lift(A, m).matrix - frequency_shift(A.rows, m, A.omega)


def central_spectrum(M: np.ndarray, omega: float, keep: int) -> np.ndarray:
    """Eigenvalues of M with |Im| <= keep * omega / 2, sorted by imaginary part.

    Truncated-operator spectra are only trustworthy in a central band;
    eigenvalues near the truncation border are artifacts and excluded here.
    """
    lam = np.linalg.eigvals(M)
    band = keep * omega / 2.0
    kept = lam[np.abs(lam.imag) <= band + 1e-12]
    order = np.lexsort((kept.real, kept.imag))
    return kept[order]


@dataclass(frozen=True)
class InvertibilityCertificate:
    invertible: bool
    min_abs_det: float
    argmin_t: float
    threshold: float
    grid: int
    sign_change: bool  # real determinant changed sign on [0, T]


def invertibility_certificate(f: PeriodicMatrixFunction, grid: int = 1024,
                              threshold_factor: float = 1e-8) -> InvertibilityCertificate:
    """Pointwise-determinant invertibility test for a square periodic function.

    For continuous f, invertibility of the lifted operator reduces to
    |det f(t)| staying away from zero on one period.  The determinant is
    evaluated on a uniform grid, every local minimum of |det| is refined by
    bounded scalar minimization, and the refined minimum is compared with
    ``threshold_factor`` times the grid maximum.
    """
    if f.rows != f.cols:
        raise ValueError("invertibility certificate requires a square function")
    T = f.T
    ts = np.linspace(0.0, T, grid, endpoint=False)
    dets = np.linalg.det(f.eval_grid(ts))
    absdet = np.abs(dets)
    maxdet = float(np.max(absdet))
    threshold = threshold_factor * maxdet

    def obj(t):
        return abs(np.linalg.det(f(t)))

    # local minima on the periodic grid
    lower = np.roll(absdet, 1)
    upper = np.roll(absdet, -1)
    minima_idx = np.nonzero((absdet <= lower) & (absdet <= upper))[0]
    h = T / grid
    best_val = float("inf")
    best_t = 0.0
    for i in minima_idx:
        t0 = ts[i]
        res = scipy.optimize.minimize_scalar(
            obj, bounds=(t0 - h, t0 + h), method="bounded",
            options={"xatol": 1e-12})
        if res.fun < best_val:
            best_val = float(res.fun)
            best_t = float(np.mod(res.x, T))
    if not len(minima_idx):
        best_val = float(np.min(absdet))
        best_t = float(ts[int(np.argmin(absdet))])

    # sign-change detection only meaningful for (numerically) real determinants
    sign_change = False
    if np.max(np.abs(dets.imag)) <= 1e-8 * max(maxdet, 1.0):
        re = dets.real
        sign_change = bool(np.any(re[:-1] * re[1:] < 0) or re[-1] * re[0] < 0)

    return InvertibilityCertificate(
        invertible=bool(best_val > threshold and not sign_change),
        min_abs_det=best_val,
        argmin_t=best_t,
        threshold=threshold,
        grid=grid,
        sign_change=sign_change,
    )
