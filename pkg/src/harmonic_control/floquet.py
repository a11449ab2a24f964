"""Floquet factorization of periodic state matrices via the monodromy matrix.

The transition matrix over one period is integrated with fixed-step RK4;
its eigendecomposition yields the Floquet exponents through the principal
matrix logarithm and the periodic change of basis V(t) = Phi(t, 0) W e^(-Jt).
Only diagonalizable monodromy matrices are supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .periodic import (
    PeriodicMatrixFunction,
    periodic_interpolator,
    pmf_from_uniform_samples,
)

__all__ = [
    "FloquetFactorization",
    "MonodromyConvergenceError",
    "DefectiveMonodromyError",
    "monodromy",
    "transition_matrices",
    "factorize",
    "harmonic_spectrum_prediction",
]


class MonodromyConvergenceError(RuntimeError):
    """Step-halving check failed; integration step too coarse."""

    def __init__(self, delta: float, tol: float):
        super().__init__(
            f"halving the RK4 step still changes the monodromy matrix by "
            f"{delta:.3e} (tolerance {tol:.1e}); increase steps")
        self.delta = delta


class DefectiveMonodromyError(RuntimeError):
    """Monodromy matrix is (numerically) defective or has a zero multiplier."""


def _rk4_transition(Avals: np.ndarray, h: float, store_all: bool):
    """Integrate Phi' = A(t) Phi over one period.

    ``Avals`` holds A sampled on the half-step grid (2*steps + 1 points).
    """
    n = Avals.shape[1]
    steps = (Avals.shape[0] - 1) // 2
    Phi = np.eye(n)
    if store_all:
        out = np.empty((steps + 1, n, n))
        out[0] = Phi
    for i in range(steps):
        A0 = Avals[2 * i]
        Ah = Avals[2 * i + 1]
        A1 = Avals[2 * i + 2]
        k1 = A0 @ Phi
        k2 = Ah @ (Phi + 0.5 * h * k1)
        k3 = Ah @ (Phi + 0.5 * h * k2)
        k4 = A1 @ (Phi + h * k3)
        Phi = Phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if store_all:
            out[i + 1] = Phi
    return (out, Phi) if store_all else (None, Phi)


def transition_matrices(A: PeriodicMatrixFunction, steps: int):
    """State transition matrices Phi(t_i, 0) on a uniform grid over [0, T].

    Returns (ts, Phis) with ts of length steps + 1.
    """
    T = A.T
    h = T / steps
    half_grid = np.linspace(0.0, T, 2 * steps + 1)
    Avals = A.sample_real(half_grid)
    Phis, _ = _rk4_transition(Avals, h, store_all=True)
    return np.linspace(0.0, T, steps + 1), Phis


def monodromy(A: PeriodicMatrixFunction, steps: int = 20000,
              check_tol: float | None = 1e-6) -> np.ndarray:
    """Phi(T, 0) by fixed-step RK4 with a step-halving convergence check.

    ``check_tol=None`` skips the (roughly 50% extra cost) coarse rerun.
    """
    T = A.T
    half_grid = np.linspace(0.0, T, 2 * steps + 1)
    Avals = A.sample_real(half_grid)
    _, Phi = _rk4_transition(Avals, T / steps, store_all=False)
    if check_tol is not None:
        if steps % 2:
            raise ValueError("steps must be even for the halving check")
        _, Phi_coarse = _rk4_transition(Avals[::2], 2 * T / steps, store_all=False)
        delta = float(np.max(np.abs(Phi - Phi_coarse)))
        if delta > check_tol:
            raise MonodromyConvergenceError(delta, check_tol)
    return Phi


@dataclass(frozen=True)
class FloquetFactorization:
    """Periodic change of basis V(t) and constant J with z = V(t)^-1 x."""

    J: np.ndarray                 # diagonal complex matrix
    exponents: np.ndarray         # diag(J)
    W: np.ndarray                 # monodromy eigenvectors, V(0) = W
    V: PeriodicMatrixFunction
    monodromy: np.ndarray
    T: float
    periodicity_error: float      # ||V(0) - V(T)||

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T


def _pair_conjugates(mu: np.ndarray, W: np.ndarray):
    """Force exact conjugate pairing of complex eigendata of a real matrix.

    Keeps the conjugation symmetry of downstream phasor computations exact
    instead of relying on LAPACK output conventions.
    """
    mu = mu.copy()
    W = W.copy()
    used = np.zeros(len(mu), dtype=bool)
    for i in range(len(mu)):
        if used[i] or abs(mu[i].imag) < 1e-14 * max(1.0, abs(mu[i])):
            continue
        # nearest unused conjugate partner
        cands = [j for j in range(len(mu)) if j != i and not used[j]]
        j = min(cands, key=lambda j: abs(mu[j] - mu[i].conjugate()))
        mu[j] = mu[i].conjugate()
        W[:, j] = W[:, i].conjugate()
        used[i] = used[j] = True
    return mu, W


def factorize(A: PeriodicMatrixFunction, steps: int = 20000,
              n_phasors: int = 40, v_samples: int = 2048) -> FloquetFactorization:
    """Compute a Floquet factorization (V(t), J) of a periodic state matrix.

    J is diagonal with the principal-branch Floquet exponents
    log(mu_p) / T; V(t) = Phi(t, 0) W e^(-Jt) is T-periodic by construction
    and is returned with ``n_phasors`` harmonics plus a dense periodic
    interpolator as exact evaluator.
    """
    T = A.T
    ts, Phis = transition_matrices(A, steps)
    M = Phis[-1]
    mu, W = np.linalg.eig(M)
    if np.min(np.abs(mu)) < 1e-12:
        raise DefectiveMonodromyError("monodromy has a (numerically) zero multiplier")
    if np.linalg.cond(W) > 1e10:
        raise DefectiveMonodromyError("monodromy is (numerically) defective")
    neg_real = [m for m in mu if m.real < 0 and abs(m.imag) < 1e-12 * abs(m)]
    if len(neg_real) > 1:
        raise DefectiveMonodromyError(
            "multiple negative-real multipliers; principal logarithm ambiguous")
    mu, W = _pair_conjugates(mu, W)
    lam = np.log(mu) / T
    J = np.diag(lam)

    # V on the integration grid, then phasors + interpolator
    decay = np.exp(-np.outer(ts, lam))           # (steps+1, n)
    V_grid = Phis @ W * decay[:, None, :]
    periodicity_error = float(np.max(np.abs(V_grid[0] - V_grid[-1])))

    stride = max(1, steps // v_samples)
    Vs = V_grid[:-1:stride]
    V = pmf_from_uniform_samples(
        Vs, T, n_phasors,
        exact=periodic_interpolator(ts, V_grid, T))

    return FloquetFactorization(
        J=J, exponents=lam, W=W, V=V, monodromy=M, T=T,
        periodicity_error=periodicity_error)


def harmonic_spectrum_prediction(F: FloquetFactorization, k_range) -> np.ndarray:
    """The lifted-operator eigenvalues lambda_p + j*omega*k for requested k."""
    ks = np.asarray(list(k_range))
    if ks.size == 0:
        return np.array([], dtype=complex)
    vals = (F.exponents[None, :] + 1j * F.omega * ks[:, None]).ravel()
    order = np.lexsort((vals.real, vals.imag))
    return vals[order]
