"""Periodic pole-placement gain synthesis and harmonic equilibria.

The feedback K(t) = G(t) P(t)^-1 assigns the closed-loop harmonic spectrum
to sigma(Lambda) + j*omega*k, where P solves the harmonic Sylvester equation
for the pair (G, Lambda).  Invertibility of P is certified pointwise in time
(for continuous P the pointwise determinant criterion is equivalent to
operator invertibility); the sufficient recipe G = B* V*^-1,
Lambda = -J* - alpha*I guarantees the certificate passes for large enough
truncation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .floquet import FloquetFactorization, factorize
from .operators import (
    InvertibilityCertificate,
    harmonic_state_operator,
    invertibility_certificate,
    toeplitz_lift,
)
from .periodic import PeriodicMatrixFunction, pmf_from_uniform_samples
from .sylvester import HarmonicSylvesterSolution, solve_truncated

__all__ = [
    "GainSchedule",
    "DesignOutcome",
    "HarmonicEquilibrium",
    "NotInvertibleError",
    "design_sufficient",
    "design_direct",
    "closed_loop_pole_check",
    "PolePlacementReport",
    "harmonic_equilibrium",
    "nearest_equilibrium",
    "controllability_heuristic",
    "observability_check",
]


class NotInvertibleError(RuntimeError):
    """The Sylvester solution failed its invertibility certificate."""

    def __init__(self, certificate: InvertibilityCertificate):
        super().__init__(
            f"P(t) failed the invertibility certificate: min |det P| = "
            f"{certificate.min_abs_det:.3e} at t = {certificate.argmin_t:.6f} "
            f"(threshold {certificate.threshold:.3e}); if this is unexpected, "
            "increase the truncation order m")
        self.certificate = certificate


@dataclass(frozen=True)
class GainSchedule:
    """T-periodic state feedback with its synthesis provenance."""

    K: PeriodicMatrixFunction
    G: PeriodicMatrixFunction
    Lambda: np.ndarray
    P: PeriodicMatrixFunction
    certificate: InvertibilityCertificate
    m: int
    sylvester: HarmonicSylvesterSolution
    imag_residue: float   # max |Im K(t)| over the synthesis grid

    @property
    def T(self) -> float:
        return self.K.T


@dataclass(frozen=True)
class DesignOutcome:
    """Result of a direct design: a gain on success, diagnostics otherwise."""

    gain: GainSchedule | None
    certificate: InvertibilityCertificate
    sylvester: HarmonicSylvesterSolution

    @property
    def status(self) -> str:
        return "ok" if self.gain is not None else "NotInvertible"


def _gain_from_solution(G: PeriodicMatrixFunction, sol: HarmonicSylvesterSolution,
                        cert: InvertibilityCertificate, m: int,
                        resolution: int = 1024) -> GainSchedule:
    """K(t) = G(t) P(t)^-1 pointwise on a grid, re-phasorized to 2m harmonics."""
    T = G.T
    ts = np.arange(resolution) * (T / resolution)
    Pinv = np.linalg.inv(sol.P_timedomain.eval_grid(ts))
    Kvals = np.einsum("nij,njk->nik", G.eval_grid(ts), Pinv)
    imag_residue = float(np.max(np.abs(Kvals.imag)))

    # Pointwise evaluation stays exactly G(t) P(t)^-1; the stored phasors
    # (order 2m) are the synthesis form used for operator lifts and export.
    def exact(qs, G=G, P=sol.P_timedomain):
        Pinv_q = np.linalg.inv(P.eval_grid(qs))
        return np.einsum("nij,njk->nik", G.eval_grid(qs), Pinv_q)

    K = pmf_from_uniform_samples(Kvals, T, 2 * m, exact=exact)
    return GainSchedule(K=K, G=G, Lambda=sol.Lambda, P=sol.P_timedomain,
                        certificate=cert, m=m, sylvester=sol,
                        imag_residue=imag_residue)


def design_sufficient(A: PeriodicMatrixFunction, B: PeriodicMatrixFunction,
                      alpha: float, m: int,
                      floquet: FloquetFactorization | None = None,
                      steps: int = 20000, resolution: int = 1024,
                      certificate_grid: int = 1024) -> GainSchedule:
    """Gain synthesis with the invertibility-guaranteeing recipe.

    Sets G(t) = B(t)* (V(t)*)^-1 from a Floquet factorization (V, J) of A
    and Lambda = -J* - alpha*I.  The certificate must pass; failure means
    the truncation is too coarse and raises with the measured margin.
    """
    F = floquet if floquet is not None else factorize(A, steps=steps)
    J = F.J
    n = A.rows
    Lam = -J.conj().T - alpha * np.eye(n)
    if np.max(np.linalg.eigvals(Lam).real) >= 0:
        raise ValueError("alpha too small: sigma(-J* - alpha I) must lie in the "
                         "open left half-plane")

    ts = np.arange(resolution) * (A.T / resolution)
    Vinv_star = np.linalg.inv(np.conj(np.swapaxes(F.V.eval_grid(ts), 1, 2)))
    Bstar = np.conj(np.swapaxes(B.eval_grid(ts), 1, 2))
    Gvals = np.einsum("nij,njk->nik", Bstar, Vinv_star)
    G = pmf_from_uniform_samples(Gvals, A.T, 2 * m)

    sol = solve_truncated(A, B, G, Lam, m, floquet=F)
    cert = invertibility_certificate(sol.P_timedomain, grid=certificate_grid)
    if not cert.invertible:
        raise NotInvertibleError(cert)
    return _gain_from_solution(G, sol, cert, m, resolution=resolution)


def design_direct(A: PeriodicMatrixFunction, B: PeriodicMatrixFunction,
                  G: PeriodicMatrixFunction, Lam: np.ndarray, m: int,
                  floquet: FloquetFactorization | None = None,
                  resolution: int = 1024,
                  certificate_grid: int = 1024) -> DesignOutcome:
    """Pole placement with caller-supplied (G, Lambda).

    Unlike the finite-dimensional case, observability of (G, Lambda) does
    not guarantee invertibility of P; on certificate failure the outcome
    carries the diagnostics instead of a gain.
    """
    sol = solve_truncated(A, B, G, Lam, m, floquet=floquet)
    cert = invertibility_certificate(sol.P_timedomain, grid=certificate_grid)
    if not cert.invertible:
        return DesignOutcome(gain=None, certificate=cert, sylvester=sol)
    gain = _gain_from_solution(G, sol, cert, m, resolution=resolution)
    return DesignOutcome(gain=gain, certificate=cert, sylvester=sol)


@dataclass(frozen=True)
class PolePlacementReport:
    computed: np.ndarray
    predicted: np.ndarray
    max_deviation: float


def closed_loop_pole_check(gain: GainSchedule, A: PeriodicMatrixFunction,
                           B: PeriodicMatrixFunction, m: int,
                           keep: int | None = None) -> PolePlacementReport:
    """Compare central closed-loop operator eigenvalues with sigma(Lambda)+jwk."""
    from .operators import central_spectrum

    omega = A.omega
    BK = _lift_product(B, gain.K, m)
    M = harmonic_state_operator(A.materialize(2 * m), m) - BK
    keep = keep if keep is not None else m
    computed = central_spectrum(M, omega, keep)
    lam = np.linalg.eigvals(gain.Lambda)
    band = keep * omega / 2.0
    kmax = int(math.ceil(band / omega)) + 1
    predicted = np.array([l + 1j * omega * k
                          for l in lam for k in range(-kmax, kmax + 1)])
    predicted = predicted[np.abs(predicted.imag) <= band + omega]
    dev = max((np.min(np.abs(predicted - c)) for c in computed), default=0.0)
    return PolePlacementReport(computed=computed, predicted=predicted,
                               max_deviation=float(dev))


def _to_order(f: PeriodicMatrixFunction, K: int) -> PeriodicMatrixFunction:
    """Provide phasors of f up to |k| <= K, re-sampling the exact evaluator
    if the stored table is too short."""
    if f.bandlimited or f.max_stored_k >= K:
        return f if f.bandlimited else f.materialize(K)
    resolution = max(4 * K + 4, 1024)
    ts = np.arange(resolution) * (f.T / resolution)
    return pmf_from_uniform_samples(f.eval_grid(ts), f.T, K, exact=f.exact)


def _lift_product(B: PeriodicMatrixFunction, K: PeriodicMatrixFunction, m: int) -> np.ndarray:
    return toeplitz_lift(_to_order(B, 2 * m), m).matrix @ \
        toeplitz_lift(_to_order(K, 2 * m), m).matrix


@dataclass(frozen=True)
class HarmonicEquilibrium:
    """A truncated periodic steady state (X_ref, U_ref) of the lifted model."""

    X_ref: np.ndarray     # n(2m+1) phasor vector
    U_ref: np.ndarray     # p(2m+1) phasor vector
    x_ref: PeriodicMatrixFunction
    u_ref: PeriodicMatrixFunction
    residual: float
    m: int
    distance: float | None = None   # nearest-equilibrium objective, if any
    rank_deficient: bool = False


def _phasor_vector(f: PeriodicMatrixFunction, m: int) -> np.ndarray:
    """Stack the phasors of a column function (cols == 1) as [state-major]."""
    if f.cols != 1:
        raise ValueError("expected a column (vector-valued) function")
    out = np.empty(f.rows * (2 * m + 1), dtype=complex)
    for i in range(f.rows):
        for k in range(-m, m + 1):
            out[i * (2 * m + 1) + (k + m)] = f.phasor(k)[i, 0]
    return out


def _vector_pmf(X: np.ndarray, n: int, m: int, T: float) -> PeriodicMatrixFunction:
    ph = {}
    b = 2 * m + 1
    for k in range(-m, m + 1):
        ph[k] = np.array([[X[i * b + (k + m)]] for i in range(n)])
    return PeriodicMatrixFunction(n, 1, T, ph, bandlimited=True)


def harmonic_equilibrium(A: PeriodicMatrixFunction, B: PeriodicMatrixFunction,
                         u_ref: PeriodicMatrixFunction, m: int,
                         resonance_tol: float = 1e-10) -> HarmonicEquilibrium:
    """Solve the truncated equilibrium equation 0 = (A-N) X_ref + B U_ref."""
    n = A.rows
    H = harmonic_state_operator(A.materialize(2 * m), m)
    Bl = toeplitz_lift(B.materialize(2 * m) if not B.bandlimited else B, m).matrix
    U = _phasor_vector(u_ref.materialize(m) if not u_ref.bandlimited else u_ref, m)
    svals = np.linalg.svd(H, compute_uv=False)
    if svals[-1] < resonance_tol * svals[0]:
        raise RuntimeError(
            f"equilibrium system near-singular (resonance): smallest singular "
            f"value {svals[-1]:.3e}")
    X = np.linalg.solve(H, -Bl @ U)
    residual = _central_residual(H @ X + Bl @ U, n, m)
    return HarmonicEquilibrium(
        X_ref=X, U_ref=U,
        x_ref=_vector_pmf(X, n, m, A.T),
        u_ref=_vector_pmf(U, B.cols, m, A.T),
        residual=residual, m=m)


def _central_residual(r: np.ndarray, n: int, m: int) -> float:
    b = 2 * m + 1
    half = m // 2
    idx = []
    for i in range(n):
        idx.extend(range(i * b + (m - half), i * b + (m + half) + 1))
    return float(np.linalg.norm(r[idx]))


def nearest_equilibrium(A: PeriodicMatrixFunction, B: PeriodicMatrixFunction,
                        X_d: np.ndarray, m: int) -> HarmonicEquilibrium:
    """Least-squares closest equilibrium to a desired phasor vector X_d.

    Substitutes X_ref = -(A-N)^-1 B U_ref and minimizes ||X_d - X_ref||_2
    over U_ref; rank deficiency yields the minimum-norm solution, flagged.
    """
    n = A.rows
    X_d = np.asarray(X_d, dtype=complex)
    H = harmonic_state_operator(A.materialize(2 * m), m)
    Bl = toeplitz_lift(B.materialize(2 * m) if not B.bandlimited else B, m).matrix
    S = -np.linalg.solve(H, Bl)
    U, res_, rank, sv = np.linalg.lstsq(S, X_d, rcond=None)
    rank_deficient = rank < S.shape[1]
    X = S @ U
    residual = _central_residual(H @ X + Bl @ U, n, m)
    return HarmonicEquilibrium(
        X_ref=X, U_ref=U,
        x_ref=_vector_pmf(X, n, m, A.T),
        u_ref=_vector_pmf(U, B.cols, m, A.T),
        residual=residual, m=m,
        distance=float(np.linalg.norm(X_d - X)),
        rank_deficient=bool(rank_deficient))


def controllability_heuristic(A: PeriodicMatrixFunction, B: PeriodicMatrixFunction,
                              m: int, horizon: float,
                              quad_points: int = 200) -> float:
    """Smallest eigenvalue of the truncated finite-horizon controllability Gramian.

    Quadrature proxy only: positivity indicates controllability of the
    truncation, not exact controllability of the infinite-dimensional model.
    """
    H = harmonic_state_operator(A.materialize(2 * m), m)
    Bl = toeplitz_lift(B.materialize(2 * m) if not B.bandlimited else B, m).matrix
    taus = np.linspace(0.0, horizon, quad_points)
    W = np.zeros_like(H)
    weights = np.full(quad_points, taus[1] - taus[0])
    weights[0] *= 0.5
    weights[-1] *= 0.5
    for tau, w in zip(taus, weights):
        E = scipy.linalg.expm(H * tau)
        EB = E @ Bl
        W = W + w * (EB @ EB.conj().T)
    return float(np.min(np.linalg.eigvalsh(0.5 * (W + W.conj().T))))


def observability_check(G0: np.ndarray, Lam: np.ndarray) -> bool:
    """Classical finite-dimensional observability of a constant pair (G, Lambda)."""
    G0 = np.atleast_2d(np.asarray(G0, dtype=complex))
    Lam = np.atleast_2d(np.asarray(Lam, dtype=complex))
    n = Lam.shape[0]
    blocks = [G0]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ Lam)
    O = np.vstack(blocks)
    return bool(np.linalg.matrix_rank(O) == n)
