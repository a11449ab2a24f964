"""Fixed-step RK4 simulation of open- and closed-loop periodic systems.

Fixed stepping is deliberate: square-wave coefficients make adaptive
steppers chatter, and aligning the grid with the coefficient discontinuities
keeps the Caratheodory solutions convergent at full order away from jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .design import GainSchedule, HarmonicEquilibrium
from .periodic import PeriodicMatrixFunction

__all__ = [
    "SimulationResult",
    "EscapeEvent",
    "simulate",
    "verify_z_dynamics",
    "tracking_scenario",
    "decay_rate",
    "riccati_escape_probe",
]

ESCAPE_GUARD = 1e12


@dataclass(frozen=True)
class EscapeEvent:
    time: float
    norm: float


@dataclass(frozen=True)
class SimulationResult:
    ts: np.ndarray
    x: np.ndarray                     # (N, n)
    u: np.ndarray                     # (N, p)
    step: float
    z: np.ndarray | None = None       # transformed trajectory P(t)^-1 x(t)
    x_ref: np.ndarray | None = None
    e: np.ndarray | None = None       # tracking error x - x_ref
    events: list = field(default_factory=list)
    segment_starts: np.ndarray | None = None

    @property
    def escaped(self) -> bool:
        return any(isinstance(ev, EscapeEvent) for ev in self.events)


def _half_grid(t0: float, t1: float, step: float) -> tuple[int, np.ndarray]:
    n_steps = int(round((t1 - t0) / step))
    if abs(t0 + n_steps * step - t1) > 1e-9:
        raise ValueError("step must divide the time span")
    return n_steps, t0 + np.arange(2 * n_steps + 1) * (step / 2.0)


def simulate(A: PeriodicMatrixFunction, B: PeriodicMatrixFunction, u_law,
             x0, t_span: tuple[float, float], step: float) -> SimulationResult:
    """Integrate dx/dt = A(t) x + B(t) u_law(t, x) with fixed-step RK4.

    The state is guarded at norm 1e12; crossing it truncates the run and
    logs an escape event (used to distinguish finite escape from slow
    divergence).
    """
    t0, t1 = t_span
    n_steps, grid = _half_grid(t0, t1, step)
    Avals = A.sample_real(grid)
    Bvals = B.sample_real(grid)
    n = A.rows
    p = B.cols
    x = np.asarray(x0, dtype=float).reshape(n)
    xs = np.empty((n_steps + 1, n))
    us = np.zeros((n_steps + 1, p))
    xs[0] = x
    events = []
    h = step

    def f(idx, t, x):
        u = np.asarray(u_law(t, x), dtype=float).reshape(p)
        return Avals[idx] @ x + Bvals[idx] @ u, u

    last = n_steps
    for i in range(n_steps):
        t = t0 + i * h
        k1, u_now = f(2 * i, t, x)
        k2, _ = f(2 * i + 1, t + h / 2, x + 0.5 * h * k1)
        k3, _ = f(2 * i + 1, t + h / 2, x + 0.5 * h * k2)
        k4, _ = f(2 * i + 2, t + h, x + h * k3)
        us[i] = u_now
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        xs[i + 1] = x
        nrm = float(np.linalg.norm(x))
        if not np.isfinite(nrm) or nrm > ESCAPE_GUARD:
            events.append(EscapeEvent(time=t + h, norm=nrm))
            last = i + 1
            break
    us[last] = np.asarray(u_law(t0 + last * h, xs[last]), dtype=float).reshape(p) \
        if not events else us[max(last - 1, 0)]
    ts = t0 + np.arange(last + 1) * h
    return SimulationResult(ts=ts, x=xs[:last + 1], u=us[:last + 1],
                            step=step, events=events)


def verify_z_dynamics(gain: GainSchedule, A: PeriodicMatrixFunction,
                      B: PeriodicMatrixFunction, x0,
                      t_span: tuple[float, float], step: float = 1e-4) -> float:
    """Relative sup deviation of z(t) = P(t)^-1 x(t) from e^(Lambda t) z(0).

    Simulates the closed loop u = -K(t) x and measures how well the
    transformed trajectory follows the assigned constant-coefficient
    dynamics.
    """
    K = gain.K
    t0, t1 = t_span
    n_steps, grid = _half_grid(t0, t1, step)
    Kvals = K.eval_grid(grid).real

    def u_law(t, x):
        idx = int(round((t - t0) / (step / 2.0)))
        return -(Kvals[idx] @ x)

    res = simulate(A, B, u_law, x0, t_span, step)
    Pinv = np.linalg.inv(gain.P.eval_grid(res.ts))
    z = np.einsum("nij,nj->ni", Pinv, res.x.astype(complex))
    z0 = z[0]
    lam, S = np.linalg.eig(gain.Lambda)
    coeff = np.linalg.solve(S, z0)
    z_pred = np.einsum("ij,nj->ni", S, coeff[None, :] * np.exp(np.outer(res.ts - t0, lam)))
    dev = np.max(np.linalg.norm(z - z_pred, axis=1))
    return float(dev / np.linalg.norm(np.asarray(x0, dtype=float)))


def tracking_scenario(gain: GainSchedule, A: PeriodicMatrixFunction,
                      B: PeriodicMatrixFunction, segments, x0,
                      step: float = 1e-4,
                      t_end: float | None = None) -> SimulationResult:
    """Simulate u = -K(t)(x - x_ref) + u_ref with a switching reference.

    ``segments`` is an ascending list of (t_start, HarmonicEquilibrium or
    None); None means the zero reference.  The run covers [first start,
    t_end] (default: last start plus the span of the previous segments).
    """
    starts = [s for s, _ in segments]
    if starts != sorted(starts):
        raise ValueError("segment start times must be ascending")
    t0 = starts[0]
    if t_end is None:
        t_end = 2 * starts[-1] - (starts[-2] if len(starts) > 1 else 0.0)
    n_steps, grid = _half_grid(t0, t_end, step)

    Kvals = gain.K.eval_grid(grid).real
    n, p = A.rows, B.cols
    xr = np.zeros((len(grid), n))
    ur = np.zeros((len(grid), p))
    bounds = starts[1:] + [np.inf]
    for (s, eq), b in zip(segments, bounds):
        mask = (grid >= s - 1e-12) & (grid < b - 1e-12)
        if eq is not None:
            xr[mask] = eq.x_ref.sample_real(grid[mask], tol=1e-6)[:, :, 0]
            ur[mask] = eq.u_ref.sample_real(grid[mask], tol=1e-6)[:, :, 0]

    def u_law(t, x):
        idx = int(round((t - t0) / (step / 2.0)))
        return -(Kvals[idx] @ (x - xr[idx])) + ur[idx]

    res = simulate(A, B, u_law, x0, (t0, t_end), step)
    N = len(res.ts)
    x_ref = xr[::2][:N]
    e = res.x - x_ref
    return SimulationResult(ts=res.ts, x=res.x, u=res.u, step=step,
                            x_ref=x_ref, e=e, events=res.events,
                            segment_starts=np.asarray(starts))


def decay_rate(result: SimulationResult, t0: float, n_periods: int,
               T: float, floor: float = 1e-12) -> float:
    """Per-period decay factor fitted to ||x(t0 + k T)|| by log-linear regression."""
    h = result.step
    norms = []
    for k in range(n_periods + 1):
        t = t0 + k * T
        i = int(round((t - result.ts[0]) / h))
        if i < 0 or i >= len(result.ts):
            break
        norms.append(np.linalg.norm(result.x[i]))
    norms = np.asarray(norms)
    if norms.size == 0 or norms[0] == 0.0:
        raise ValueError("trajectory is zero at t0; decay rate undefined")
    keep = norms > floor
    norms = norms[:np.argmin(keep) if not keep.all() else None]
    if len(norms) < 2:
        raise ValueError("not enough samples above the numerical floor")
    ks = np.arange(len(norms))
    slope = np.polyfit(ks, np.log(norms), 1)[0]
    return float(math.exp(slope))


def riccati_escape_probe(A: PeriodicMatrixFunction, B: PeriodicMatrixFunction,
                         G: PeriodicMatrixFunction, Lam: np.ndarray,
                         P0_inverse: np.ndarray, step: float = 1e-4,
                         t_end: float | None = None) -> dict:
    """Integrate the quadratic flow of R := P^-1 and report finite escape.

        dR/dt = -R A(t) + Lambda R + R B(t) G(t) R

    Escape (norm crossing the guard before ``t_end``) is a result, not an
    error; it is how a non-invertible Sylvester solution manifests in the
    time domain.
    """
    T = A.T
    if t_end is None:
        t_end = T
    n_steps, grid = _half_grid(0.0, t_end, step)
    Avals = A.eval_grid(grid)
    BGvals = np.einsum("nij,njk->nik", B.eval_grid(grid), G.eval_grid(grid))
    Lam = np.atleast_2d(np.asarray(Lam, dtype=complex))
    R = np.asarray(P0_inverse, dtype=complex)
    h = step

    def f(idx, R):
        return -R @ Avals[idx] + Lam @ R + R @ BGvals[idx] @ R

    escaped = False
    escape_time = None
    t = 0.0
    for i in range(n_steps):
        k1 = f(2 * i, R)
        k2 = f(2 * i + 1, R + 0.5 * h * k1)
        k3 = f(2 * i + 1, R + 0.5 * h * k2)
        k4 = f(2 * i + 2, R + h * k3)
        R = R + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (i + 1) * h
        nrm = float(np.linalg.norm(R))
        if not np.isfinite(nrm) or nrm > ESCAPE_GUARD:
            escaped = True
            escape_time = t
            break
    return {"escaped": escaped, "escape_time": escape_time,
            "t_final": t, "final_norm": float(np.linalg.norm(R))}
