"""T-periodic matrix-valued functions represented by complex Fourier phasors.

The k-th phasor of a T-periodic function f is (1/T) * integral over one
period of f(t) exp(-j*omega*k*t) dt with omega = 2*pi/T.  Functions with
slowly converging series (square, triangle, sawtooth waves) additionally
carry a closed-form per-harmonic phasor rule and an exact time-domain
evaluator, so any truncation order can be materialized without quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

__all__ = [
    "PeriodicMatrixFunction",
    "PhasorTrajectory",
    "MissingPhasorError",
    "constant",
    "waveform_square",
    "waveform_triangle",
    "waveform_sawtooth",
    "waveform_trig_polynomial",
    "phasors_of",
    "evaluate",
    "sliding_fourier",
    "reconstruct",
    "from_json_description",
    "to_json_description",
]


class MissingPhasorError(ValueError):
    """Requested a harmonic index outside the stored/derivable phasor range."""


def _as_matrix(value, rows, cols):
    out = np.asarray(value, dtype=complex)
    if out.ndim == 0:
        out = out.reshape(1, 1)
    if out.shape != (rows, cols):
        raise ValueError(f"expected shape {(rows, cols)}, got {out.shape}")
    return out


@dataclass(frozen=True)
class PeriodicMatrixFunction:
    """A T-periodic rows x cols matrix function stored as complex phasors.

    Immutable.  ``phasors`` maps harmonic index k to an (rows, cols) complex
    array.  ``bandlimited`` means every phasor outside the stored range is
    exactly zero.  ``phasor_rule``, when present, computes the phasor for an
    arbitrary k (closed-form series).  ``exact``, when present, evaluates the
    function in the time domain without series truncation; it must accept a
    float array of times and return an array of shape (len(t), rows, cols).
    """

    rows: int
    cols: int
    T: float
    phasors: dict[int, np.ndarray]
    bandlimited: bool = False
    phasor_rule: Callable[[int], np.ndarray] | None = None
    exact: Callable[[np.ndarray], np.ndarray] | None = None
    description: dict | None = field(default=None, compare=False)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T

    @property
    def max_stored_k(self) -> int:
        return max((abs(k) for k in self.phasors), default=0)

    def phasor(self, k: int) -> np.ndarray:
        """Return the k-th phasor, deriving it from the closed form if needed."""
        if k in self.phasors:
            return self.phasors[k]
        if self.bandlimited:
            return np.zeros((self.rows, self.cols), dtype=complex)
        if self.phasor_rule is not None:
            return _as_matrix(self.phasor_rule(k), self.rows, self.cols)
        raise MissingPhasorError(
            f"phasor k={k} unavailable (stored |k|<={self.max_stored_k}); "
            "materialize to the needed order first"
        )

    def has_phasors_up_to(self, K: int) -> bool:
        if self.bandlimited or self.phasor_rule is not None:
            return True
        return all(k in self.phasors for k in range(-K, K + 1))

    def materialize(self, K: int) -> "PeriodicMatrixFunction":
        """Return a copy with phasors explicitly stored for all |k| <= K."""
        ph = {k: self.phasor(k) for k in range(-K, K + 1)}
        return replace(self, phasors=ph)

    def phasor_array(self, K: int) -> np.ndarray:
        """Phasors stacked as an array of shape (2K+1, rows, cols), k=-K..K."""
        return np.stack([self.phasor(k) for k in range(-K, K + 1)])

    # -- evaluation ------------------------------------------------------

    def eval_grid(self, ts: np.ndarray) -> np.ndarray:
        """Evaluate at an array of times; shape (len(ts), rows, cols), complex."""
        ts = np.asarray(ts, dtype=float)
        if self.exact is not None:
            return np.asarray(self.exact(ts), dtype=complex)
        ks = np.array(sorted(self.phasors), dtype=float)
        coeffs = np.stack([self.phasors[int(k)] for k in ks])  # (K, r, c)
        phases = np.exp(1j * self.omega * np.outer(ts, ks))  # (N, K)
        return np.einsum("nk,krc->nrc", phases, coeffs)

    def __call__(self, t: float) -> np.ndarray:
        return self.eval_grid(np.array([t]))[0]

    def sample_real(self, ts: np.ndarray, tol: float = 1e-8) -> np.ndarray:
        """Evaluate on a grid and return the real part.

        Raises if the imaginary residue exceeds ``tol`` relative to the
        magnitude scale, instead of silently dropping it.
        """
        vals = self.eval_grid(ts)
        scale = max(np.max(np.abs(vals)), 1.0)
        imag = np.max(np.abs(vals.imag))
        if imag > tol * scale:
            raise ValueError(
                f"imaginary residue {imag:.3e} exceeds tolerance {tol:.1e} "
                f"(scale {scale:.3e}); function is not real-valued"
            )
        return vals.real

    # -- algebra ---------------------------------------------------------

    def _binary_shape(self, other: "PeriodicMatrixFunction"):
        if not math.isclose(self.T, other.T):
            raise ValueError("period mismatch")

    def __add__(self, other: "PeriodicMatrixFunction") -> "PeriodicMatrixFunction":
        self._binary_shape(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        ks = set(self.phasors) | set(other.phasors)
        zero = np.zeros((self.rows, self.cols), dtype=complex)
        ph = {k: self.phasors.get(k, zero) + other.phasors.get(k, zero) for k in ks}
        rule = None
        if self.phasor_rule is not None or other.phasor_rule is not None:
            def rule(k, a=self, b=other):
                return a.phasor(k) + b.phasor(k)
        exact = None
        if self.exact is not None and other.exact is not None:
            def exact(ts, a=self.exact, b=other.exact):
                return np.asarray(a(ts)) + np.asarray(b(ts))
        elif self.bandlimited and other.exact is not None:
            def exact(ts, a=self, b=other.exact):
                return a.eval_grid_series(ts) + np.asarray(b(ts))
        elif other.bandlimited and self.exact is not None:
            def exact(ts, a=self.exact, b=other):
                return np.asarray(a(ts)) + b.eval_grid_series(ts)
        return PeriodicMatrixFunction(
            self.rows, self.cols, self.T, ph,
            bandlimited=self.bandlimited and other.bandlimited,
            phasor_rule=rule, exact=exact,
        )

    def eval_grid_series(self, ts: np.ndarray) -> np.ndarray:
        """Finite Fourier synthesis from the stored phasors, ignoring ``exact``."""
        ts = np.asarray(ts, dtype=float)
        ks = np.array(sorted(self.phasors), dtype=float)
        coeffs = np.stack([self.phasors[int(k)] for k in ks])
        phases = np.exp(1j * self.omega * np.outer(ts, ks))
        return np.einsum("nk,krc->nrc", phases, coeffs)

    def scale(self, c: complex) -> "PeriodicMatrixFunction":
        ph = {k: c * v for k, v in self.phasors.items()}
        rule = None
        if self.phasor_rule is not None:
            def rule(k, f=self, c=c):
                return c * f.phasor(k)
        exact = None
        if self.exact is not None:
            def exact(ts, f=self.exact, c=c):
                return c * np.asarray(f(ts))
        return replace(self, phasors=ph, phasor_rule=rule, exact=exact)

    def matmul_bandlimited(self, other: "PeriodicMatrixFunction") -> "PeriodicMatrixFunction":
        """Pointwise matrix product computed by phasor convolution.

        Both operands must have explicitly stored phasors; the result is
        bandlimited to the sum of the operand bandwidths.
        """
        self._binary_shape(other)
        if self.cols != other.rows:
            raise ValueError("inner dimension mismatch")
        Ka, Kb = self.max_stored_k, other.max_stored_k
        zero = np.zeros((self.rows, other.cols), dtype=complex)
        ph: dict[int, np.ndarray] = {}
        for k in range(-(Ka + Kb), Ka + Kb + 1):
            acc = zero.copy()
            for l in range(max(-Ka, k - Kb), min(Ka, k + Kb) + 1):
                a = self.phasors.get(l)
                b = other.phasors.get(k - l)
                if a is not None and b is not None:
                    acc += a @ b
            ph[k] = acc
        return PeriodicMatrixFunction(
            self.rows, other.cols, self.T, ph,
            bandlimited=self.bandlimited and other.bandlimited,
        )

    def conj_transpose(self) -> "PeriodicMatrixFunction":
        """The function t -> f(t)^* (complex conjugate transpose)."""
        ph = {-k: v.conj().T for k, v in self.phasors.items()}
        rule = None
        if self.phasor_rule is not None:
            def rule(k, f=self):
                return f.phasor(-k).conj().T
        exact = None
        if self.exact is not None:
            def exact(ts, f=self.exact):
                return np.conj(np.swapaxes(np.asarray(f(ts)), -1, -2))
        return PeriodicMatrixFunction(
            self.cols, self.rows, self.T, ph,
            bandlimited=self.bandlimited, phasor_rule=rule, exact=exact,
        )

    @staticmethod
    def from_scalar_entries(entries) -> "PeriodicMatrixFunction":
        """Assemble a matrix function from a 2D nest of scalar (1x1) functions."""
        rows = len(entries)
        cols = len(entries[0])
        flat = [e for row in entries for e in row]
        T = flat[0].T
        for e in flat:
            if e.rows != 1 or e.cols != 1:
                raise ValueError("entries must be scalar functions")
            if not math.isclose(e.T, T):
                raise ValueError("period mismatch between entries")
        ks = set()
        for e in flat:
            ks |= set(e.phasors)

        def gather(k):
            out = np.empty((rows, cols), dtype=complex)
            for i in range(rows):
                for j in range(cols):
                    out[i, j] = entries[i][j].phasor(k)[0, 0]
            return out

        ph = {k: gather(k) for k in ks}
        bandlimited = all(e.bandlimited for e in flat)
        rule = None
        if not bandlimited and all(
            e.bandlimited or e.phasor_rule is not None for e in flat
        ):
            rule = gather
        exact = None
        if all(e.exact is not None or e.bandlimited for e in flat):
            evals = [[
                (e.exact if e.exact is not None else e.eval_grid_series)
                for e in row] for row in entries]

            def exact(ts, evals=evals):
                ts = np.asarray(ts, dtype=float)
                out = np.empty((len(ts), rows, cols), dtype=complex)
                for i in range(rows):
                    for j in range(cols):
                        out[:, i, j] = np.asarray(evals[i][j](ts))[:, 0, 0]
                return out

        return PeriodicMatrixFunction(
            rows, cols, T, ph, bandlimited=bandlimited,
            phasor_rule=rule, exact=exact,
        )


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def constant(C, T: float = 1.0) -> PeriodicMatrixFunction:
    """The constant function t -> C as a (trivially) T-periodic function."""
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    rows, cols = C.shape

    def exact(ts, C=C):
        return np.broadcast_to(C, (len(np.atleast_1d(ts)), rows, cols)).copy()

    return PeriodicMatrixFunction(
        rows, cols, T, {0: C}, bandlimited=True, exact=exact,
        description={"rows": rows, "cols": cols, "T": T, "terms": [
            {"kind": "const", "row": i, "col": j, "value": _cplx_json(C[i, j])}
            for i in range(rows) for j in range(cols) if C[i, j] != 0
        ] or [{"kind": "const", "row": 0, "col": 0, "value": _cplx_json(0)}]},
    )


def waveform_square(offset: float, amplitude: float, K: int, T: float = 1.0) -> PeriodicMatrixFunction:
    """offset + amplitude * (4/pi) * sum_{k>=0} sin(omega*(2k+1)*t)/(2k+1).

    The series is the unit square wave sgn(sin(omega*t)); an exact evaluator
    is attached so truncation never affects time-domain values.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    omega = 2.0 * math.pi / T

    def rule(k):
        if k == 0:
            return np.array([[complex(offset)]])
        if k % 2 == 0:
            return np.array([[0j]])
        return np.array([[-2j * amplitude / (math.pi * k)]])

    def exact(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        vals = offset + amplitude * np.sign(np.sin(omega * ts))
        return vals.reshape(-1, 1, 1).astype(complex)

    ph = {k: rule(k) for k in range(-K, K + 1)}
    return PeriodicMatrixFunction(
        1, 1, T, ph, phasor_rule=rule, exact=exact,
        description={"rows": 1, "cols": 1, "T": T, "terms": [
            {"kind": "square", "row": 0, "col": 0,
             "offset": offset, "amplitude": amplitude}]},
    )


def waveform_triangle(offset: float, amplitude: float, K: int, T: float = 1.0) -> PeriodicMatrixFunction:
    """offset + amplitude * (8/pi^2) * sum_{k>=0} cos(omega*(2k+1)*t)/(2k+1)^2.

    The series is the unit triangle wave with value 1 at t=0 and -1 at T/2.
    """
    if K < 1:
        raise ValueError("K must be >= 1")

    def rule(k):
        if k == 0:
            return np.array([[complex(offset)]])
        if k % 2 == 0:
            return np.array([[0j]])
        return np.array([[complex(4.0 * amplitude / (math.pi ** 2 * k ** 2))]])

    def exact(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        s = np.mod(ts / T, 1.0)
        tri = np.where(s <= 0.5, 1.0 - 4.0 * s, -3.0 + 4.0 * s)
        return (offset + amplitude * tri).reshape(-1, 1, 1).astype(complex)

    ph = {k: rule(k) for k in range(-K, K + 1)}
    return PeriodicMatrixFunction(
        1, 1, T, ph, phasor_rule=rule, exact=exact,
        description={"rows": 1, "cols": 1, "T": T, "terms": [
            {"kind": "triangle", "row": 0, "col": 0,
             "offset": offset, "amplitude": amplitude}]},
    )


def waveform_sawtooth(offset: float, amplitude: float, K: int, T: float = 1.0,
                      phase: float = 0.0) -> PeriodicMatrixFunction:
    """offset + amplitude * (2/pi) * sum_{k>=1} ((-1)^k / k) sin(k*(omega*t + phase)).

    The series equals -x/pi for x := omega*t + phase wrapped to (-pi, pi),
    i.e. a sawtooth ranging over (-amplitude, amplitude) with its jump at
    omega*t + phase = pi (mod 2*pi).  ``phase`` shifts the whole waveform in
    fundamental phase, so every harmonic k picks up the factor exp(j*k*phase).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    omega = 2.0 * math.pi / T

    def rule(k):
        if k == 0:
            return np.array([[complex(offset)]])
        sign = -1.0 if k % 2 else 1.0
        return np.array([[-1j * amplitude * sign * cmath.exp(1j * k * phase) / (math.pi * k)]])

    def exact(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        x = np.mod(omega * ts + phase + math.pi, 2.0 * math.pi) - math.pi
        return (offset + amplitude * (-x / math.pi)).reshape(-1, 1, 1).astype(complex)

    ph = {k: rule(k) for k in range(-K, K + 1)}
    return PeriodicMatrixFunction(
        1, 1, T, ph, phasor_rule=rule, exact=exact,
        description={"rows": 1, "cols": 1, "T": T, "terms": [
            {"kind": "sawtooth", "row": 0, "col": 0,
             "offset": offset, "amplitude": amplitude, "phase": phase}]},
    )


def waveform_trig_polynomial(terms, offset: float = 0.0, T: float = 1.0) -> PeriodicMatrixFunction:
    """A scalar trigonometric polynomial offset + sum of cos/sin harmonics.

    ``terms`` is an iterable of (kind, harmonic, coeff) with kind 'cos' or
    'sin' and harmonic a positive integer multiple of the fundamental.
    """
    ph: dict[int, complex] = {0: complex(offset)}
    json_terms = []
    if offset:
        json_terms.append({"kind": "const", "row": 0, "col": 0, "value": _cplx_json(offset)})
    for kind, h, c in terms:
        h = int(h)
        if h <= 0:
            raise ValueError("harmonic must be positive")
        if kind == "cos":
            ph[h] = ph.get(h, 0j) + c / 2.0
            ph[-h] = ph.get(-h, 0j) + c / 2.0
        elif kind == "sin":
            ph[h] = ph.get(h, 0j) - 1j * c / 2.0
            ph[-h] = ph.get(-h, 0j) + 1j * c / 2.0
        else:
            raise ValueError(f"unknown term kind {kind!r}")
        json_terms.append({"kind": kind, "row": 0, "col": 0,
                           "harmonic": h, "coeff": c})
    phasors = {k: np.array([[v]]) for k, v in ph.items()}
    return PeriodicMatrixFunction(
        1, 1, T, phasors, bandlimited=True,
        description={"rows": 1, "cols": 1, "T": T, "terms": json_terms},
    )


# ---------------------------------------------------------------------------
# Fourier analysis
# ---------------------------------------------------------------------------

def phasors_of(f, K: int, T: float = 1.0, resolution: int = 1024) -> PeriodicMatrixFunction:
    """Compute phasors of a time-domain function by uniform quadrature.

    ``f`` maps a scalar time to a matrix (or scalar); quadrature uses
    ``resolution`` uniform samples over one period, which for periodic
    integrands coincides with the trapezoidal rule.  Refuses resolutions
    below 4K+4 (aliasing).
    """
    if resolution < 4 * K + 4:
        raise ValueError(f"resolution {resolution} too small for K={K}; need >= {4 * K + 4}")
    ts = np.arange(resolution) * (T / resolution)
    samples = np.stack([np.atleast_2d(np.asarray(f(t), dtype=complex)) for t in ts])
    return _pmf_from_samples(samples, T, K)


def _pmf_from_samples(samples: np.ndarray, T: float, K: int) -> PeriodicMatrixFunction:
    """Phasors |k| <= K from uniform samples over one period (FFT)."""
    N, rows, cols = samples.shape
    spec = np.fft.fft(samples, axis=0) / N  # bin k holds phasor +k
    ph = {}
    for k in range(-K, K + 1):
        ph[k] = spec[k % N].copy()
    return PeriodicMatrixFunction(rows, cols, T, ph)


def pmf_from_uniform_samples(samples: np.ndarray, T: float, K: int,
                             exact=None) -> PeriodicMatrixFunction:
    """Build a function from N uniform samples over [0, T) with phasors to K.

    ``exact``, when given, is attached as the evaluator (e.g. a periodic
    interpolator over a denser grid).
    """
    pmf = _pmf_from_samples(np.asarray(samples, dtype=complex), T, K)
    if exact is not None:
        pmf = replace(pmf, exact=exact)
    return pmf


def evaluate(f: PeriodicMatrixFunction, t: float) -> np.ndarray:
    """Evaluate ``f`` at time ``t`` (exact evaluator if present, else synthesis)."""
    return f(t)


def periodic_interpolator(ts: np.ndarray, values: np.ndarray, T: float):
    """Linear interpolation of samples on [0, T], wrapped periodically.

    ``values`` has shape (len(ts), rows, cols); returns a vectorized
    evaluator suitable for ``PeriodicMatrixFunction.exact``.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=complex)

    def interp(query):
        q = np.mod(np.atleast_1d(np.asarray(query, dtype=float)), T)
        idx = np.searchsorted(ts, q, side="right") - 1
        idx = np.clip(idx, 0, len(ts) - 2)
        w = (q - ts[idx]) / (ts[idx + 1] - ts[idx])
        return values[idx] + w[:, None, None] * (values[idx + 1] - values[idx])

    return interp


# ---------------------------------------------------------------------------
# sliding Fourier decomposition of trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhasorTrajectory:
    """Sliding-window phasors X_{i,k}(t) of a sampled trajectory.

    ``X`` has shape (len(ts), n, 2m+1) with harmonic axis k = -m..m;
    entries at times t < T (insufficient history) are NaN and flagged
    unavailable.
    """

    n: int
    m: int
    T: float
    ts: np.ndarray
    X: np.ndarray
    available: np.ndarray

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T


def sliding_fourier(x: np.ndarray, ts: np.ndarray, T: float, m: int) -> PhasorTrajectory:
    """Sliding Fourier decomposition of a uniformly sampled trajectory.

    ``x`` has shape (len(ts), n); the grid step must divide T.  Windows are
    backward, [t - T, t]; indices with t < T are marked unavailable.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.ndim == 2 and x.shape[0] == 1 and len(ts) != 1:
        x = x.T
    ts = np.asarray(ts, dtype=float)
    N, n = x.shape
    h = ts[1] - ts[0]
    if not np.allclose(np.diff(ts), h):
        raise ValueError("trajectory must be uniformly sampled")
    per = T / h
    if abs(per - round(per)) > 1e-9:
        raise ValueError("grid step must divide the period")
    per = int(round(per))
    omega = 2.0 * math.pi / T

    X = np.full((N, n, 2 * m + 1), np.nan, dtype=complex)
    available = np.zeros(N, dtype=bool)
    for kk in range(-m, m + 1):
        integrand = x * np.exp(-1j * omega * kk * ts)[:, None]
        # cumulative trapezoid with zero origin
        cum = np.zeros((N, n), dtype=complex)
        cum[1:] = np.cumsum(0.5 * h * (integrand[1:] + integrand[:-1]), axis=0)
        X[per:, :, kk + m] = (cum[per:] - cum[:-per]) / T
    available[per:] = True
    return PhasorTrajectory(n=n, m=m, T=T, ts=ts, X=X, available=available)


def reconstruct(traj: PhasorTrajectory, t: float):
    """Reconstruct the time signal from sliding phasors at an on-grid time t.

    Returns (value, boundary_flag): the synthesis sum plus the (T/2) * dX_0/dt
    correction, with the derivative by central finite difference; at the ends
    of the available range a one-sided difference is used and flagged.
    """
    ts = traj.ts
    h = ts[1] - ts[0]
    i = int(round((t - ts[0]) / h))
    if i < 0 or i >= len(ts) or abs(ts[i] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("t must lie on the trajectory grid")
    if not traj.available[i]:
        raise ValueError("phasors unavailable at this t (insufficient history)")
    m = traj.m
    ks = np.arange(-m, m + 1)
    synth = traj.X[i] @ np.exp(1j * traj.omega * ks * t)
    lo_ok = i - 1 >= 0 and traj.available[i - 1]
    hi_ok = i + 1 < len(ts) and traj.available[i + 1]
    X0 = traj.X[:, :, m]
    if lo_ok and hi_ok:
        dX0 = (X0[i + 1] - X0[i - 1]) / (2 * h)
        boundary = False
    elif hi_ok:
        dX0 = (X0[i + 1] - X0[i]) / h
        boundary = True
    elif lo_ok:
        dX0 = (X0[i] - X0[i - 1]) / h
        boundary = True
    else:
        raise ValueError("no neighboring samples to estimate dX0/dt")
    value = synth + (traj.T / 2.0) * dX0
    return value.real, boundary


# ---------------------------------------------------------------------------
# JSON descriptions
# ---------------------------------------------------------------------------

def _cplx_json(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


_TERM_BUILDERS = {
    "const": lambda p, T, K: constant(complex(p["value"]["re"], p["value"]["im"])
                                      if isinstance(p["value"], dict) else p["value"], T),
    "cos": lambda p, T, K: waveform_trig_polynomial([("cos", p["harmonic"], p["coeff"])], 0.0, T),
    "sin": lambda p, T, K: waveform_trig_polynomial([("sin", p["harmonic"], p["coeff"])], 0.0, T),
    "square": lambda p, T, K: waveform_square(p.get("offset", 0.0), p["amplitude"], K, T),
    "triangle": lambda p, T, K: waveform_triangle(p.get("offset", 0.0), p["amplitude"], K, T),
    "sawtooth": lambda p, T, K: waveform_sawtooth(p.get("offset", 0.0), p["amplitude"], K, T,
                                                  phase=p.get("phase", 0.0)),
}


def from_json_description(desc: dict, K: int = 16) -> PeriodicMatrixFunction:
    """Build a function from {rows, cols, T, terms: [...]} (see README schema).

    Each term carries its (row, col) slot and kind-specific parameters;
    terms in the same slot are summed.  ``K`` sets the materialized order
    for non-bandlimited kinds.
    """
    rows, cols, T = desc["rows"], desc["cols"], desc["T"]
    zero = constant(0.0, T)
    grid = [[zero for _ in range(cols)] for _ in range(rows)]
    for term in desc["terms"]:
        i, j = term["row"], term["col"]
        part = _TERM_BUILDERS[term["kind"]](term, T, K)
        grid[i][j] = grid[i][j] + part
    pmf = PeriodicMatrixFunction.from_scalar_entries(grid)
    return replace(pmf, description=desc)


def to_json_description(f: PeriodicMatrixFunction) -> dict:
    """Serialize a function built from terms; falls back to raw phasors."""
    if f.description is not None:
        return f.description
    terms = []
    for k in sorted(f.phasors):
        v = f.phasors[k]
        for i in range(f.rows):
            for j in range(f.cols):
                z = v[i, j]
                if z == 0:
                    continue
                if k == 0:
                    terms.append({"kind": "const", "row": i, "col": j, "value": _cplx_json(z)})
                elif k > 0:
                    # merge +k/-k pairs into cos/sin terms
                    terms.append({"kind": "cos", "row": i, "col": j,
                                  "harmonic": k, "coeff": 2 * z.real})
                    if abs(z.imag) > 0:
                        terms.append({"kind": "sin", "row": i, "col": j,
                                      "harmonic": k, "coeff": -2 * z.imag})
    return {"rows": f.rows, "cols": f.cols, "T": f.T, "terms": terms}
