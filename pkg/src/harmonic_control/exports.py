"""Serialization helpers: CSV traces and JSON objects with explicit complex parts.

Complex scalars are serialized as {"re": ..., "im": ...} in JSON and as two
adjacent ``<name>_re``/``<name>_im`` columns in CSV.  All floats are written
with ``repr`` so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .design import DesignOutcome, GainSchedule, HarmonicEquilibrium
from .operators import InvertibilityCertificate
from .periodic import PeriodicMatrixFunction
from .simulate import SimulationResult
from .sylvester import HarmonicSylvesterSolution

__all__ = [
    "complex_to_json",
    "complex_from_json",
    "write_matrix_csv",
    "write_phasor_table_csv",
    "write_function_trace_csv",
    "write_simulation_csv",
    "gain_to_json",
    "gain_from_json",
    "equilibrium_to_json",
    "sylvester_to_json",
    "outcome_to_json",
    "write_json",
]


def complex_to_json(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(obj) -> complex:
    if isinstance(obj, dict):
        return complex(obj["re"], obj.get("im", 0.0))
    return complex(obj)


def _fmt(x) -> str:
    return repr(float(x))


def write_matrix_csv(path, M: np.ndarray, row_labels=None) -> None:
    """Write a (possibly complex) matrix with re/im column pairs."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        header = []
        if row_labels is not None:
            header.append("row")
        for j in range(M.shape[1]):
            header += [f"c{j}_re", f"c{j}_im"]
        w.writerow(header)
        for i in range(M.shape[0]):
            row = [] if row_labels is None else [row_labels[i]]
            for j in range(M.shape[1]):
                row += [_fmt(M[i, j].real), _fmt(M[i, j].imag)]
            w.writerow(row)


def write_phasor_table_csv(path, f: PeriodicMatrixFunction, K: int) -> None:
    """Phasors of every matrix entry for |k| <= K, one row per harmonic."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        header = ["k"]
        for i in range(f.rows):
            for j in range(f.cols):
                header += [f"p{i}{j}_re", f"p{i}{j}_im", f"p{i}{j}_abs"]
        w.writerow(header)
        for k in range(-K, K + 1):
            ph = f.phasor(k)
            row = [k]
            for i in range(f.rows):
                for j in range(f.cols):
                    z = ph[i, j]
                    row += [_fmt(z.real), _fmt(z.imag), _fmt(abs(z))]
            w.writerow(row)


def write_function_trace_csv(path, f: PeriodicMatrixFunction,
                             n_samples: int = 512, periods: float = 1.0) -> None:
    """Time traces of every matrix entry over ``periods`` periods."""
    ts = np.arange(n_samples) * (periods * f.T / n_samples)
    vals = f.eval_grid(ts)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        header = ["t"]
        for i in range(f.rows):
            for j in range(f.cols):
                header += [f"f{i}{j}_re", f"f{i}{j}_im"]
        w.writerow(header)
        for idx, t in enumerate(ts):
            row = [_fmt(t)]
            for i in range(f.rows):
                for j in range(f.cols):
                    z = vals[idx, i, j]
                    row += [_fmt(z.real), _fmt(z.imag)]
            w.writerow(row)


def write_simulation_csv(path, result: SimulationResult) -> None:
    """t, x, u (and z, x_ref, e when present) as plain real columns."""
    path = Path(path)
    cols: list[tuple[str, np.ndarray]] = [("t", result.ts)]

    def add_block(name, arr, complex_ok=False):
        if arr is None:
            return
        arr = np.asarray(arr)
        for j in range(arr.shape[1]):
            if np.iscomplexobj(arr):
                cols.append((f"{name}{j}_re", arr[:, j].real))
                cols.append((f"{name}{j}_im", arr[:, j].imag))
            else:
                cols.append((f"{name}{j}", arr[:, j]))

    add_block("x", result.x)
    add_block("u", result.u)
    add_block("z", result.z)
    add_block("xref", result.x_ref)
    add_block("e", result.e)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([name for name, _ in cols])
        for i in range(len(result.ts)):
            w.writerow([_fmt(arr[i]) for _, arr in cols])


def _phasors_to_json(f: PeriodicMatrixFunction) -> dict:
    return {
        "rows": f.rows,
        "cols": f.cols,
        "T": f.T,
        "bandlimited": f.bandlimited,
        "phasors": {
            str(k): [[complex_to_json(v[i, j]) for j in range(f.cols)]
                     for i in range(f.rows)]
            for k, v in sorted(f.phasors.items())
        },
    }


def _phasors_from_json(obj: dict) -> PeriodicMatrixFunction:
    rows, cols = obj["rows"], obj["cols"]
    ph = {}
    for ks, mat in obj["phasors"].items():
        ph[int(ks)] = np.array(
            [[complex_from_json(mat[i][j]) for j in range(cols)]
             for i in range(rows)], dtype=complex)
    return PeriodicMatrixFunction(rows, cols, obj["T"], ph,
                                  bandlimited=obj.get("bandlimited", True))


def _certificate_to_json(c: InvertibilityCertificate) -> dict:
    return {
        "invertible": c.invertible,
        "min_abs_det": c.min_abs_det,
        "argmin_t": c.argmin_t,
        "threshold": c.threshold,
        "grid": c.grid,
        "sign_change": c.sign_change,
    }


def _certificate_from_json(obj: dict) -> InvertibilityCertificate:
    return InvertibilityCertificate(**obj)


def gain_to_json(gain: GainSchedule) -> dict:
    """Serializable form of a gain schedule: {T, m, Lambda, K/P phasors, certificate}."""
    Lam = gain.Lambda
    return {
        "T": gain.T,
        "m": gain.m,
        "Lambda": [[complex_to_json(Lam[i, j]) for j in range(Lam.shape[1])]
                   for i in range(Lam.shape[0])],
        "K_phasors": _phasors_to_json(gain.K),
        "P_phasors": _phasors_to_json(gain.P),
        "G_phasors": _phasors_to_json(gain.G),
        "certificate": _certificate_to_json(gain.certificate),
        "imag_residue": gain.imag_residue,
    }


def gain_from_json(obj: dict) -> GainSchedule:
    """Rebuild a gain schedule from its JSON form (phasor-synthesis evaluators)."""
    n = obj["P_phasors"]["rows"]
    Lam = np.array([[complex_from_json(obj["Lambda"][i][j]) for j in range(n)]
                    for i in range(n)], dtype=complex)
    return GainSchedule(
        K=_phasors_from_json(obj["K_phasors"]),
        G=_phasors_from_json(obj["G_phasors"]),
        Lambda=Lam,
        P=_phasors_from_json(obj["P_phasors"]),
        certificate=_certificate_from_json(obj["certificate"]),
        m=obj["m"],
        sylvester=None,
        imag_residue=obj["imag_residue"],
    )


def equilibrium_to_json(eq: HarmonicEquilibrium) -> dict:
    return {
        "m": eq.m,
        "X_ref": [complex_to_json(z) for z in eq.X_ref],
        "U_ref": [complex_to_json(z) for z in eq.U_ref],
        "residual": eq.residual,
        "distance": eq.distance,
        "rank_deficient": eq.rank_deficient,
    }


def sylvester_to_json(sol: HarmonicSylvesterSolution) -> dict:
    return {
        "n": sol.n,
        "m": sol.m,
        "T": sol.T,
        "Lambda": [[complex_to_json(sol.Lambda[i, j]) for j in range(sol.n)]
                   for i in range(sol.n)],
        "P_phasors": _phasors_to_json(sol.P_timedomain),
        "residuals": sol.residuals,
    }


def outcome_to_json(outcome: DesignOutcome) -> dict:
    data = {
        "status": outcome.status,
        "certificate": _certificate_to_json(outcome.certificate),
        "sylvester_residuals": outcome.sylvester.residuals,
    }
    if outcome.gain is not None:
        data["gain"] = gain_to_json(outcome.gain)
    return data


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
