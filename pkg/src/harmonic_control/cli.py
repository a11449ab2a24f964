"""Command-line interface: full case-study runner plus per-stage subcommands.

Every subcommand reads a JSON config (schema-validated; unknown fields are
rejected), writes CSV/JSON artifacts into --out, and is composable through
files: the gain JSON written by ``design`` is directly consumable by
``simulate``.  Exit codes: 0 success, 2 config error, 3 numerical failure
(the failing stage is named on stderr).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import exports
from .casestudy import BENCHMARK_T, StageError, benchmark_system, run_case_study
from .design import (NotInvertibleError, design_direct, design_sufficient,
                     harmonic_equilibrium, nearest_equilibrium)
from .floquet import (DefectiveMonodromyError, MonodromyConvergenceError,
                      factorize)
from .operators import toeplitz_lift
from .periodic import MissingPhasorError, from_json_description
from .simulate import simulate, tracking_scenario
from .sylvester import SpectralClashError, convergence_sweep

__all__ = ["main"]

CONFIG_ERROR = 2
NUMERICAL_ERROR = 3

_NUMERICAL_ERRORS = (SpectralClashError, MonodromyConvergenceError,
                     DefectiveMonodromyError, NotInvertibleError,
                     MissingPhasorError, np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# JSON schemas
# ---------------------------------------------------------------------------

_COMPLEX = {
    "type": "object",
    "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
    "required": ["re"],
    "additionalProperties": False,
}

_TERM = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["const", "cos", "sin", "square", "triangle",
                          "sawtooth"]},
        "row": {"type": "integer", "minimum": 0},
        "col": {"type": "integer", "minimum": 0},
        "value": {"oneOf": [{"type": "number"}, _COMPLEX]},
        "harmonic": {"type": "integer", "minimum": 1},
        "coeff": {"type": "number"},
        "offset": {"type": "number"},
        "amplitude": {"type": "number"},
        "phase": {"type": "number"},
    },
    "required": ["kind", "row", "col"],
    "additionalProperties": False,
}

_FUNCTION = {
    "type": "object",
    "properties": {
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "terms": {"type": "array", "items": _TERM},
    },
    "required": ["rows", "cols", "T", "terms"],
    "additionalProperties": False,
}

_SYSTEM = {
    "oneOf": [
        {"const": "benchmark"},
        {
            "type": "object",
            "properties": {"A": _FUNCTION, "B": _FUNCTION},
            "required": ["A", "B"],
            "additionalProperties": False,
        },
    ]
}

_MATRIX = {"type": "array",
           "items": {"type": "array",
                     "items": {"oneOf": [{"type": "number"}, _COMPLEX]}}}

_DESIGN = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "sufficient"},
                           "alpha": {"type": "number"}},
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "direct"},
                           "G": _FUNCTION,
                           "Lambda": _MATRIX},
            "required": ["kind", "G", "Lambda"],
            "additionalProperties": False,
        },
    ]
}

_SEGMENT = {
    "type": "object",
    "properties": {
        "t_start": {"type": "number"},
        "u_ref": _FUNCTION,
        "x_desired": _FUNCTION,
        "m": {"type": "integer", "minimum": 0},
    },
    "required": ["t_start"],
    "additionalProperties": False,
}

SCHEMAS = {
    "phasors": {
        "type": "object",
        "properties": {"function": _FUNCTION, "order": {"type": "integer"}},
        "required": ["function"],
        "additionalProperties": False,
    },
    "lift": {
        "type": "object",
        "properties": {"function": _FUNCTION, "m": {"type": "integer"}},
        "required": ["function"],
        "additionalProperties": False,
    },
    "floquet": {
        "type": "object",
        "properties": {"system": _SYSTEM, "steps": {"type": "integer"}},
        "required": ["system"],
        "additionalProperties": False,
    },
    "sylvester": {
        "type": "object",
        "properties": {"system": _SYSTEM, "design": _DESIGN,
                       "m": {"type": "array", "items": {"type": "integer"}}},
        "required": ["system", "design"],
        "additionalProperties": False,
    },
    "design": {
        "type": "object",
        "properties": {"system": _SYSTEM, "design": _DESIGN,
                       "m": {"type": "integer"}},
        "required": ["system", "design"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "system": _SYSTEM,
            "gain": {"oneOf": [{"type": "string"}, {"type": "object"}]},
            "x0": {"type": "array", "items": {"type": "number"}},
            "step": {"type": "number", "exclusiveMinimum": 0},
            "t_end": {"type": "number"},
            "segments": {"type": "array", "items": _SEGMENT},
        },
        "required": ["system", "gain", "x0", "t_end"],
        "additionalProperties": False,
    },
    "equilibrium": {
        "type": "object",
        "properties": {"system": _SYSTEM, "u_ref": _FUNCTION,
                       "x_desired": _FUNCTION, "m": {"type": "integer"}},
        "required": ["system"],
        "additionalProperties": False,
    },
}


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _load_config(path: str, command: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(
            f"config violates the {command!r} schema at "
            f"{'/'.join(str(p) for p in exc.absolute_path) or '<root>'}: "
            f"{exc.message}") from exc
    return raw


def _build_system(desc, order: int = 32):
    if desc == "benchmark":
        return benchmark_system()
    return (from_json_description(desc["A"], K=order),
            from_json_description(desc["B"], K=order))


def _parse_matrix(rows) -> np.ndarray:
    return np.array([[exports.complex_from_json(v) for v in row]
                     for row in rows], dtype=complex)


def parse_lambda_spec(spec: str) -> np.ndarray:
    """Parse --lambda values like ``diag(-10,-12)`` or a JSON matrix."""
    spec = spec.strip()
    m = re.fullmatch(r"diag\((.+)\)", spec)
    if m:
        try:
            vals = [complex(v.replace(" ", "").replace("i", "j"))
                    for v in m.group(1).split(",")]
        except ValueError as exc:
            raise ConfigError(f"cannot parse --lambda {spec!r}: {exc}") from exc
        return np.diag(vals)
    try:
        return _parse_matrix(json.loads(spec))
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        raise ConfigError(f"cannot parse --lambda {spec!r}: {exc}") from exc


def _parse_m_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --m {text!r}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _design_from_config(A, B, cfg_design, m, alpha_flag, lambda_flag, floquet):
    if cfg_design["kind"] == "sufficient":
        alpha = alpha_flag if alpha_flag is not None else cfg_design.get("alpha", 1.0)
        if lambda_flag is not None:
            raise ConfigError("--lambda conflicts with the sufficient design "
                              "(it fixes Lambda = -J* - alpha*I)")
        gain = design_sufficient(A, B, alpha=alpha, m=m, floquet=floquet)
        return None, gain
    G = from_json_description(cfg_design["G"], K=2 * m)
    Lam = (parse_lambda_spec(lambda_flag) if lambda_flag is not None
           else _parse_matrix(cfg_design["Lambda"]))
    outcome = design_direct(A, B, G, Lam, m, floquet=floquet)
    return outcome, outcome.gain


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_case_study(args) -> int:
    out = _out_dir(args)
    kwargs = {}
    if args.steps is not None:
        kwargs["steps"] = args.steps
    if args.m is not None:
        kwargs["m_list"] = _parse_m_list(args.m)
    if args.seed is not None:
        kwargs["seed"] = args.seed
    summary = run_case_study(out, **kwargs)
    print(f"case study complete; {len(summary['stages'])} stages -> {out}")
    return 0


def _cmd_phasors(args) -> int:
    cfg = _load_config(args.config, "phasors")
    order = cfg.get("order", 16)
    if args.m is not None:
        order = _parse_m_list(args.m)[0]
    f = from_json_description(cfg["function"], K=order)
    out = _out_dir(args)
    exports.write_phasor_table_csv(out / "phasors.csv", f, order)
    print(f"wrote phasors up to |k| <= {order} -> {out / 'phasors.csv'}")
    return 0


def _cmd_lift(args) -> int:
    cfg = _load_config(args.config, "lift")
    m = cfg.get("m", 4)
    if args.m is not None:
        m = _parse_m_list(args.m)[0]
    f = from_json_description(cfg["function"], K=2 * m)
    out = _out_dir(args)
    exports.write_matrix_csv(out / "lift.csv", toeplitz_lift(f, m).matrix)
    print(f"wrote order-{m} block-Toeplitz lift -> {out / 'lift.csv'}")
    return 0


def _cmd_floquet(args) -> int:
    cfg = _load_config(args.config, "floquet")
    steps = args.steps if args.steps is not None else cfg.get("steps", 20000)
    A, _ = _build_system(cfg["system"])
    F = factorize(A, steps=steps)
    out = _out_dir(args)
    exports.write_json(out / "floquet.json", {
        "exponents": [exports.complex_to_json(z) for z in F.exponents],
        "monodromy": [[exports.complex_to_json(z) for z in row]
                      for row in F.monodromy.astype(complex)],
        "periodicity_error": F.periodicity_error,
    })
    exports.write_function_trace_csv(out / "floquet_V.csv", F.V)
    print(f"Floquet exponents: {np.round(F.exponents, 6)} -> {out}")
    return 0


def _cmd_sylvester(args) -> int:
    cfg = _load_config(args.config, "sylvester")
    m_list = cfg.get("m", [4, 6, 8, 10])
    if args.m is not None:
        m_list = _parse_m_list(args.m)
    A, B = _build_system(cfg["system"])
    m_max = max(m_list)
    F = factorize(A, steps=args.steps or 20000)
    if cfg["design"]["kind"] == "sufficient":
        alpha = args.alpha if args.alpha is not None else cfg["design"].get("alpha", 1.0)
        gain = design_sufficient(A, B, alpha=alpha, m=m_max, floquet=F)
        G, Lam = gain.G, gain.Lambda
    else:
        G = from_json_description(cfg["design"]["G"], K=2 * m_max)
        Lam = (parse_lambda_spec(args.lam) if args.lam is not None
               else _parse_matrix(cfg["design"]["Lambda"]))
    rows = convergence_sweep(A, B, G, Lam, m_list)
    out = _out_dir(args)
    for r in rows:
        exports.write_phasor_table_csv(
            out / f"P_phasors_m{r['m']}.csv", r["solution"].P_timedomain, r["m"])
    exports.write_json(out / "sweep.json", [
        {k: r[k] for k in ("m", "delta_vs_finest", "algebraic_residual",
                           "differential_residual")} for r in rows])
    print(f"solved m={m_list} -> {out}")
    return 0


def _cmd_design(args) -> int:
    cfg = _load_config(args.config, "design")
    m = cfg.get("m", 10)
    if args.m is not None:
        m = _parse_m_list(args.m)[0]
    A, B = _build_system(cfg["system"])
    F = factorize(A, steps=args.steps or 20000)
    outcome, gain = _design_from_config(A, B, cfg["design"], m,
                                        args.alpha, args.lam, F)
    out = _out_dir(args)
    if gain is None:
        exports.write_json(out / "design.json", exports.outcome_to_json(outcome))
        print(f"design NotInvertible (min |det P| = "
              f"{outcome.certificate.min_abs_det:.3e}) -> {out / 'design.json'}")
        return 0
    exports.write_json(out / "gain.json", exports.gain_to_json(gain))
    exports.write_function_trace_csv(out / "K_trace.csv", gain.K, periods=2.0)
    print(f"design ok (min |det P| = {gain.certificate.min_abs_det:.3e}) "
          f"-> {out / 'gain.json'}")
    return 0


def _segments_from_config(A, B, segs_cfg):
    segments = []
    for seg in segs_cfg:
        m_eq = seg.get("m", 30)
        if "u_ref" in seg:
            u = from_json_description(seg["u_ref"], K=m_eq)
            segments.append((seg["t_start"], harmonic_equilibrium(A, B, u, m_eq)))
        elif "x_desired" in seg:
            xd = from_json_description(seg["x_desired"], K=m_eq).materialize(m_eq)
            b = 2 * m_eq + 1
            X_d = np.empty(A.rows * b, dtype=complex)
            for i in range(A.rows):
                for k in range(-m_eq, m_eq + 1):
                    X_d[i * b + k + m_eq] = xd.phasor(k)[i, 0]
            segments.append((seg["t_start"], nearest_equilibrium(A, B, X_d, m_eq)))
        else:
            segments.append((seg["t_start"], None))
    return segments


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config, "simulate")
    A, B = _build_system(cfg["system"])
    gain_obj = cfg["gain"]
    if isinstance(gain_obj, str):
        gain_obj = json.loads(Path(gain_obj).read_text())
    if "gain" in gain_obj:       # a design.json wrapping the gain
        gain_obj = gain_obj["gain"]
    gain = exports.gain_from_json(gain_obj)
    x0 = np.asarray(cfg["x0"], dtype=float)
    step = cfg.get("step", 1e-4)
    t_end = cfg["t_end"]
    out = _out_dir(args)
    if cfg.get("segments"):
        segments = _segments_from_config(A, B, cfg["segments"])
        res = tracking_scenario(gain, A, B, segments, x0, step=step, t_end=t_end)
    else:
        n = int(round(t_end / step))
        grid = np.arange(2 * n + 1) * (step / 2.0)
        Kv = gain.K.eval_grid(grid).real
        half = step / 2.0
        res = simulate(A, B, lambda t, x: -(Kv[int(round(t / half))] @ x),
                       x0, (0.0, t_end), step)
    exports.write_simulation_csv(out / "simulation.csv", res)
    status = "escaped" if res.escaped else "ok"
    print(f"simulation {status}; final ||x|| = "
          f"{float(np.linalg.norm(res.x[-1])):.6e} -> {out / 'simulation.csv'}")
    return 0


def _cmd_equilibrium(args) -> int:
    cfg = _load_config(args.config, "equilibrium")
    if ("u_ref" in cfg) == ("x_desired" in cfg):
        raise ConfigError("provide exactly one of 'u_ref' or 'x_desired'")
    m = cfg.get("m", 10)
    if args.m is not None:
        m = _parse_m_list(args.m)[0]
    A, B = _build_system(cfg["system"])
    if "u_ref" in cfg:
        u = from_json_description(cfg["u_ref"], K=m)
        eq = harmonic_equilibrium(A, B, u, m)
    else:
        xd = from_json_description(cfg["x_desired"], K=m).materialize(m)
        b = 2 * m + 1
        X_d = np.empty(A.rows * b, dtype=complex)
        for i in range(A.rows):
            for k in range(-m, m + 1):
                X_d[i * b + k + m] = xd.phasor(k)[i, 0]
        eq = nearest_equilibrium(A, B, X_d, m)
    out = _out_dir(args)
    exports.write_json(out / "equilibrium.json", exports.equilibrium_to_json(eq))
    exports.write_function_trace_csv(out / "x_ref.csv", eq.x_ref)
    exports.write_function_trace_csv(out / "u_ref.csv", eq.u_ref)
    print(f"equilibrium residual {eq.residual:.3e} -> {out}")
    return 0


_COMMANDS = {
    "case-study": (_cmd_case_study, False),
    "phasors": (_cmd_phasors, True),
    "lift": (_cmd_lift, True),
    "floquet": (_cmd_floquet, True),
    "sylvester": (_cmd_sylvester, True),
    "design": (_cmd_design, True),
    "simulate": (_cmd_simulate, True),
    "equilibrium": (_cmd_equilibrium, True),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmonic-control",
        description="Harmonic modeling and periodic pole placement for "
                    "linear time-periodic systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, needs_config) in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config,
                       help="path to the JSON config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--m", default=None,
                       help="truncation order(s), comma-separated")
        p.add_argument("--alpha", type=float, default=None,
                       help="decay parameter for the sufficient design")
        p.add_argument("--lambda", dest="lam", default=None,
                       help="target spectrum, e.g. 'diag(-10,-12)'")
        p.add_argument("--steps", type=int, default=None,
                       help="integration steps per period")
        p.add_argument("--seed", type=int, default=None, help="random seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler, _ = _COMMANDS[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except StageError as exc:
        print(f"numerical failure in stage {exc.stage!r}: {exc.cause}",
              file=sys.stderr)
        return NUMERICAL_ERROR
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure in stage {args.command!r}: {exc}",
              file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
