"""The 2-state benchmark system with square/triangle/sawtooth coefficients.

A(t) =  [1 + square(t),            2 + 2*triangle(t);
         -1 + sawtooth(t, pi/4),   trig polynomial      ]
B(t) =  [1 + 2 cos(2 w t) + 4 sin(6 w t); 0],   T = 1, w = 2*pi.

The system is open-loop unstable (Floquet exponents close to 1 +/- 1.64j).
"""

from __future__ import annotations

import math

import numpy as np

from .periodic import (
    PeriodicMatrixFunction,
    constant,
    waveform_sawtooth,
    waveform_square,
    waveform_triangle,
    waveform_trig_polynomial,
)

__all__ = ["benchmark_system", "BENCHMARK_T", "run_case_study", "StageError"]

BENCHMARK_T = 1.0


def benchmark_system(K: int = 64) -> tuple[PeriodicMatrixFunction, PeriodicMatrixFunction]:
    """Return (A, B) of the benchmark LTP system, phasors stored to order K.

    The square/triangle/sawtooth entries carry closed-form phasor rules, so
    any larger order can be materialized later.  The sawtooth entry is the
    phase-advanced sawtooth sum_{k>=1} (-1)^k sin(k(w t + pi/4)) * 2/(pi k).
    """
    T = BENCHMARK_T
    a11 = waveform_square(1.0, 1.0, K, T)
    a12 = waveform_triangle(2.0, 2.0, K, T)
    a21 = waveform_sawtooth(-1.0, 1.0, K, T, phase=math.pi / 4.0)
    # 1 - 2 sin(w t) - 2 sin(3 w t) + 2 cos(3 w t) + 2 cos(5 w t),  w = 2 pi
    a22 = waveform_trig_polynomial(
        [("sin", 1, -2.0), ("sin", 3, -2.0), ("cos", 3, 2.0), ("cos", 5, 2.0)],
        offset=1.0, T=T)
    A = PeriodicMatrixFunction.from_scalar_entries([[a11, a12], [a21, a22]])

    b11 = waveform_trig_polynomial(
        [("cos", 2, 2.0), ("sin", 6, 4.0)], offset=1.0, T=T)
    B = PeriodicMatrixFunction.from_scalar_entries([[b11], [constant(0.0, T)]])
    return A, B


class StageError(RuntimeError):
    """A case-study stage failed; carries the stage name for CLI reporting."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _segment_ratios(res, boundaries):
    """Tracking-error ratio (end over start) per segment of a simulation."""
    import numpy as np

    ratios = []
    for lo, hi in boundaries:
        i0 = int(round((lo - res.ts[0]) / res.step))
        i1 = min(int(round((hi - res.ts[0]) / res.step)), len(res.ts) - 1)
        if hi < res.ts[-1]:
            i1 -= 1  # sample before the reference switches
        e0 = float(np.linalg.norm(res.e[i0]))
        e1 = float(np.linalg.norm(res.e[i1]))
        ratios.append(e1 / e0 if e0 > 0 else 0.0)
    return ratios


def run_case_study(out_dir, steps: int = 20000, m_list=(4, 6, 8, 10),
                   sim_step: float = 2e-4, seed: int = 0) -> dict:
    """Run the full benchmark scenario and write all artifacts to ``out_dir``.

    Emits Floquet data, Sylvester phasor tables and traces over the m-sweep,
    gain traces, tracking runs for both pole choices, the non-invertible
    counter-example report with its finite-escape probe, and a summary JSON
    with every headline metric.  Returns the summary dict.
    """
    from pathlib import Path

    import numpy as np

    from . import exports
    from .design import (design_direct, design_sufficient, harmonic_equilibrium,
                         nearest_equilibrium, observability_check,
                         closed_loop_pole_check)
    from .floquet import factorize
    from .operators import central_spectrum, harmonic_state_operator
    from .periodic import constant
    from .simulate import (decay_rate, riccati_escape_probe, simulate,
                           tracking_scenario, verify_z_dynamics)
    from .sylvester import convergence_sweep

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary: dict = {"T": BENCHMARK_T, "steps": steps, "m_list": list(m_list)}
    T = BENCHMARK_T
    omega = 2.0 * math.pi / T
    m_design = max(m_list)

    def stage(name):
        summary.setdefault("stages", []).append(name)
        return name

    # -- system and Floquet data ------------------------------------------
    try:
        stage("floquet")
        A, B = benchmark_system()
        F = factorize(A, steps=steps)
        exports.write_function_trace_csv(out / "floquet_V.csv", F.V)
        exports.write_json(out / "floquet.json", {
            "exponents": [exports.complex_to_json(z) for z in F.exponents],
            "monodromy": [[exports.complex_to_json(z) for z in row]
                          for row in F.monodromy.astype(complex)],
            "periodicity_error": F.periodicity_error,
        })
        summary["floquet_exponents"] = [exports.complex_to_json(z)
                                        for z in F.exponents]

        # open-loop harmonic spectrum deviation in the central band
        H = harmonic_state_operator(A.materialize(2 * m_design), m_design)
        spec = central_spectrum(H, omega, keep=6)
        pred = np.array([l + 1j * omega * k
                         for l in F.exponents for k in range(-4, 5)])
        summary["open_loop_spectrum_deviation"] = float(
            max(np.min(np.abs(pred - s)) for s in spec))
    except Exception as exc:  # noqa: BLE001 - stage boundary
        raise StageError("floquet", exc) from exc

    # -- Sylvester sweep with the sufficient recipe ------------------------
    try:
        stage("sylvester")
        gain_suff = design_sufficient(A, B, alpha=1.0, m=m_design, floquet=F)
        sweep_orders = sorted(set(m_list) | {12})
        rows = convergence_sweep(A, B, gain_suff.G, gain_suff.Lambda, sweep_orders)
        summary["sylvester_sweep"] = [
            {k: r[k] for k in ("m", "delta_vs_finest", "algebraic_residual",
                               "differential_residual")} for r in rows]
        for r in rows:
            sol = r["solution"]
            exports.write_phasor_table_csv(
                out / f"P_phasors_m{r['m']}.csv", sol.P_timedomain, r["m"])
            exports.write_function_trace_csv(
                out / f"P_trace_m{r['m']}.csv", sol.P_timedomain)
        exports.write_function_trace_csv(out / "K_trace.csv", gain_suff.K,
                                         periods=2.0)
        exports.write_json(out / "gain_sufficient.json",
                           exports.gain_to_json(gain_suff))
    except Exception as exc:
        raise StageError("sylvester", exc) from exc

    # -- transformed-coordinate check and decay rate -----------------------
    try:
        stage("regulation")
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal(2)
        summary["z_dynamics_deviation"] = verify_z_dynamics(
            gain_suff, A, B, x0, (0.0, 3 * T), step=sim_step)
        grid = np.arange(2 * int(round(8 * T / sim_step)) + 1) * (sim_step / 2)
        Kv = gain_suff.K.eval_grid(grid).real
        half = sim_step / 2.0
        res = simulate(A, B, lambda t, x: -(Kv[int(round(t / half))] @ x),
                       np.array([1.0, -0.5]), (0.0, 8 * T), sim_step)
        summary["decay_rate"] = decay_rate(res, t0=1.0, n_periods=6, T=T)
        summary["decay_rate_target"] = math.exp(-2.0 * T)
    except Exception as exc:
        raise StageError("regulation", exc) from exc

    # -- tracking scenarios for both pole choices --------------------------
    try:
        stage("tracking")
        from .periodic import waveform_trig_polynomial, PeriodicMatrixFunction
        u_mid = PeriodicMatrixFunction.from_scalar_entries(
            [[waveform_trig_polynomial([("cos", 1, 1.0)], offset=1.0, T=T)]])
        eq_mid = harmonic_equilibrium(A, B, u_mid, m=120)
        m_eq = 30
        X_d = np.zeros(2 * (2 * m_eq + 1), dtype=complex)
        X_d[m_eq - 1] = 0.125
        X_d[m_eq + 1] = 0.125
        eq_final = nearest_equilibrium(A, B, X_d, m=m_eq)
        exports.write_json(out / "equilibria.json", {
            "middle": exports.equilibrium_to_json(eq_mid),
            "final": exports.equilibrium_to_json(eq_final),
        })
        segments = [(0.0, None), (3.0, eq_mid), (6.0, eq_final)]
        boundaries = [(0.0, 3.0), (3.0, 6.0), (6.0, 9.0)]

        runs = {"sufficient": gain_suff}
        outcome_diag = design_direct(
            A, B, gain_suff.G, np.diag([-10.0, -12.0]), m_design, floquet=F)
        summary["direct_design_status"] = outcome_diag.status
        if outcome_diag.gain is not None:
            runs["direct"] = outcome_diag.gain
            exports.write_json(out / "gain_direct.json",
                               exports.gain_to_json(outcome_diag.gain))
            report = closed_loop_pole_check(outcome_diag.gain, A, B, m_design,
                                            keep=6)
            summary["direct_pole_deviation"] = report.max_deviation
            summary["direct_gain_imag_residue"] = outcome_diag.gain.imag_residue

        settling = {}
        for name, gain in runs.items():
            res = tracking_scenario(gain, A, B, segments,
                                    np.array([1.0, -0.5]), step=sim_step,
                                    t_end=9.0)
            exports.write_simulation_csv(out / f"tracking_{name}.csv", res)
            summary[f"tracking_ratios_{name}"] = _segment_ratios(res, boundaries)
            enorm = np.linalg.norm(res.e, axis=1)
            below = np.nonzero(enorm < 1e-2)[0]
            settling[name] = float(res.ts[below[0]]) if len(below) else None
        summary["settling_time_to_1e-2"] = settling
        if len(settling) == 2 and None not in settling.values():
            summary["transient_improvement"] = (
                settling["sufficient"] - settling["direct"])
    except Exception as exc:
        raise StageError("tracking", exc) from exc

    # -- counter-example: observable pair, non-invertible P ----------------
    try:
        stage("counter_example")
        G_ce = constant(np.array([[1.0, 1.0]]), T)
        Lam_ce = np.diag([-5.0, -7.0])
        outcome = design_direct(A, B, G_ce, Lam_ce, m_design, floquet=F)
        P_ce = outcome.sylvester.P_timedomain
        exports.write_function_trace_csv(out / "counter_example_P.csv", P_ce)
        ts = np.arange(1024) * (T / 1024)
        dets = np.linalg.det(P_ce.eval_grid(ts))
        exports.write_matrix_csv(out / "counter_example_det.csv",
                                 np.column_stack([ts.astype(complex), dets]))
        probe = riccati_escape_probe(
            A, B, G_ce, Lam_ce, np.linalg.inv(P_ce(0.0)), step=sim_step)
        summary["counter_example"] = {
            "status": outcome.status,
            "min_abs_det": outcome.certificate.min_abs_det,
            "sign_change": outcome.certificate.sign_change,
            "observability_pass": observability_check(
                np.array([[1.0, 1.0]]), Lam_ce),
            "riccati_probe": probe,
        }
    except Exception as exc:
        raise StageError("counter_example", exc) from exc

    exports.write_json(out / "summary.json", summary)
    return summary
