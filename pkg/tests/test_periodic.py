"""Phasor representation: constructors, evaluation, Fourier analysis."""

import json
import math

import numpy as np
import pytest

from harmonic_control.periodic import (
    MissingPhasorError,
    PeriodicMatrixFunction,
    constant,
    from_json_description,
    phasors_of,
    pmf_from_uniform_samples,
    reconstruct,
    sliding_fourier,
    to_json_description,
    waveform_sawtooth,
    waveform_square,
    waveform_triangle,
    waveform_trig_polynomial,
)

T = 1.0
OMEGA = 2.0 * math.pi


def quad_phasor(f, k, n=8192):
    """Oracle: k-th phasor by direct trapezoidal quadrature of the evaluator."""
    ts = np.arange(n) * (T / n)
    vals = f.eval_grid(ts)[:, 0, 0]
    return np.mean(vals * np.exp(-1j * OMEGA * k * ts))


@pytest.mark.parametrize("factory,kwargs", [
    (waveform_square, {}),
    (waveform_triangle, {}),
    (waveform_sawtooth, {}),
    (waveform_sawtooth, {"phase": math.pi / 4}),
])
def test_waveform_phasors_match_quadrature(factory, kwargs):
    f = factory(0.7, 1.3, 16, T, **kwargs)
    for k in (0, 1, 2, 3, 5, 8, -1, -4):
        assert abs(f.phasor(k)[0, 0] - quad_phasor(f, k)) < 5e-4


def test_conjugate_symmetry_of_real_waveforms():
    for f in (waveform_square(1.0, 1.0, 12, T),
              waveform_triangle(2.0, 2.0, 12, T),
              waveform_sawtooth(-1.0, 1.0, 12, T, phase=0.3),
              waveform_trig_polynomial([("cos", 2, 1.5), ("sin", 1, -0.5)], 0.25, T)):
        for k in range(-8, 9):
            assert f.phasor(-k)[0, 0] == pytest.approx(
                np.conj(f.phasor(k)[0, 0]), abs=1e-15)


def test_trig_polynomial_evaluates_exactly():
    f = waveform_trig_polynomial([("cos", 1, 2.0), ("sin", 3, -1.0)], 0.5, T)
    ts = np.linspace(0, 2 * T, 41)
    expected = 0.5 + 2.0 * np.cos(OMEGA * ts) - 1.0 * np.sin(3 * OMEGA * ts)
    np.testing.assert_allclose(f.eval_grid(ts)[:, 0, 0].real, expected, atol=1e-12)
    np.testing.assert_allclose(f.eval_grid(ts)[:, 0, 0].imag, 0, atol=1e-12)


def test_square_wave_exact_evaluator_vs_series():
    f = waveform_square(0.0, 1.0, 400, T)
    ts = np.array([0.1, 0.2, 0.3, 0.6, 0.9])
    series = f.eval_grid_series(ts)[:, 0, 0].real
    exact = f.eval_grid(ts)[:, 0, 0].real
    np.testing.assert_allclose(series, exact, atol=5e-3)  # Gibbs-limited
    np.testing.assert_array_equal(exact, np.sign(np.sin(OMEGA * ts)))


def test_sawtooth_phase_shifts_waveform_in_time():
    phase = 0.5
    f0 = waveform_sawtooth(0.0, 1.0, 8, T)
    f1 = waveform_sawtooth(0.0, 1.0, 8, T, phase=phase)
    ts = np.linspace(0.01, 0.9, 17)
    np.testing.assert_allclose(
        f1.eval_grid(ts)[:, 0, 0], f0.eval_grid(ts + phase / OMEGA)[:, 0, 0],
        atol=1e-12)


def test_parseval_for_bandlimited():
    f = waveform_trig_polynomial([("cos", 1, 1.0), ("sin", 2, 3.0)], 0.5, T)
    ts = np.arange(4096) * (T / 4096)
    mean_sq = np.mean(np.abs(f.eval_grid(ts)[:, 0, 0]) ** 2)
    sum_ph = sum(abs(f.phasor(k)[0, 0]) ** 2 for k in range(-2, 3))
    assert mean_sq == pytest.approx(sum_ph, rel=1e-12)


def test_parseval_truncation_monotone_for_square():
    f = waveform_square(0.0, 1.0, 64, T)
    ts = np.arange(8192) * (T / 8192)
    mean_sq = np.mean(np.abs(f.eval_grid(ts)[:, 0, 0]) ** 2)
    partial = [sum(abs(f.phasor(k)[0, 0]) ** 2 for k in range(-K, K + 1))
               for K in (1, 5, 21, 63)]
    assert all(a < b for a, b in zip(partial, partial[1:]))
    assert partial[-1] < mean_sq
    assert mean_sq - partial[-1] < 2e-2


def test_missing_phasor_refused():
    f = pmf_from_uniform_samples(np.ones((64, 1, 1)), T, 4)
    with pytest.raises(MissingPhasorError):
        f.phasor(5)


def test_phasors_of_low_resolution_refused():
    with pytest.raises(ValueError, match="resolution"):
        phasors_of(lambda t: 1.0, K=16, T=T, resolution=32)


def test_phasors_of_matches_closed_form():
    g = phasors_of(lambda t: 1.0 + np.cos(OMEGA * t), K=3, T=T)
    assert g.phasor(0)[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert g.phasor(1)[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert g.phasor(2)[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_matrix_assembly_and_algebra():
    a = waveform_trig_polynomial([("cos", 1, 1.0)], 1.0, T)
    b = waveform_trig_polynomial([("sin", 1, 2.0)], 0.0, T)
    M = PeriodicMatrixFunction.from_scalar_entries([[a, b], [b, a]])
    ts = np.linspace(0, T, 11)
    vals = M.eval_grid(ts)
    np.testing.assert_allclose(vals[:, 0, 0], a.eval_grid(ts)[:, 0, 0], atol=1e-12)
    np.testing.assert_allclose(vals[:, 1, 0], b.eval_grid(ts)[:, 0, 0], atol=1e-12)

    S = M + M.scale(-1.0)
    np.testing.assert_allclose(S.eval_grid(ts), 0, atol=1e-14)

    # product by phasor convolution equals pointwise product
    P = M.matmul_bandlimited(M)
    np.testing.assert_allclose(
        P.eval_grid(ts), np.einsum("nij,njk->nik", vals, vals), atol=1e-12)


def test_conj_transpose():
    z = constant(np.array([[1.0 + 2.0j, 0.0], [3.0, -1.0j]]), T)
    ts = np.array([0.0, 0.3])
    np.testing.assert_allclose(
        z.conj_transpose().eval_grid(ts),
        np.conj(np.swapaxes(z.eval_grid(ts), 1, 2)), atol=1e-14)


def test_sample_real_guards_imaginary_parts():
    f = constant(np.array([[1.0j]]), T)
    with pytest.raises(ValueError, match="imaginary"):
        f.sample_real(np.array([0.0, 0.5]))


# -- sliding Fourier decomposition ------------------------------------------

def test_sliding_fourier_constant_signal():
    h = 1e-3
    ts = np.arange(0, 3 * T + h / 2, h)
    x = np.ones((len(ts), 1))
    traj = sliding_fourier(x, ts, T, m=2)
    assert not traj.available[0]
    i = np.argmax(traj.available)
    assert ts[i] == pytest.approx(T)
    np.testing.assert_allclose(traj.X[-1, 0, 2], 1.0, atol=1e-10)  # k=0
    np.testing.assert_allclose(traj.X[-1, 0, [0, 1, 3, 4]], 0.0, atol=1e-10)
    val, boundary = reconstruct(traj, 2.0)
    assert val[0] == pytest.approx(1.0, abs=1e-8)
    assert not boundary


def test_sliding_fourier_reconstruct_roundtrip():
    h = 5e-4
    ts = np.arange(0, 2 * T + h / 2, h)
    x = np.cos(OMEGA * ts).reshape(-1, 1)
    traj = sliding_fourier(x, ts, T, m=2)
    for t in (1.2, 1.5, 1.9):
        val, boundary = reconstruct(traj, t)
        assert val[0] == pytest.approx(math.cos(OMEGA * t), abs=1e-5)
        assert not boundary


def test_reconstruct_unavailable_history_raises():
    h = 1e-2
    ts = np.arange(0, 2 * T + h / 2, h)
    traj = sliding_fourier(np.ones((len(ts), 1)), ts, T, m=1)
    with pytest.raises(ValueError, match="unavailable"):
        reconstruct(traj, 0.5)


# -- JSON descriptions -------------------------------------------------------

def test_json_description_roundtrip():
    desc = {
        "rows": 2, "cols": 2, "T": 1.0,
        "terms": [
            {"kind": "square", "row": 0, "col": 0, "offset": 1.0, "amplitude": 1.0},
            {"kind": "cos", "row": 0, "col": 1, "harmonic": 1, "coeff": 2.0},
            {"kind": "const", "row": 1, "col": 0, "value": {"re": -1.0, "im": 0.0}},
            {"kind": "sawtooth", "row": 1, "col": 1, "offset": 0.0,
             "amplitude": 1.0, "phase": 0.25},
        ],
    }
    f = from_json_description(desc, K=16)
    assert (f.rows, f.cols) == (2, 2)
    assert to_json_description(f) == desc
    # serializable
    json.dumps(to_json_description(f))
    # spot value: the constant slot
    assert f(0.37)[1, 0] == pytest.approx(-1.0, abs=1e-12)


def test_json_description_bandlimited_fallback():
    f = waveform_trig_polynomial([("cos", 2, 3.0)], 1.0, T)
    desc = to_json_description(f)
    g = from_json_description(desc)
    ts = np.linspace(0, T, 7)
    np.testing.assert_allclose(g.eval_grid(ts), f.eval_grid(ts), atol=1e-12)
