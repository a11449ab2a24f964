"""Harmonic (phasor-domain) modeling and pole placement for linear
time-periodic systems."""

from .periodic import (
    PeriodicMatrixFunction,
    PhasorTrajectory,
    constant,
    waveform_square,
    waveform_triangle,
    waveform_sawtooth,
    waveform_trig_polynomial,
    phasors_of,
    sliding_fourier,
    reconstruct,
)
from .operators import (
    TruncatedBlockToeplitz,
    toeplitz_lift,
    frequency_shift,
    circ_product,
    harmonic_state_operator,
    central_spectrum,
    invertibility_certificate,
)
from .floquet import FloquetFactorization, monodromy, factorize, harmonic_spectrum_prediction
from .sylvester import HarmonicSylvesterSolution, solve_truncated, convergence_sweep, differential_residual
from .design import (
    GainSchedule,
    DesignOutcome,
    HarmonicEquilibrium,
    NotInvertibleError,
    design_sufficient,
    design_direct,
    closed_loop_pole_check,
    harmonic_equilibrium,
    nearest_equilibrium,
    controllability_heuristic,
    observability_check,
)
from .simulate import (
    SimulationResult,
    EscapeEvent,
    simulate,
    verify_z_dynamics,
    tracking_scenario,
    decay_rate,
    riccati_escape_probe,
)
from .casestudy import BENCHMARK_T, benchmark_system, run_case_study
from . import exports

__version__ = "0.1.0"
