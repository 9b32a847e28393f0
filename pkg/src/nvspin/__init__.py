"""Desk-scale spin-dynamics simulator for a single nitrogen-vacancy center.

Reproduces the room-temperature single-center experiments as synthetic
datasets: CW ESR spectra, Rabi nutations, Hahn echo decay and the
magnetic-field dependence of decoherence caused by dipolar coupling to
substitutional nitrogen spins, together with the curve fits used to
extract f1, T2', T2 and resonance line parameters.
"""

__version__ = "0.1.0"

from .constants import DIPOLAR_J0_MHZ_NM3, MU_B_MHZ_PER_G, gyromagnetic_ratio
from .dynamics import (
    NoiseModel,
    ensemble_average,
    evolve_lindblad,
    lindblad_trajectory,
    propagate,
    rabi_probability,
    steady_state,
)
from .experiments import (
    ExperimentConfig,
    ReadoutParams,
    SweepResult,
    exp_cw_esr,
    exp_field_sweep,
    exp_hahn,
    exp_levels,
    exp_rabi,
    exp_t2p_vs_dip,
    spectral_peak_count,
    standard_config,
    trend_configs,
)
from .fitting import (
    FitResult,
    Trace,
    fit_damped_cosine,
    fit_exp_decay,
    fit_lorentzian,
)
from .hamiltonian import (
    BathParams,
    DriveParams,
    NvParams,
    h_dipolar,
    h_n,
    h_nv,
    resonance_field,
    rotating_frame,
)
from .pulseq import (
    Delay,
    LaserInit,
    PulseSequence,
    Readout,
    RfPulse,
    hahn_sequence,
    pi2_duration,
    pi_duration,
    rabi_sequence,
    ramsey_sequence,
    run_sequence,
)
from .spinops import SpinSystem, Spin, eigensystem, embed, expm_unitary, spin_matrices

__all__ = [name for name in dir() if not name.startswith("_")]
