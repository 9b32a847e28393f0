"""Experiment drivers producing synthetic datasets for each measurement:
CW ESR spectra, Rabi nutations versus RF power, Hahn echo decay, magnetic
field sweeps of photoluminescence and decoherence rate, and the trend of
T2' against the cross-relaxation dip amplitude across centers.

The explicitly simulated bath spin lives with the N-V center on a joint
four-level rotating-frame space (addressed N-V pair x one P1 electron).
Near B = D/(2 gamma) the energy-conserving exchange |0,up> <-> |-1,down>
becomes resonant, draining N-V polarization (photoluminescence dip) and
adding decoherence during driving (peak in 1/T2').  Away from resonance
only the dipolar z-shift and the stochastic NoiseModel survive.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import (
    NoiseModel,
    ensemble_average,
    evolve_lindblad,
    lindblad_trajectory,
    pair_collapse_ops,
    steady_state,
)
from .fitting import FitResult, Trace, fit_damped_cosine, fit_exp_decay, fit_lorentzian
from .hamiltonian import (
    BathParams,
    DriveParams,
    NvParams,
    h_n,
    h_nv,
    resonance_field,
    rotating_frame,
)
from .pulseq import LaserInit, Readout, hahn_sequence, run_sequence
from .spinops import eigensystem


@dataclass(frozen=True)
class ReadoutParams:
    """Initialization and optical readout of the addressed pair."""

    polarization: float = 0.9
    contrast: float = 0.3
    photons: float = 1000.0
    repetitions: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.polarization <= 1.0:
            raise ValueError("polarization must lie in [0, 1]")
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError("contrast must lie in [0, 1]")
        if self.photons < 0 or self.repetitions < 1:
            raise ValueError("invalid photon budget or repetition count")


@dataclass(frozen=True)
class SweepSpec:
    variable: str = ""
    grid: tuple = ()

    def __post_init__(self):
        if len(self.grid) and np.any(np.diff(np.asarray(self.grid)) <= 0):
            raise ValueError("sweep grid must be strictly monotonic")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one simulated run depends on."""

    nv: NvParams = NvParams()
    bath: BathParams = BathParams()
    noise: NoiseModel = NoiseModel()
    readout: ReadoutParams = ReadoutParams()
    drive: DriveParams = DriveParams()
    sweep: SweepSpec = SweepSpec()
    seed: int = 12345
    b_field_gauss: float = 850.0
    # continuous-wave ESR only: optical pumping rate and laser-induced
    # dephasing, both in 1/us
    pump_rate: float = 1.0
    laser_dephasing: float = 0.5
    # dark interval of the init-wait-readout cycle in the field sweep
    t_wait_us: float = 5.0
    rabi_powers: tuple = (1.0, 4.0, 9.0)
    trend_couplings: tuple = (0.1, 0.3, 1.0)


# calibrated by scanning sigma so the standard Rabi scenario fits T2' close
# to 2 us at f1 = 5 MHz, three times shorter than the 6 us echo decay
STANDARD_SIGMA_STATIC_MHZ = 1.1
STANDARD_GAMMA_PHI = 1.0 / 6.0


def standard_config(seed: int = 12345) -> ExperimentConfig:
    """The default scenario: published N-V parameters where available,
    calibrated noise elsewhere."""
    return ExperimentConfig(
        noise=NoiseModel(
            sigma_static_mhz=STANDARD_SIGMA_STATIC_MHZ,
            gamma_phi=STANDARD_GAMMA_PHI,
            n_samples=24,
            seed=seed,
        ),
        seed=seed,
    )


@dataclass
class SweepResult:
    traces: list[Trace]
    fits: list[FitResult]
    derived: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# shared helpers

def nv_transition_mhz(cfg: ExperimentConfig, b_gauss: float | None = None) -> float:
    """Frequency of the addressed 0 -> -1 transition from the eigenlevels."""
    b = cfg.b_field_gauss if b_gauss is None else b_gauss
    params = replace(cfg.nv, include_nucleus=False)
    w, _ = eigensystem(h_nv(b, params))
    return float(w[1] - w[0])


def _frame_hamiltonian(cfg: ExperimentConfig, f1_mhz: float,
                       b_gauss: float | None = None) -> np.ndarray:
    """Addressed-pair rotating-frame Hamiltonian, warning on poor
    selectivity."""
    b = cfg.b_field_gauss if b_gauss is None else b_gauss
    params = replace(cfg.nv, include_nucleus=False)
    drive = replace(cfg.drive, f1_mhz=f1_mhz)
    return rotating_frame(h_nv(b, params), drive, (0, 1))


def _readout_map(readout: ReadoutParams, p0):
    return readout.photons * (1.0 - readout.contrast * (1.0 - np.asarray(p0)))


def _init_pair_density(polarization: float) -> np.ndarray:
    p = polarization
    return np.diag([p + (1 - p) / 2, (1 - p) / 2]).astype(complex)


def _markovian(noise: NoiseModel) -> NoiseModel:
    """Strip the quasi-static part (handled by the ensemble wrapper)."""
    return replace(noise, sigma_static_mhz=0.0, n_samples=1)


def spectral_peak_count(trace: Trace) -> int:
    """Number of distinct frequencies in a trace's discrete spectrum.

    Counts local maxima of the Hann-windowed, zero-padded magnitude
    spectrum that reach half of the strongest nonzero-frequency component.
    Zero padding keeps a line that falls between Fourier bins from being
    split below the half-max threshold.
    """
    y = trace.y - np.mean(trace.y)
    spec = np.abs(np.fft.rfft(y * np.hanning(len(y)), n=8 * len(y)))
    spec[0] = 0.0
    top = np.max(spec)
    if top == 0:
        return 0
    count = 0
    for k in range(1, len(spec) - 1):
        if spec[k] >= spec[k - 1] and spec[k] > spec[k + 1] and spec[k] >= 0.5 * top:
            count += 1
    return count


# ---------------------------------------------------------------------------
# joint N-V + bath-spin model (rotating frame)

_P1 = np.diag([0.0, 1.0]).astype(complex)          # projector on the driven level
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ_PAIR = np.diag([0.0, -1.0]).astype(complex)    # physical m_S values 0, -1
_SZ_HALF = np.diag([0.5, -0.5]).astype(complex)
_EYE2 = np.eye(2, dtype=complex)


def joint_frame_hamiltonian(delta_nv_mhz: float, nu_bath_mhz: float,
                            f1_mhz: float, coupling_mhz: float) -> np.ndarray:
    """Rotating-frame Hamiltonian of the N-V pair coupled to one P1 spin.

    Basis order: |0,up>, |0,down>, |-1,up>, |-1,down>.  ``delta_nv_mhz`` is
    the drive detuning from the N-V transition, ``nu_bath_mhz`` the P1
    splitting minus the drive frequency (zero at the cross-relaxation
    resonance).  The coupling J enters twice: a -2 J Sz Sz shift of the N-V
    line by the P1 state, and the energy-conserving exchange
    |0,up> <-> |-1,down> with matrix element J/sqrt(2).
    """
    j = coupling_mhz
    h = (
        delta_nv_mhz * np.kron(_P1, _EYE2)
        + 0.5 * f1_mhz * np.kron(_SX, _EYE2)
        + nu_bath_mhz * np.kron(_EYE2, _SZ_HALF)
        - 2.0 * j * np.kron(_SZ_PAIR, _SZ_HALF)
    )
    v = j / np.sqrt(2.0)
    h[0, 3] += v
    h[3, 0] += v
    return h


def _joint_collapse(noise: NoiseModel, bath: BathParams) -> list:
    ops = []
    if noise.gamma_phi > 0:
        ops.append((np.kron(np.diag([1.0, -1.0]).astype(complex), _EYE2),
                    noise.gamma_phi / 2.0))
    if noise.gamma_1 > 0:
        lower = np.zeros((2, 2), dtype=complex)
        lower[0, 1] = 1.0
        ops.append((np.kron(lower, _EYE2), noise.gamma_1))
    if bath.gamma_bath > 0:
        ops.append((np.kron(_EYE2, np.diag([1.0, -1.0]).astype(complex)),
                    bath.gamma_bath / 2.0))
    return ops


def _bath_branches(bath: BathParams) -> list[tuple[float, float]]:
    """(bath-frequency shift, weight) from the P1 14N hyperfine states."""
    if not bath.include_n_nucleus:
        return [(0.0, 1.0)]
    a = bath.a_n_par_mhz
    return [(-a, 1 / 3), (0.0, 1 / 3), (a, 1 / 3)]


_P0_JOINT = np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex)


def _joint_p0_after_wait(cfg: ExperimentConfig, b_gauss: float,
                         detunings: np.ndarray) -> float:
    """Population of m_S = 0 after the init-wait cycle, bath spin mixed."""
    coupling = cfg.bath.secular_coupling(0) if cfg.bath.n_spins else 0.0
    f_t = nv_transition_mhz(cfg, b_gauss)
    nu0 = cfg.nv.gamma * b_gauss - f_t
    rho0 = np.kron(_init_pair_density(cfg.readout.polarization), _EYE2 / 2)
    collapse = _joint_collapse(_markovian(cfg.noise), cfg.bath)
    total = 0.0
    for shift, weight in _bath_branches(cfg.bath):
        for delta in detunings:
            h = joint_frame_hamiltonian(delta, nu0 + shift, 0.0, coupling)
            rho = evolve_lindblad(h, collapse, rho0, cfg.t_wait_us)
            total += weight * float(np.trace(_P0_JOINT @ rho).real)
    return total / len(detunings)


def _joint_rabi_trace(cfg: ExperimentConfig, b_gauss: float, f1_mhz: float,
                      t_grid: np.ndarray, detunings: np.ndarray) -> Trace:
    """Ensemble-averaged Rabi nutation against the explicit bath spin."""
    coupling = cfg.bath.secular_coupling(0) if cfg.bath.n_spins else 0.0
    f_t = nv_transition_mhz(cfg, b_gauss)
    nu0 = cfg.nv.gamma * b_gauss - f_t
    rho0 = np.kron(_init_pair_density(cfg.readout.polarization), _EYE2 / 2)
    collapse = _joint_collapse(_markovian(cfg.noise), cfg.bath)
    acc = np.zeros(len(t_grid))
    for shift, weight in _bath_branches(cfg.bath):
        for delta in detunings:
            h = joint_frame_hamiltonian(delta, nu0 + shift, f1_mhz, coupling)
            rhos = lindblad_trajectory(h, collapse, rho0, t_grid)
            p0 = np.einsum("tij,ji->t", rhos, _P0_JOINT).real
            acc += weight * p0
    y = _readout_map(cfg.readout, acc / len(detunings))
    return Trace(t_grid, y, "us", "counts", {"b_gauss": b_gauss, "f1_mhz": f1_mhz})


# ---------------------------------------------------------------------------
# experiments

def exp_cw_esr(cfg: ExperimentConfig, f_grid_mhz) -> Trace:
    """Continuous-wave ESR: steady-state photoluminescence versus drive
    frequency.

    Optical pumping repolarizes the spin at ``cfg.pump_rate`` while the
    drive depolarizes it near resonance, producing the photoluminescence
    dip at the 0 -> -1 transition frequency.
    """
    f_grid = np.asarray(f_grid_mhz, dtype=float)
    f_t = nv_transition_mhz(cfg)
    pump = np.zeros((2, 2), dtype=complex)
    pump[0, 1] = 1.0
    sz = np.diag([1.0, -1.0]).astype(complex)
    gamma_2 = cfg.laser_dephasing + cfg.noise.gamma_phi
    collapse = [(pump, cfg.pump_rate)]
    if gamma_2 > 0:
        collapse.append((sz, gamma_2 / 2.0))

    def experiment(delta: float) -> Trace:
        p0 = np.empty_like(f_grid)
        for i, f_rf in enumerate(f_grid):
            h = np.array(
                [[0.0, 0.5 * cfg.drive.f1_mhz],
                 [0.5 * cfg.drive.f1_mhz, f_t + delta - f_rf]],
                dtype=complex,
            )
            rho = steady_state(h, collapse)
            p0[i] = rho[0, 0].real
        return Trace(f_grid, _readout_map(cfg.readout, p0), "MHz", "counts")

    trace = ensemble_average(experiment, cfg.noise)
    trace.meta.update(b_gauss=cfg.b_field_gauss, transition_mhz=f_t)
    return trace


def exp_rabi(cfg: ExperimentConfig, t_grid_us, powers=None) -> SweepResult:
    """Rabi nutations for a set of relative RF powers; f1 scales with the
    square root of the power."""
    t_grid = np.asarray(t_grid_us, dtype=float)
    powers = tuple(cfg.rabi_powers if powers is None else powers)
    rho0 = _init_pair_density(cfg.readout.polarization)
    traces: list[Trace] = []
    fits: list[FitResult] = []
    for power in powers:
        f1 = cfg.drive.f1_mhz * np.sqrt(power)
        h_base = _frame_hamiltonian(cfg, f1)
        collapse = pair_collapse_ops(_markovian(cfg.noise))

        def experiment(delta: float) -> Trace:
            h = h_base.copy()
            h[1, 1] += delta
            rhos = lindblad_trajectory(h, collapse, rho0, t_grid)
            p0 = rhos[:, 0, 0].real
            return Trace(t_grid, _readout_map(cfg.readout, p0), "us", "counts")

        trace = ensemble_average(experiment, cfg.noise)
        trace.meta.update(power=power, f1_mhz=f1, b_gauss=cfg.b_field_gauss)
        traces.append(trace)
        fits.append(fit_damped_cosine(trace))
    return SweepResult(
        traces,
        fits,
        {
            "power": np.array(powers),
            "f1_fit_mhz": np.array([f["f1_mhz"] for f in fits]),
            "t2p_us": np.array([f["t2p_us"] for f in fits]),
        },
    )


def exp_hahn(cfg: ExperimentConfig, tau_grid_us, tau1_us: float | None = None) -> SweepResult:
    """Hahn echo decay.

    With ``tau1_us=None`` both delays are swept together and the trace is
    plotted against the total delay 2 tau with an exponential fit for T2.
    Otherwise tau1 stays fixed, ``tau_grid_us`` sweeps tau2, and no fit is
    attempted (the trace shows the echo-position symmetry).
    """
    tau_grid = np.asarray(tau_grid_us, dtype=float)
    base_detuning = _frame_hamiltonian(cfg, cfg.drive.f1_mhz)[1, 1].real
    init = LaserInit(polarization=cfg.readout.polarization)
    readout = Readout(contrast=cfg.readout.contrast, photons=cfg.readout.photons)
    markov = _markovian(cfg.noise)

    def experiment(delta: float) -> Trace:
        y = np.empty_like(tau_grid)
        for i, tau in enumerate(tau_grid):
            tau1, tau2 = (tau, tau) if tau1_us is None else (tau1_us, tau)
            seq = hahn_sequence(tau1, tau2, cfg.drive, init=init, readout=readout,
                                repetitions=cfg.readout.repetitions)
            _, y[i] = run_sequence(seq, markov, base_detuning + delta)
        x = 2 * tau_grid if tau1_us is None else tau_grid
        return Trace(x, y, "us", "counts")

    trace = ensemble_average(experiment, cfg.noise)
    trace.meta.update(b_gauss=cfg.b_field_gauss, f1_mhz=cfg.drive.f1_mhz,
                      tau1_us=tau1_us)
    fits = []
    derived = {}
    if tau1_us is None:
        fits.append(fit_exp_decay(trace))
        derived["t2_us"] = fits[0]["t_us"]
    else:
        derived["tau2_at_max_us"] = float(trace.x[np.argmax(trace.y)])
    return SweepResult([trace], fits, derived)


def exp_field_sweep(cfg: ExperimentConfig, b_grid_gauss) -> SweepResult:
    """Photoluminescence and Rabi decoherence rate across the
    cross-relaxation resonance.

    Per field point the joint N-V + P1 model yields (i) the
    photoluminescence after an init-wait-readout cycle and (ii) an
    ensemble-averaged Rabi trace whose damped-cosine fit gives 1/T2'.
    Both field profiles are then fit with Lorentzians.
    """
    if cfg.bath.n_spins < 1:
        raise ValueError("field sweep needs at least one explicit bath spin")
    b_grid = np.asarray(b_grid_gauss, dtype=float)
    t_grid = np.linspace(0.0, 4.0, 161)
    detunings = cfg.noise.static_detunings()
    ipl = np.empty_like(b_grid)
    t2p = np.empty_like(b_grid)
    f1 = cfg.drive.f1_mhz
    rabi_fits = []
    for i, b in enumerate(b_grid):
        p0 = _joint_p0_after_wait(cfg, b, detunings)
        ipl[i] = _readout_map(cfg.readout, p0)
        fit = fit_damped_cosine(_joint_rabi_trace(cfg, b, f1, t_grid, detunings))
        rabi_fits.append(fit)
        t2p[i] = fit["t2p_us"]
    ipl_trace = Trace(b_grid, ipl, "G", "counts", {"observable": "i_pl"})
    inv_trace = Trace(b_grid, 1.0 / t2p, "G", "1/us", {"observable": "inv_t2p"})
    fits = [fit_lorentzian(ipl_trace), fit_lorentzian(inv_trace)]
    return SweepResult(
        [ipl_trace, inv_trace],
        fits,
        {
            "t2p_us": t2p,
            "ipl_center_gauss": fits[0]["center"],
            "inv_t2p_center_gauss": fits[1]["center"],
            "resonance_field_gauss": resonance_field(cfg.nv),
            "rabi_converged": np.array([f.converged for f in rabi_fits]),
        },
    )


def exp_t2p_vs_dip(cfgs: list[ExperimentConfig], b_probe_gauss: float = 850.0,
                   off_resonance_offset_gauss: float = 25.0) -> Trace:
    """T2' at the probe field versus the normalized photoluminescence dip
    amplitude on resonance, one point per synthetic center.

    Output is sorted by dip amplitude; the Rabi window matches the field
    sweep.
    """
    t_grid = np.linspace(0.0, 4.0, 161)
    amplitudes = []
    t2ps = []
    for cfg in cfgs:
        detunings = cfg.noise.static_detunings()
        b_res = resonance_field(cfg.nv)
        p0_res = _joint_p0_after_wait(cfg, b_res, detunings)
        p0_off = _joint_p0_after_wait(cfg, b_res + off_resonance_offset_gauss, detunings)
        i_res = _readout_map(cfg.readout, p0_res)
        i_off = _readout_map(cfg.readout, p0_off)
        amplitudes.append((i_off - i_res) / i_off)
        fit = fit_damped_cosine(
            _joint_rabi_trace(cfg, b_probe_gauss, cfg.drive.f1_mhz, t_grid, detunings)
        )
        t2ps.append(fit["t2p_us"])
    order = np.argsort(amplitudes, kind="stable")
    return Trace(
        np.asarray(amplitudes)[order],
        np.asarray(t2ps)[order],
        "normalized dip",
        "us",
        {"b_probe_gauss": b_probe_gauss, "n_centers": len(cfgs)},
    )


def trend_configs(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Synthetic centers for the trend experiment: coupling strengths from
    ``cfg.trend_couplings`` with the static noise scaled proportionally."""
    base_j = cfg.bath.secular_coupling(0) if cfg.bath.n_spins else 1.0
    out = []
    for j in cfg.trend_couplings:
        scale = j / base_j if base_j else 1.0
        out.append(
            replace(
                cfg,
                bath=replace(cfg.bath, n_spins=1, couplings=(j,)),
                noise=replace(cfg.noise,
                              sigma_static_mhz=cfg.noise.sigma_static_mhz * scale),
            )
        )
    return out


def exp_levels(cfg: ExperimentConfig, b_grid_gauss) -> dict[str, np.ndarray]:
    """Eigenlevels of the N-V center and one P1 electron spin versus field.

    N-V levels are labeled by their dominant m_S character, so columns stay
    continuous across the level crossing.  Also reports the 0 -> -1
    transition frequency and the P1 splitting, which cross at the
    resonance field.
    """
    b_grid = np.asarray(b_grid_gauss, dtype=float)
    params = replace(cfg.nv, include_nucleus=False)
    bath = BathParams(n_spins=1, couplings=(0.0,), include_n_nucleus=False)
    cols = {
        "b_gauss": b_grid,
        "nv_ms0_mhz": np.empty_like(b_grid),
        "nv_msm1_mhz": np.empty_like(b_grid),
        "nv_msp1_mhz": np.empty_like(b_grid),
        "n_up_mhz": np.empty_like(b_grid),
        "n_down_mhz": np.empty_like(b_grid),
        "f_nv_mhz": np.empty_like(b_grid),
        "f_n_mhz": np.empty_like(b_grid),
    }
    # basis order m = +1, 0, -1 per the operator convention
    label_keys = ("nv_msp1_mhz", "nv_ms0_mhz", "nv_msm1_mhz")
    for i, b in enumerate(b_grid):
        w, v = eigensystem(h_nv(b, params))
        for level in range(3):
            character = int(np.argmax(np.abs(v[:, level]) ** 2))
            cols[label_keys[character]][i] = w[level]
        wn, _ = eigensystem(h_n(b, bath))
        cols["n_down_mhz"][i] = wn[0]
        cols["n_up_mhz"][i] = wn[1]
        cols["f_nv_mhz"][i] = cols["nv_msm1_mhz"][i] - cols["nv_ms0_mhz"][i]
        cols["f_n_mhz"][i] = wn[1] - wn[0]
    return cols
