"""Pulse sequences on the addressed two-level transition and their
interpretation into photoluminescence signals.

Sequences follow the three-step experimental template: a laser pulse
initializes the spin, manipulation happens in the dark, and a second laser
pulse reads the state out through the spin-dependent photoluminescence.
The interpreter works in the rotating frame of the addressed pair
(|0> = bright level, |1> = driven level); quasi-static detunings enter via
the frame detuning, Markovian rates via the NoiseModel.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import NoiseModel, evolve_lindblad, pair_collapse_ops, propagate
from .hamiltonian import DriveParams


@dataclass(frozen=True)
class LaserInit:
    """Polarizing laser pulse; maps the addressed pair to polarization p."""

    duration_us: float = 5.0
    polarization: float = 0.9

    def __post_init__(self):
        _check_duration(self.duration_us)
        if not 0.0 <= self.polarization <= 1.0:
            raise ValueError("polarization must lie in [0, 1]")


@dataclass(frozen=True)
class RfPulse:
    duration_us: float
    drive: DriveParams

    def __post_init__(self):
        _check_duration(self.duration_us)


@dataclass(frozen=True)
class Delay:
    duration_us: float

    def __post_init__(self):
        _check_duration(self.duration_us)


@dataclass(frozen=True)
class Readout:
    """Laser readout: expected counts N * (1 - contrast * (1 - P0))."""

    duration_us: float = 2.0
    contrast: float = 0.3
    photons: float = 1000.0

    def __post_init__(self):
        _check_duration(self.duration_us)
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError("contrast must lie in [0, 1]")
        if self.photons < 0:
            raise ValueError("photon budget must be >= 0")


Segment = LaserInit | RfPulse | Delay | Readout


def _check_duration(value: float) -> None:
    if value < 0:
        raise ValueError("segment duration must be >= 0")


@dataclass(frozen=True)
class PulseSequence:
    """Ordered segments, ending in exactly one Readout.

    A LaserInit may only appear as the first segment, which also guarantees
    laser and RF segments never overlap in time.
    """

    segments: tuple[Segment, ...]
    repetitions: int = 1000

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        segs = self.segments
        n_read = sum(isinstance(s, Readout) for s in segs)
        if n_read != 1 or not isinstance(segs[-1], Readout):
            raise ValueError("sequence needs exactly one Readout, in last position")
        n_init = sum(isinstance(s, LaserInit) for s in segs)
        if n_init > 1 or (n_init == 1 and not isinstance(segs[0], LaserInit)):
            raise ValueError("at most one LaserInit is allowed, in first position")


def pi_duration(f1_mhz: float) -> float:
    """Duration of a pi pulse at Rabi frequency f1: 1 / (2 f1)."""
    if f1_mhz <= 0:
        raise ValueError("pi pulse needs f1 > 0")
    return 1.0 / (2.0 * f1_mhz)


def pi2_duration(f1_mhz: float) -> float:
    """Duration of a pi/2 pulse: 1 / (4 f1)."""
    if f1_mhz <= 0:
        raise ValueError("pi/2 pulse needs f1 > 0")
    return 1.0 / (4.0 * f1_mhz)


def rabi_sequence(t_pulse_us: float, drive: DriveParams, *,
                  init: LaserInit = LaserInit(),
                  readout: Readout = Readout(),
                  repetitions: int = 1000) -> PulseSequence:
    """Init - drive for a variable duration - read out."""
    return PulseSequence(
        (init, RfPulse(t_pulse_us, drive), readout), repetitions
    )


def hahn_sequence(tau1_us: float, tau2_us: float, drive: DriveParams, *,
                  init: LaserInit = LaserInit(),
                  readout: Readout = Readout(),
                  repetitions: int = 1000) -> PulseSequence:
    """Hahn echo: pi/2 - tau1 - pi - tau2 - pi/2 - readout.

    The final pi/2 pulse maps the echo amplitude back onto the populations
    seen by the photoluminescence readout.
    """
    if tau1_us < 0 or tau2_us < 0:
        raise ValueError("delays must be >= 0")
    t_pi2 = pi2_duration(drive.f1_mhz)
    t_pi = pi_duration(drive.f1_mhz)
    return PulseSequence(
        (
            init,
            RfPulse(t_pi2, drive),
            Delay(tau1_us),
            RfPulse(t_pi, drive),
            Delay(tau2_us),
            RfPulse(t_pi2, drive),
            readout,
        ),
        repetitions,
    )


def ramsey_sequence(tau_us: float, drive: DriveParams, *,
                    init: LaserInit = LaserInit(),
                    readout: Readout = Readout(),
                    repetitions: int = 1000) -> PulseSequence:
    """Unrefocused pi/2 - tau - pi/2 reference for the echo comparison."""
    t_pi2 = pi2_duration(drive.f1_mhz)
    return PulseSequence(
        (init, RfPulse(t_pi2, drive), Delay(tau_us), RfPulse(t_pi2, drive), readout),
        repetitions,
    )


def _segment_hamiltonian(segment: Segment, detuning_mhz: float) -> np.ndarray:
    if isinstance(segment, RfPulse):
        off = 0.5 * segment.drive.f1_mhz * np.exp(-1j * segment.drive.phase_rad)
        return np.array([[0.0, off], [np.conj(off), detuning_mhz]], dtype=complex)
    return np.array([[0.0, 0.0], [0.0, detuning_mhz]], dtype=complex)


def run_sequence(seq: PulseSequence, noise: NoiseModel | None = None,
                 detuning_mhz: float = 0.0, *, poisson: bool = False,
                 rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Interpret a sequence and return (P0, I_PL).

    ``detuning_mhz`` is the frame detuning of the drive from the addressed
    transition (quasi-static noise enters here; Markovian rates from
    ``noise`` act during pulses and delays).  In Poisson mode the expected
    counts are replaced by a sampled per-repetition average.
    """
    rho = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    collapse = pair_collapse_ops(noise)
    p0 = 1.0
    i_pl = 0.0
    for segment in seq.segments:
        if isinstance(segment, LaserInit):
            p = segment.polarization
            rho = p * np.diag([1.0, 0.0]).astype(complex) + (1 - p) * np.eye(2) / 2
            continue
        if isinstance(segment, Readout):
            p0 = float(rho[0, 0].real)
            expected = segment.photons * (1.0 - segment.contrast * (1.0 - p0))
            if poisson and expected > 0:
                if rng is None:
                    rng = np.random.default_rng(noise.seed if noise else 0)
                i_pl = rng.poisson(expected * seq.repetitions) / seq.repetitions
            else:
                i_pl = expected
            continue
        h = _segment_hamiltonian(segment, detuning_mhz)
        if collapse:
            rho = evolve_lindblad(h, collapse, rho, segment.duration_us)
        else:
            rho = propagate([(h, segment.duration_us)], rho)
    return p0, i_pl
