"""Time evolution: unitary propagation, Lindblad dissipation, quasi-static
noise ensembles and driven steady states.

The Lindblad generator used throughout is

    drho/dt = -i 2 pi [H, rho] + sum_k gamma_k (L rho L+ - {L+L, rho}/2)

with H in MHz and rates gamma_k in 1/us.  Two integration paths exist: an
exact Liouvillian exponential (default, Hamiltonians are piecewise constant
here) and fixed-step RK4; tests hold them to mutual agreement.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fitting import Trace
from .spinops import NonHermitianError, expm_unitary, is_hermitian

CollapseOps = Sequence[tuple[np.ndarray, float]]


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian null space is not one-dimensional."""


@dataclass(frozen=True)
class NoiseModel:
    """Decoherence knobs for one simulated experiment.

    ``sigma_static_mhz`` is the standard deviation of a quasi-static detuning
    (constant within a shot, Gaussian across shots).  ``gamma_phi`` and
    ``gamma_1`` are Markovian pure-dephasing and relaxation rates in 1/us,
    defined so that a free coherence decays as exp(-gamma_phi t) and an
    excited population as exp(-gamma_1 t).  ``nuclear_splitting_mhz``
    together with ``nuclear_populations`` (weights of the discrete detunings
    -A, 0, +A) enables averaging over the host 14N nuclear spin states.
    """

    sigma_static_mhz: float = 0.0
    gamma_phi: float = 0.0
    gamma_1: float = 0.0
    n_samples: int = 1
    seed: int = 0
    nuclear_splitting_mhz: float = 0.0
    nuclear_populations: tuple[float, float, float] | None = None

    def __post_init__(self):
        if min(self.sigma_static_mhz, self.gamma_phi, self.gamma_1) < 0:
            raise ValueError("noise rates must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.nuclear_populations is not None:
            pops = self.nuclear_populations
            if len(pops) != 3 or min(pops) < 0 or sum(pops) <= 0:
                raise ValueError("nuclear_populations must be 3 nonnegative weights")

    def static_detunings(self) -> np.ndarray:
        """The quasi-static detuning samples for this model, in MHz."""
        if self.sigma_static_mhz == 0.0:
            return np.zeros(self.n_samples)
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, self.sigma_static_mhz, self.n_samples)

    def nuclear_branches(self) -> list[tuple[float, float]]:
        """(detuning, weight) pairs for the nuclear-spin average."""
        if self.nuclear_populations is None or self.nuclear_splitting_mhz == 0.0:
            return [(0.0, 1.0)]
        a = self.nuclear_splitting_mhz
        total = sum(self.nuclear_populations)
        return [(d, p / total)
                for d, p in zip((-a, 0.0, a), self.nuclear_populations)
                if p > 0]


# ---------------------------------------------------------------------------
# density-matrix helpers

def basis_density(dim: int, index: int) -> np.ndarray:
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho


def mixed_density(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def pure_density(state: np.ndarray) -> np.ndarray:
    v = np.asarray(state, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def validate_density(rho: np.ndarray, *, herm_atol: float = 1e-8,
                     trace_atol: float = 1e-8, eig_floor: float = -1e-7) -> None:
    """Raise if ``rho`` is not Hermitian, unit-trace and (near) positive."""
    if np.max(np.abs(rho - rho.conj().T)) > herm_atol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_atol or abs(np.trace(rho).imag) > trace_atol:
        raise ValueError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < eig_floor:
        raise ValueError("density matrix has a significantly negative eigenvalue")


# ---------------------------------------------------------------------------
# coherent evolution

def rabi_probability(f1: float, df, t):
    """Probability of remaining in the initial level under resonant driving.

    P = 1 - f1^2/(f1^2 + df^2) * sin^2(pi sqrt(f1^2 + df^2) t), the
    textbook two-level result; broadcasts over ``df`` and ``t``.
    """
    df = np.asarray(df, dtype=float)
    t = np.asarray(t, dtype=float)
    f_eff_sq = f1**2 + df**2
    with np.errstate(invalid="ignore", divide="ignore"):
        contrast = np.where(f_eff_sq > 0, f1**2 / np.where(f_eff_sq > 0, f_eff_sq, 1.0), 0.0)
    p = 1.0 - contrast * np.sin(np.pi * np.sqrt(f_eff_sq) * t) ** 2
    if p.ndim == 0:
        return float(p)
    return p


def propagate(segments: Sequence[tuple[np.ndarray, float]], rho0: np.ndarray) -> np.ndarray:
    """Apply rho -> U rho U+ for each (Hamiltonian, duration) segment."""
    rho = np.asarray(rho0, dtype=complex)
    for h, dt in segments:
        if dt < 0:
            raise ValueError("segment durations must be >= 0")
        if h.shape != rho.shape:
            raise ValueError(f"Hamiltonian shape {h.shape} != state shape {rho.shape}")
        if dt == 0:
            continue
        u = expm_unitary(h, dt)
        rho = u @ rho @ u.conj().T
    return rho


# ---------------------------------------------------------------------------
# Lindblad dissipation

def build_liouvillian(h: np.ndarray, collapse_ops: CollapseOps) -> np.ndarray:
    """Matrix of the Lindblad generator acting on row-major vectorized rho."""
    dim = h.shape[0]
    ident = np.eye(dim)
    liou = -2j * np.pi * (np.kron(h, ident) - np.kron(ident, h.T))
    for op, rate in collapse_ops:
        if rate < 0:
            raise ValueError("collapse rates must be >= 0")
        if rate == 0:
            continue
        opd_op = op.conj().T @ op
        liou = liou + rate * (
            np.kron(op, op.conj())
            - 0.5 * (np.kron(opd_op, ident) + np.kron(ident, opd_op.T))
        )
    return liou


def _lindblad_rhs(h: np.ndarray, collapse_ops: CollapseOps, rho: np.ndarray) -> np.ndarray:
    out = -2j * np.pi * (h @ rho - rho @ h)
    for op, rate in collapse_ops:
        if rate == 0:
            continue
        opd = op.conj().T
        opd_op = opd @ op
        out = out + rate * (op @ rho @ opd - 0.5 * (opd_op @ rho + rho @ opd_op))
    return out


def _rk4_steps(h: np.ndarray, collapse_ops: CollapseOps, rho: np.ndarray,
               t: float) -> np.ndarray:
    # step kept well below 1/(50 * max frequency scale); the factor 200
    # holds the mismatch against the exact exponential path under 1e-6
    freq_scale = float(np.max(np.abs(np.linalg.eigvalsh(h)))) if h.size else 0.0
    rate_scale = max((rate for _, rate in collapse_ops), default=0.0)
    scale = max(freq_scale, rate_scale, 1e-9)
    n = max(1, int(np.ceil(t * scale * 200)))
    dt = t / n
    for _ in range(n):
        k1 = _lindblad_rhs(h, collapse_ops, rho)
        k2 = _lindblad_rhs(h, collapse_ops, rho + 0.5 * dt * k1)
        k3 = _lindblad_rhs(h, collapse_ops, rho + 0.5 * dt * k2)
        k4 = _lindblad_rhs(h, collapse_ops, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def evolve_lindblad(h: np.ndarray, collapse_ops: CollapseOps, rho0: np.ndarray,
                    t: float, method: str = "expm") -> np.ndarray:
    """Evolve a density matrix for time ``t`` under a constant Hamiltonian
    and Lindblad dissipators.

    ``method="expm"`` (default) exponentiates the Liouvillian exactly;
    ``method="rk4"`` integrates with a fixed step well below the fastest
    frequency in the problem.
    """
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    if not is_hermitian(h):
        raise NonHermitianError("Lindblad Hamiltonian must be Hermitian")
    rho = np.asarray(rho0, dtype=complex)
    if h.shape != rho.shape:
        raise ValueError("Hamiltonian and state dimensions differ")
    if t == 0:
        return rho.copy()
    if method == "expm":
        liou = build_liouvillian(h, collapse_ops)
        vec = scipy.linalg.expm(liou * t) @ rho.reshape(-1)
        out = vec.reshape(rho.shape)
    elif method == "rk4":
        out = _rk4_steps(h, collapse_ops, rho, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    return 0.5 * (out + out.conj().T)


def lindblad_trajectory(h: np.ndarray, collapse_ops: CollapseOps, rho0: np.ndarray,
                        times: np.ndarray) -> np.ndarray:
    """Density matrices at each time in ``times`` (sorted, >= 0).

    Uses the eigendecomposition of the Liouvillian so the cost is one small
    non-Hermitian eigenproblem regardless of how many times are requested;
    falls back to stepwise exponentials if the eigenbasis is ill-conditioned.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted and >= 0")
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    liou = build_liouvillian(h, collapse_ops)
    vec0 = rho0.reshape(-1)
    evals, vecs = np.linalg.eig(liou)
    cond = np.linalg.cond(vecs)
    out = np.empty((len(times), dim, dim), dtype=complex)
    if cond < 1e10:
        coef = np.linalg.solve(vecs, vec0)
        for i, t in enumerate(times):
            vec = vecs @ (np.exp(evals * t) * coef)
            rho = vec.reshape(dim, dim)
            out[i] = 0.5 * (rho + rho.conj().T)
    else:
        vec = vec0
        prev = 0.0
        for i, t in enumerate(times):
            if t > prev:
                vec = scipy.linalg.expm(liou * (t - prev)) @ vec
                prev = t
            rho = vec.reshape(dim, dim)
            out[i] = 0.5 * (rho + rho.conj().T)
    return out


def steady_state(h: np.ndarray, collapse_ops: CollapseOps) -> np.ndarray:
    """Unique stationary state of the Lindblad generator.

    Raises :class:`DegenerateSteadyStateError` when the null space of the
    Liouvillian is not one-dimensional (e.g. no dissipation at all).
    """
    liou = build_liouvillian(h, collapse_ops)
    ns = scipy.linalg.null_space(liou, rcond=1e-10)
    if ns.shape[1] != 1:
        raise DegenerateSteadyStateError(
            f"Liouvillian null space has dimension {ns.shape[1]}, expected 1"
        )
    dim = h.shape[0]
    rho = ns[:, 0].reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise DegenerateSteadyStateError("null-space vector has zero trace")
    rho = rho / tr
    validate_density(rho, herm_atol=1e-8, trace_atol=1e-8, eig_floor=-1e-6)
    return rho


# ---------------------------------------------------------------------------
# quasi-static noise

def pair_collapse_ops(noise: NoiseModel | None, dim: int = 2,
                      excited: int = 1, ground: int = 0) -> list[tuple[np.ndarray, float]]:
    """Collapse operators realizing a NoiseModel on one addressed level pair.

    Dephasing uses L = diag(+1 on ground, -1 on excited) at rate
    gamma_phi / 2, so a free coherence decays as exp(-gamma_phi t);
    relaxation uses L = |ground><excited| at rate gamma_1.
    """
    if noise is None:
        return []
    ops = []
    if noise.gamma_phi > 0:
        sz = np.zeros((dim, dim), dtype=complex)
        sz[ground, ground] = 1.0
        sz[excited, excited] = -1.0
        ops.append((sz, noise.gamma_phi / 2.0))
    if noise.gamma_1 > 0:
        lower = np.zeros((dim, dim), dtype=complex)
        lower[ground, excited] = 1.0
        ops.append((lower, noise.gamma_1))
    return ops


def ensemble_average(experiment: Callable[[float], Trace],
                     noise: NoiseModel | None) -> Trace:
    """Average an experiment over the quasi-static noise ensemble.

    ``experiment`` maps a detuning offset in MHz to a Trace on a fixed grid.
    Detunings are drawn once up front (Gaussian, seeded, plus the discrete
    nuclear branches when enabled) so the result does not depend on
    evaluation order.
    """
    if noise is None:
        noise = NoiseModel()
    detunings = noise.static_detunings()
    branches = noise.nuclear_branches()
    ref: Trace | None = None
    total = None
    for branch_detuning, weight in branches:
        acc = None
        for delta in detunings:
            tr = experiment(float(delta + branch_detuning))
            if ref is None:
                ref = tr
                total = np.zeros_like(ref.y)
            elif not np.array_equal(tr.x, ref.x):
                raise ValueError("experiment must sample a fixed grid across the ensemble")
            acc = tr.y.copy() if acc is None else acc + tr.y
        total += weight * (acc / len(detunings))
    assert ref is not None
    return Trace(ref.x, total, ref.x_unit, ref.y_unit,
                 dict(ref.meta, n_samples=noise.n_samples))
