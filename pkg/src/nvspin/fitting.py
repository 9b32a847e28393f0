"""Nonlinear least-squares extraction of experimental observables.

Three fit models cover everything the simulator produces:

* damped cosine  ->  Rabi frequency f1 and nutation decay time T2'
* exponential decay  ->  echo coherence time T2
* Lorentzian  ->  center/width of resonance dips and peaks

The optimizer is a self-contained damped least-squares (Levenberg-Marquardt)
loop with central-difference Jacobians; initial guesses are derived from the
data (spectral peak, log-linear regression, extremum location) so fits are
reproducible without hand-tuned starting points.
"""

from dataclasses import dataclass, field

import numpy as np

# Decay times are reported within [sample spacing, 100 * span]; results
# clipped to either end carry an "at_bound" flag.
DECAY_BOUND_FACTOR = 100.0


@dataclass
class Trace:
    """Sampled signal versus one independent variable."""

    x: np.ndarray
    y: np.ndarray
    x_unit: str = ""
    y_unit: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if np.any(np.diff(self.x) < 0):
            raise ValueError("x must be sorted in increasing order")

    def __len__(self) -> int:
        return len(self.x)


@dataclass
class FitResult:
    """Fitted parameters plus convergence diagnostics."""

    model: str
    params: dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    flags: tuple[str, ...] = ()

    def __getitem__(self, name: str) -> float:
        return self.params[name]


@dataclass
class LMResult:
    params: np.ndarray
    cost_history: list[float]
    residual_norm: float
    converged: bool
    iterations: int


def _jacobian(fun, p: np.ndarray, rel_step: float) -> np.ndarray:
    """Central-difference Jacobian of a residual function."""
    n = len(p)
    r0 = fun(p)
    jac = np.empty((len(r0), n))
    for i in range(n):
        h = rel_step * max(abs(p[i]), 1.0)
        pp = p.copy()
        pm = p.copy()
        pp[i] += h
        pm[i] -= h
        jac[:, i] = (fun(pp) - fun(pm)) / (2 * h)
    return jac


def levenberg_marquardt(fun, p0, *, gtol: float = 1e-10, max_iter: int = 500,
                        rel_step: float = 1e-6) -> LMResult:
    """Minimize ||fun(p)||^2 by damped least squares.

    ``fun`` maps a parameter vector to a residual vector.  The damping
    parameter is scaled up on rejected steps and down on accepted ones;
    the recorded cost history is monotonically decreasing by construction.
    Convergence means the scaled gradient fell below ``gtol``.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = fun(p)
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = _jacobian(fun, p, rel_step)
        g = jac.T @ r
        a = jac.T @ jac
        # scale-free gradient test: relative to the current cost level
        if np.max(np.abs(g)) <= gtol * (1.0 + cost):
            converged = True
            break
        accepted = False
        tiny_step = False
        for _ in range(50):
            damped = a + lam * np.diag(np.clip(np.diag(a), 1e-14, None))
            try:
                step = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            r_new = fun(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                rel_drop = (cost - cost_new) / max(cost, 1e-300)
                p, r, cost = p_new, r_new, cost_new
                history.append(cost)
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                tiny_step = (rel_drop < 1e-14
                             and np.max(np.abs(step)) < 1e-12 * (1 + np.max(np.abs(p))))
                break
            lam *= 4.0
        if not accepted:
            # stalled at a numerical floor: accept if the gradient is small
            converged = np.max(np.abs(g)) <= np.sqrt(gtol) * (1.0 + cost)
            break
        if tiny_step:
            converged = True
            break
    return LMResult(p, history, float(np.sqrt(cost)), converged, it)


def _wrap_phase(phi: float) -> float:
    """Wrap to (-pi, pi]."""
    out = (phi + np.pi) % (2 * np.pi) - np.pi
    if out == -np.pi:
        out = np.pi
    return float(out)


def _check_trace(trace: Trace, min_points: int) -> tuple[np.ndarray, np.ndarray]:
    if len(trace) < min_points:
        raise ValueError(f"fit needs at least {min_points} points, got {len(trace)}")
    if np.any(np.diff(trace.x) <= 0):
        raise ValueError("fit needs strictly increasing x values")
    return trace.x, trace.y


def _flat_result(model: str, trace: Trace, extra: dict[str, float]) -> FitResult:
    offset = float(np.mean(trace.y))
    params = {"amplitude": 0.0, "offset": offset}
    params.update(extra)
    resid = float(np.linalg.norm(trace.y - offset))
    return FitResult(model, params, resid, True, 0, flags=("unidentifiable",))


def _spectral_peak(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Dominant nonzero frequency of a uniformly sampled trace.

    Returns (frequency, amplitude, phase) from the discrete spectrum.
    """
    dx = np.mean(np.diff(x))
    yc = y - np.mean(y)
    spec = np.fft.rfft(yc)
    freqs = np.fft.rfftfreq(len(y), d=dx)
    k = 1 + int(np.argmax(np.abs(spec[1:])))
    amp = 2 * np.abs(spec[k]) / len(y)
    return float(freqs[k]), float(amp), float(np.angle(spec[k]))


def _bounded_decay_time(rate: float, x: np.ndarray) -> tuple[float, tuple[str, ...]]:
    dx = float(np.min(np.diff(x)))
    span = float(x[-1] - x[0])
    upper = DECAY_BOUND_FACTOR * span
    t = 1.0 / rate if rate > 0 else np.inf
    if t > upper:
        return float(upper), ("at_bound",)
    if t < dx:
        return float(dx), ("at_bound",)
    return float(t), ()


def fit_damped_cosine(trace: Trace) -> FitResult:
    """Fit y = offset + A exp(-t/T2p) cos(2 pi f1 t + phase).

    The decay is optimized as a rate so that undamped data converges
    cleanly; the reported T2p is clipped to [dt, 100 * span] and flagged
    when it sits at a bound.  Requires the trace to span at least two
    oscillation periods of the spectral-peak frequency.
    """
    x, y = _check_trace(trace, 5)
    if np.ptp(y) == 0.0:
        return _flat_result("damped_cosine", trace,
                            {"f1_mhz": 0.0, "t2p_us": np.inf, "phase_rad": 0.0})
    f0, a0, phi0 = _spectral_peak(x, y)
    span = x[-1] - x[0]
    if f0 * span < 2.0:
        raise ValueError(
            f"trace spans {f0 * span:.2f} oscillation periods; need >= 2 for a "
            "damped-cosine fit"
        )
    # crude decay estimate from the drop in oscillation power between the
    # first and second half of the trace
    half = len(y) // 2
    yc = y - np.mean(y)
    p1 = np.sqrt(np.mean(yc[:half] ** 2))
    p2 = np.sqrt(np.mean(yc[half:] ** 2))
    rate0 = max(0.0, 2.0 * np.log(p1 / p2) / span) if p2 > 0 else 2.0 / span
    offset0 = float(np.mean(y))

    def residual(p):
        offset, amp, f1, rate, phase = p
        model = offset + amp * np.exp(-np.abs(rate) * x) * np.cos(2 * np.pi * f1 * x + phase)
        return model - y

    p0 = np.array([offset0, a0, f0, rate0, phi0])
    lm = levenberg_marquardt(residual, p0)
    offset, amp, f1, rate, phase = lm.params
    if amp < 0:
        amp, phase = -amp, phase + np.pi
    t2p, flags = _bounded_decay_time(abs(rate), x)
    params = {
        "offset": float(offset),
        "amplitude": float(amp),
        "f1_mhz": float(abs(f1)),
        "t2p_us": t2p,
        "phase_rad": _wrap_phase(phase),
    }
    return FitResult("damped_cosine", params, lm.residual_norm, lm.converged,
                     lm.iterations, flags)


def fit_exp_decay(trace: Trace) -> FitResult:
    """Fit y = offset + A exp(-t/T); T is reported within the decay bounds."""
    x, y = _check_trace(trace, 5)
    if np.ptp(y) == 0.0:
        return _flat_result("exp_decay", trace, {"t_us": np.inf})
    offset0 = float(y[-1])
    a0 = float(y[0] - offset0)
    # log-linear slope over the early part of the decay
    dev = y - offset0
    mask = np.abs(dev) > 0.05 * abs(a0) if a0 != 0 else np.zeros(len(y), bool)
    if np.count_nonzero(mask) >= 2 and a0 != 0:
        slope = np.polyfit(x[mask], np.log(np.abs(dev[mask])), 1)[0]
        rate0 = max(-slope, 1e-6)
    else:
        rate0 = 1.0 / (x[-1] - x[0])

    def residual(p):
        offset, amp, rate = p
        return offset + amp * np.exp(-np.abs(rate) * x) - y

    lm = levenberg_marquardt(residual, np.array([offset0, a0, rate0]))
    offset, amp, rate = lm.params
    t, flags = _bounded_decay_time(abs(rate), x)
    params = {"offset": float(offset), "amplitude": float(amp), "t_us": t}
    return FitResult("exp_decay", params, lm.residual_norm, lm.converged,
                     lm.iterations, flags)


def fit_lorentzian(trace: Trace) -> FitResult:
    """Fit y = offset + A (w/2)^2 / ((x - c)^2 + (w/2)^2).

    A is signed, so dips and peaks use the same model.  The extremum must
    be bracketed by the data (not sit at either end of the trace).
    """
    x, y = _check_trace(trace, 7)
    if np.ptp(y) == 0.0:
        return _flat_result("lorentzian", trace,
                            {"center": float(np.mean(x)), "fwhm": 0.0})
    edge = 0.5 * (np.mean(y[:2]) + np.mean(y[-2:]))
    k = int(np.argmax(np.abs(y - edge)))
    if k in (0, len(y) - 1):
        raise ValueError("extremum must be bracketed by the trace")
    c0 = float(x[k])
    a0 = float(y[k] - edge)
    above = np.abs(y - edge) > abs(a0) / 2 if a0 != 0 else np.zeros(len(y), bool)
    w0 = float(x[above][-1] - x[above][0]) if np.count_nonzero(above) >= 2 else (x[-1] - x[0]) / 5
    w0 = max(w0, 2 * float(np.min(np.diff(x))))

    def residual(p):
        offset, amp, c, w = p
        model = offset + amp * (w / 2) ** 2 / ((x - c) ** 2 + (w / 2) ** 2)
        return model - y

    lm = levenberg_marquardt(residual, np.array([edge, a0, c0, w0]))
    offset, amp, c, w = lm.params
    params = {
        "offset": float(offset),
        "amplitude": float(amp),
        "center": float(c),
        "fwhm": float(abs(w)),
    }
    return FitResult("lorentzian", params, lm.residual_norm, lm.converged,
                     lm.iterations)


FIT_MODELS = {
    "damped_cosine": fit_damped_cosine,
    "exp_decay": fit_exp_decay,
    "lorentzian": fit_lorentzian,
}
