import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvspin.fitting import (
    Trace,
    _wrap_phase,
    fit_damped_cosine,
    fit_exp_decay,
    fit_lorentzian,
    levenberg_marquardt,
)


def damped_cosine(t, offset, amp, f1, t2p, phase):
    return offset + amp * np.exp(-t / t2p) * np.cos(2 * np.pi * f1 * t + phase)


def exp_decay(t, offset, amp, tau):
    return offset + amp * np.exp(-t / tau)


def lorentzian(x, offset, amp, c, w):
    return offset + amp * (w / 2) ** 2 / ((x - c) ** 2 + (w / 2) ** 2)


class TestTrace:
    def test_rejects_unequal_lengths(self):
        with pytest.raises(ValueError):
            Trace([1.0, 2.0], [1.0])

    def test_rejects_decreasing_x(self):
        with pytest.raises(ValueError):
            Trace([2.0, 1.0], [0.0, 0.0])

    def test_allows_ties(self):
        # duplicated sweep points (e.g. identical centers) are legal in a
        # container; fits reject them separately
        Trace([1.0, 1.0, 2.0], [0.0, 0.0, 0.0])

    def test_fit_rejects_ties(self):
        tr = Trace([0.0, 1.0, 1.0, 2.0, 3.0], np.zeros(5))
        tr.y = np.sin(tr.x)
        with pytest.raises(ValueError, match="strictly increasing"):
            fit_exp_decay(tr)


class TestLevenbergMarquardt:
    def test_monotone_cost_history(self):
        t = np.linspace(0.0, 10.0, 101)
        y = exp_decay(t, 0.2, 1.0, 3.0)

        def residual(p):
            return exp_decay(t, *p) - y

        res = levenberg_marquardt(residual, np.array([0.0, 0.5, 1.0]))
        assert res.converged
        diffs = np.diff(res.cost_history)
        assert np.all(diffs <= 0)

    def test_reports_iterations(self):
        def residual(p):
            return np.array([p[0] - 1.0, p[0] ** 2 - 1.0])

        res = levenberg_marquardt(residual, np.array([5.0]))
        assert res.iterations >= 1
        assert res.converged


class TestDampedCosineFit:
    def test_noiseless_round_trip(self):
        t = np.linspace(0.0, 10.0, 201)
        truth = dict(offset=0.55, amp=0.5, f1=1.4, t2p=2.0, phase=0.3)
        fit = fit_damped_cosine(Trace(t, damped_cosine(t, *truth.values())))
        assert fit.converged
        assert abs(fit["f1_mhz"] - 1.4) / 1.4 < 1e-3
        assert abs(fit["t2p_us"] - 2.0) / 2.0 < 1e-3
        assert abs(fit["amplitude"] - 0.5) / 0.5 < 1e-3
        assert abs(fit["offset"] - 0.55) < 1e-3
        assert abs(_wrap_phase(fit["phase_rad"] - 0.3)) < 1e-3

    def test_rabi_frequency_from_one_gauss_drive(self):
        # f1 = gamma B1 / 2 with B1 = 1 G
        from nvspin.hamiltonian import DriveParams

        f1 = DriveParams.from_b1(1.0).f1_mhz
        t = np.linspace(0.0, 6.0, 301)
        fit = fit_damped_cosine(Trace(t, damped_cosine(t, 0.8, 0.2, f1, 4.0, 0.0)))
        assert abs(fit["f1_mhz"] - 1.3996245) < 0.01

    def test_round_trip_with_noise(self):
        # window scaled to the decay so every draw carries comparable
        # information about T2'
        rng = np.random.default_rng(20)
        for _ in range(20):
            truth = dict(
                offset=rng.uniform(-1, 1),
                amp=rng.uniform(0.3, 1.5),
                f1=rng.uniform(0.8, 3.0),
                t2p=rng.uniform(1.0, 4.0),
                phase=rng.uniform(-3.0, 3.0),
            )
            t = np.linspace(0.0, 5 * truth["t2p"], 1201)
            y = damped_cosine(t, *truth.values())
            y = y + rng.normal(0.0, 0.01 * truth["amp"], len(t))
            fit = fit_damped_cosine(Trace(t, y))
            assert fit.converged
            assert abs(fit["f1_mhz"] - truth["f1"]) / truth["f1"] < 0.01
            assert abs(fit["t2p_us"] - truth["t2p"]) / truth["t2p"] < 0.01
            assert abs(fit["amplitude"] - truth["amp"]) < 0.01 * truth["amp"] * 3
            assert abs(_wrap_phase(fit["phase_rad"] - truth["phase"])) < 0.05

    def test_flat_trace_flagged(self):
        t = np.linspace(0.0, 5.0, 51)
        fit = fit_damped_cosine(Trace(t, np.full(51, 0.7)))
        assert fit.params["amplitude"] == 0.0
        assert "unidentifiable" in fit.flags

    def test_undamped_trace_hits_upper_bound_with_tiny_residual(self):
        t = np.linspace(0.0, 4.0, 161)
        y = damped_cosine(t, 0.5, 0.4, 5.0, 1e12, 0.0)
        fit = fit_damped_cosine(Trace(t, y))
        assert "at_bound" in fit.flags
        assert fit["t2p_us"] == 100.0 * (t[-1] - t[0])
        assert fit.residual_norm < 1e-6

    def test_too_few_periods_rejected(self):
        t = np.linspace(0.0, 1.0, 51)
        y = damped_cosine(t, 0.0, 1.0, 0.7, 50.0, 0.0)
        with pytest.raises(ValueError, match="period"):
            fit_damped_cosine(Trace(t, y))

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError, match="at least"):
            fit_damped_cosine(Trace([0.0, 1.0, 2.0], [0.0, 1.0, 0.0]))

    def test_affine_rescale_invariance(self):
        t = np.linspace(0.0, 10.0, 201)
        y = damped_cosine(t, 0.4, 0.6, 1.7, 3.0, -0.8)
        a = fit_damped_cosine(Trace(t, y))
        b = fit_damped_cosine(Trace(t, 250.0 * y + 40.0))
        assert abs(a["f1_mhz"] - b["f1_mhz"]) < 1e-6
        assert abs(a["t2p_us"] - b["t2p_us"]) / a["t2p_us"] < 1e-6
        assert np.isclose(b["amplitude"], 250.0 * a["amplitude"], rtol=1e-6)
        assert np.isclose(b["offset"], 250.0 * a["offset"] + 40.0, rtol=1e-6)


class TestExpDecayFit:
    def test_noiseless_round_trip(self):
        t = np.linspace(0.0, 20.0, 101)
        fit = fit_exp_decay(Trace(t, exp_decay(t, 0.0, 1.0, 6.0)))
        assert fit.converged
        assert abs(fit["t_us"] - 6.0) / 6.0 < 1e-3
        assert abs(fit["amplitude"] - 1.0) < 1e-3

    def test_round_trip_with_noise(self):
        rng = np.random.default_rng(31)
        t = np.linspace(0.0, 24.0, 2001)
        for _ in range(20):
            truth = dict(offset=rng.uniform(0, 1), amp=rng.uniform(0.5, 2.0),
                         tau=rng.uniform(2.0, 6.0))
            y = exp_decay(t, *truth.values())
            y = y + rng.normal(0.0, 0.01 * truth["amp"], len(t))
            fit = fit_exp_decay(Trace(t, y))
            assert fit.converged
            assert abs(fit["t_us"] - truth["tau"]) / truth["tau"] < 0.01

    def test_constant_trace_flagged(self):
        t = np.linspace(0.0, 5.0, 21)
        fit = fit_exp_decay(Trace(t, np.ones(21)))
        assert fit.params["amplitude"] == 0.0
        assert "unidentifiable" in fit.flags

    def test_negative_amplitude_recovery(self):
        t = np.linspace(0.0, 15.0, 61)
        fit = fit_exp_decay(Trace(t, exp_decay(t, 1.0, -0.5, 4.0)))
        assert fit["amplitude"] < 0
        assert abs(fit["t_us"] - 4.0) / 4.0 < 1e-3


class TestLorentzianFit:
    def test_noiseless_round_trip(self):
        x = np.linspace(480.0, 550.0, 141)
        fit = fit_lorentzian(Trace(x, lorentzian(x, 1.0, -0.4, 514.4, 10.0)))
        assert fit.converged
        assert abs(fit["center"] - 514.4) / 514.4 < 0.005
        assert abs(fit["fwhm"] - 10.0) / 10.0 < 0.005

    def test_round_trip_with_noise(self):
        rng = np.random.default_rng(17)
        x = np.linspace(480.0, 550.0, 561)
        for _ in range(20):
            truth = dict(offset=rng.uniform(5, 10),
                         amp=rng.uniform(0.5, 2.0) * rng.choice([-1, 1]),
                         c=rng.uniform(500, 530), w=rng.uniform(6, 15))
            y = lorentzian(x, *truth.values())
            y = y + rng.normal(0.0, 0.01 * abs(truth["amp"]), len(x))
            fit = fit_lorentzian(Trace(x, y))
            assert fit.converged
            assert abs(fit["center"] - truth["c"]) / truth["c"] < 0.01
            assert abs(fit["fwhm"] - truth["w"]) / truth["w"] < 0.01

    def test_symmetric_data_center(self):
        x = np.linspace(-10.0, 10.0, 81)
        fit = fit_lorentzian(Trace(x, lorentzian(x, 0.0, 1.0, 0.0, 4.0)))
        assert abs(fit["center"]) < 1e-6

    def test_flat_trace_flagged(self):
        x = np.linspace(0.0, 10.0, 21)
        fit = fit_lorentzian(Trace(x, np.zeros(21)))
        assert "unidentifiable" in fit.flags

    def test_unbracketed_extremum_rejected(self):
        x = np.linspace(0.0, 10.0, 21)
        with pytest.raises(ValueError, match="bracket"):
            fit_lorentzian(Trace(x, lorentzian(x, 0.0, 1.0, -5.0, 4.0)))

    def test_too_few_points_rejected(self):
        x = np.linspace(-3, 3, 6)
        with pytest.raises(ValueError, match="at least"):
            fit_lorentzian(Trace(x, lorentzian(x, 0.0, 1.0, 0.0, 2.0)))


class TestPhaseWrap:
    @settings(max_examples=50, deadline=None)
    @given(phi=st.floats(-50.0, 50.0))
    def test_wrap_range(self, phi):
        out = _wrap_phase(phi)
        assert -np.pi < out <= np.pi
        assert np.isclose(np.cos(out), np.cos(phi), atol=1e-9)
        assert np.isclose(np.sin(out), np.sin(phi), atol=1e-9)
