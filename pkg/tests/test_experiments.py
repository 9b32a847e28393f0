from dataclasses import replace

import numpy as np
import pytest

from nvspin.dynamics import NoiseModel
from nvspin.experiments import (
    exp_cw_esr,
    exp_field_sweep,
    exp_hahn,
    exp_levels,
    exp_rabi,
    exp_t2p_vs_dip,
    nv_transition_mhz,
    spectral_peak_count,
    standard_config,
    trend_configs,
)
from nvspin.fitting import fit_lorentzian
from nvspin.hamiltonian import BathParams, resonance_field


def quiet_config(**kwargs):
    cfg = standard_config()
    noise = replace(cfg.noise, sigma_static_mhz=0.0, gamma_phi=0.0, n_samples=1)
    return replace(cfg, noise=noise, **kwargs)


class TestCwEsr:
    def test_dip_position_tracks_field(self):
        for b in (50.0, 100.0, 200.0):
            cfg = replace(quiet_config(), b_field_gauss=b)
            center = nv_transition_mhz(cfg)
            grid = np.linspace(center - 30, center + 30, 121)
            trace = exp_cw_esr(cfg, grid)
            dip = trace.x[np.argmin(trace.y)]
            expected = 2880.0 - cfg.nv.gamma * b
            assert abs(dip - expected) <= grid[1] - grid[0]

    def test_far_detuned_endpoints_near_rf_off_level(self):
        cfg = replace(quiet_config(), b_field_gauss=100.0,
                      drive=replace(quiet_config().drive, f1_mhz=1.0))
        center = nv_transition_mhz(cfg)
        trace = exp_cw_esr(cfg, np.linspace(center - 50, center + 50, 201))
        rf_off = cfg.readout.photons  # fully polarized without the drive
        assert abs(trace.y[0] - rf_off) / rf_off < 0.01
        assert abs(trace.y[-1] - rf_off) / rf_off < 0.01

    def test_power_broadening(self):
        cfg = replace(quiet_config(), b_field_gauss=100.0)
        center = nv_transition_mhz(cfg)
        grid = np.linspace(center - 40, center + 40, 161)
        widths = []
        for f1 in (1.0, 3.0):
            tuned = replace(cfg, drive=replace(cfg.drive, f1_mhz=f1))
            widths.append(fit_lorentzian(exp_cw_esr(tuned, grid))["fwhm"])
        assert widths[1] > widths[0]


class TestRabi:
    T_GRID = np.linspace(0.0, 4.0, 161)

    def test_sqrt_power_frequency_ratios(self):
        cfg = quiet_config()
        result = exp_rabi(cfg, self.T_GRID, powers=(1.0, 4.0, 9.0))
        f1 = result.derived["f1_fit_mhz"]
        ratios = f1 / f1[0]
        assert np.all(np.abs(ratios - np.array([1.0, 2.0, 3.0])) < 0.01)

    def test_noise_free_residual_and_bound(self):
        cfg = quiet_config()
        result = exp_rabi(cfg, self.T_GRID, powers=(1.0,))
        fit = result.fits[0]
        assert fit.residual_norm < 1e-6 * cfg.readout.photons
        assert "at_bound" in fit.flags
        assert fit["t2p_us"] == 100.0 * (self.T_GRID[-1] - self.T_GRID[0])

    def test_t2p_grows_with_rabi_frequency(self):
        # static noise is refocused more effectively under faster driving
        cfg = standard_config()
        result = exp_rabi(cfg, self.T_GRID, powers=(1.0, 4.0, 9.0))
        t2p = result.derived["t2p_us"]
        assert t2p[0] < t2p[1] < t2p[2]

    def test_contrast_scales_with_readout(self):
        cfg = quiet_config()
        double = replace(cfg, readout=replace(cfg.readout, contrast=0.6))
        a = exp_rabi(cfg, self.T_GRID, powers=(1.0,)).traces[0].y
        b = exp_rabi(double, self.T_GRID, powers=(1.0,)).traces[0].y
        assert np.allclose(np.ptp(b), 2 * np.ptp(a), rtol=1e-9)

    def test_bit_reproducible(self):
        cfg = standard_config()
        a = exp_rabi(cfg, self.T_GRID, powers=(1.0,)).traces[0].y
        b = exp_rabi(cfg, self.T_GRID, powers=(1.0,)).traces[0].y
        assert np.array_equal(a, b)


class TestHyperfineBeating:
    T_GRID = np.linspace(0.0, 12.0, 481)

    def scenario(self, populations):
        cfg = standard_config()
        f_t = nv_transition_mhz(cfg)
        a = cfg.nv.a_par_mhz
        # drive sits on the m_I = +1 hyperfine line (detuning branch -A)
        return replace(
            cfg,
            noise=NoiseModel(nuclear_splitting_mhz=a, nuclear_populations=populations),
            drive=replace(cfg.drive, f1_mhz=6.0, f_rf_mhz=f_t - a),
        )

    def test_mixed_nucleus_shows_three_peaks(self):
        cfg = self.scenario((1 / 3, 1 / 3, 1 / 3))
        trace = exp_rabi(cfg, self.T_GRID, powers=(1.0,)).traces[0]
        assert spectral_peak_count(trace) == 3

    def test_polarized_nucleus_single_peak(self):
        cfg = self.scenario((1.0, 0.0, 0.0))
        trace = exp_rabi(cfg, self.T_GRID, powers=(1.0,)).traces[0]
        assert spectral_peak_count(trace) == 1


class TestHahn:
    def test_echo_decay_time_from_markovian_rate(self):
        cfg = standard_config()
        result = exp_hahn(cfg, np.linspace(0.25, 6.0, 24))
        t2 = result.derived["t2_us"]
        assert abs(t2 - 6.0) / 6.0 < 0.05

    def test_noise_off_echo_flat_at_maximum(self):
        cfg = quiet_config()
        result = exp_hahn(cfg, np.linspace(0.25, 6.0, 12))
        y = result.traces[0].y
        assert np.ptp(y) < 1e-6 * cfg.readout.photons
        p_max = cfg.readout.photons
        assert np.all(np.abs(y - p_max * (1 - 0.3 * (1 - 0.95))) < 1e-6 * p_max)

    def test_tau2_sweep_peaks_at_tau1(self):
        cfg = standard_config()
        cfg = replace(cfg, noise=replace(cfg.noise, gamma_phi=0.0,
                                         sigma_static_mhz=0.5, n_samples=48))
        result = exp_hahn(cfg, np.linspace(1.0, 3.0, 41), tau1_us=2.0)
        step = 2.0 / 40
        assert abs(result.derived["tau2_at_max_us"] - 2.0) <= step

    def test_bit_reproducible(self):
        cfg = standard_config()
        tau_grid = np.linspace(0.5, 3.0, 6)
        a = exp_hahn(cfg, tau_grid).traces[0].y
        b = exp_hahn(cfg, tau_grid).traces[0].y
        assert np.array_equal(a, b)


class TestFieldSweep:
    def test_decoupled_limit_flat(self):
        cfg = quiet_config()
        cfg = replace(cfg, bath=replace(cfg.bath, couplings=(0.0,)),
                      noise=replace(cfg.noise, gamma_phi=1.0 / 6.0))
        b_grid = np.linspace(500.0, 530.0, 11)
        result = exp_field_sweep(cfg, b_grid)
        ipl, inv = result.traces
        assert np.ptp(ipl.y) < 1e-6 * cfg.readout.photons
        assert np.ptp(inv.y) / np.mean(inv.y) < 1e-3

    def test_requires_bath_spin(self):
        cfg = replace(standard_config(), bath=BathParams(n_spins=0, couplings=()))
        with pytest.raises(ValueError, match="bath"):
            exp_field_sweep(cfg, np.linspace(500, 530, 11))

    def test_centers_coincide_at_resonance(self):
        cfg = standard_config()
        b_star = resonance_field(cfg.nv)
        result = exp_field_sweep(cfg, np.linspace(b_star - 12, b_star + 12, 49))
        c_ipl = result.derived["ipl_center_gauss"]
        c_inv = result.derived["inv_t2p_center_gauss"]
        assert abs(c_ipl - b_star) < 2.0
        assert abs(c_inv - b_star) < 2.0
        assert abs(c_ipl - c_inv) < 1.0
        assert result.fits[0]["amplitude"] < 0  # photoluminescence dips
        assert result.fits[1]["amplitude"] > 0  # decoherence rate peaks

    def test_off_resonance_baseline_flat(self):
        cfg = standard_config()
        b_star = resonance_field(cfg.nv)
        fields = np.concatenate([
            np.linspace(b_star - 80, b_star - 50, 5),
            np.linspace(b_star + 50, b_star + 80, 5),
        ])
        result = exp_field_sweep(cfg, np.sort(fields))
        inv = result.traces[1].y
        assert np.max(np.abs(inv - np.mean(inv))) / np.mean(inv) < 0.10

    def test_hyperfine_sidepeaks_symmetric(self):
        cfg = standard_config()
        cfg = replace(cfg, bath=replace(cfg.bath, include_n_nucleus=True,
                                        a_n_par_mhz=100.0),
                      noise=replace(cfg.noise, n_samples=8))
        b_star = resonance_field(cfg.nv)
        side = cfg.bath.a_n_par_mhz / (2 * cfg.nv.gamma)
        b_grid = np.linspace(b_star - side - 8, b_star + side + 8, 81)
        result = exp_field_sweep(cfg, b_grid)
        ipl, inv = result.traces
        baseline = np.median(ipl.y)
        peak_base = np.median(inv.y)
        for b_line in (b_star - side, b_star, b_star + side):
            window = np.abs(b_grid - b_line) < 3.0
            assert ipl.y[window].min() < baseline - 0.5 * np.ptp(ipl.y) * 0.2
            assert inv.y[window].max() > peak_base + 0.5 * np.ptp(inv.y) * 0.2


class TestTrend:
    def test_strictly_decreasing(self):
        trace = exp_t2p_vs_dip(trend_configs(standard_config()))
        assert np.all(np.diff(trace.x) > 0)
        assert np.all(np.diff(trace.y) < 0)

    def test_duplicated_center_identical_points(self):
        cfg = standard_config()
        cfgs = trend_configs(cfg)
        trace = exp_t2p_vs_dip([cfgs[1], cfgs[1]])
        assert trace.x[0] == trace.x[1]
        assert trace.y[0] == trace.y[1]

    def test_zero_coupling_center(self):
        cfg = standard_config()
        zero = replace(cfg, bath=replace(cfg.bath, couplings=(0.0,)),
                       noise=replace(cfg.noise, sigma_static_mhz=0.0))
        strong = trend_configs(cfg)[-1]
        trace = exp_t2p_vs_dip([zero, strong])
        assert abs(trace.x[0]) < 1e-12
        assert trace.y[0] > trace.y[1]


class TestLevels:
    def test_crossing_geometry(self):
        cfg = standard_config()
        b_grid = np.linspace(0.0, 1100.0, 221)
        cols = exp_levels(cfg, b_grid)
        # N-V transition falls with field, P1 splitting rises; they cross at B*
        mismatch = cols["f_nv_mhz"] - cols["f_n_mhz"]
        sign_change = np.where(np.diff(np.sign(mismatch)))[0]
        assert len(sign_change) == 1
        b_cross = b_grid[sign_change[0]]
        assert abs(b_cross - resonance_field(cfg.nv)) < b_grid[1] - b_grid[0]

    def test_zero_field_levels(self):
        cfg = standard_config()
        cols = exp_levels(cfg, np.array([0.0, 100.0]))
        assert np.isclose(cols["nv_ms0_mhz"][0], 0.0, atol=1e-9)
        assert np.isclose(cols["nv_msm1_mhz"][0], 2880.0, atol=1e-9)
        assert np.isclose(cols["nv_msp1_mhz"][0], 2880.0, atol=1e-9)
        # m_S = -1 comes down, +1 goes up
        assert cols["nv_msm1_mhz"][1] < 2880.0 < cols["nv_msp1_mhz"][1]


class TestConfigDefaults:
    def test_standard_config_reference_values(self):
        cfg = standard_config()
        assert cfg.nv.d_mhz == 2880.0
        assert cfg.nv.g == 2.00
        assert np.isclose(1.0 / cfg.noise.gamma_phi, 6.0)

    def test_sweep_spec_rejects_non_monotonic(self):
        from nvspin.experiments import SweepSpec

        with pytest.raises(ValueError):
            SweepSpec("b", (1.0, 1.0, 2.0))
