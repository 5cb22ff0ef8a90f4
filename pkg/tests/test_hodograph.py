import math

import numpy as np
import pytest

from cgrunup import (BreakingError, Grid, HodographFoldError, HodographSolution, HorizonError,
                     PhysicalIC, PipelineConfig, PostBreakingError, SpectralCoefficients,
                     check_nonbreaking, evolve_spectral, forward_cg, hankel_analyze,
                     hankel_evaluate, inverse_cg_snapshot, plane_beach, run_pipeline,
                     shoreline_series, tabulated_profile)
from cgrunup.hodograph import hodograph_map, invert_monotone, transformed_data


def zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def bump(amp=0.01, center=5.0, width=1.0):
    return lambda x: amp * np.exp(-((np.asarray(x, dtype=float) - center) / width) ** 2)


class TestProfiles:
    def test_plane_beach(self):
        c = plane_beach()
        assert c.is_plane_beach
        assert np.array_equal(c(np.array([0.0, 2.5])), [0.0, 2.5])

    def test_tabulated_interpolates_and_clamps(self):
        c = tabulated_profile([0.0, 1.0, 2.0, 4.0], [0.0, 1.0, 2.0, 4.0])
        assert not c.is_plane_beach
        assert c(1.5) == pytest.approx(1.5)
        assert c(10.0) == pytest.approx(4.0)

    @pytest.mark.parametrize("sigma, c", [([0, 1], [0, -1]), ([0, 0], [0, 1]), ([0], [0])])
    def test_tabulated_validation(self, sigma, c):
        with pytest.raises(ValueError):
            tabulated_profile(sigma, c)


class TestForward:
    def test_zero_data(self):
        ic = PhysicalIC(Grid(-1.0, 10.0, 111), zero, zero)
        mic = forward_cg(ic)
        assert np.allclose(hodograph_map(ic, mic.grid), mic.grid.nodes, atol=1e-14)
        assert np.all(mic.tau_values() == 0.0)
        assert not mic.g.values.any()

    def test_constant_velocity(self):
        v = 0.05
        ic = PhysicalIC(Grid(-1.0, 10.0, 111), zero, lambda x: np.full_like(np.asarray(x, float), v))
        mic = forward_cg(ic)
        assert np.allclose(mic.tau_values(), -v)
        assert np.allclose(mic.g.values, [v, v * v / 2])

    def test_standard_iff_zero_velocity(self):
        eta = bump()
        ic = PhysicalIC(Grid(-1.0, 20.0, 2101), eta, zero)
        mic = forward_cg(ic)
        assert np.all(mic.tau_values() == 0.0)
        gamma = hodograph_map(ic, mic.grid)
        assert np.allclose(gamma + eta(gamma), mic.grid.nodes, atol=1e-13)
        assert np.array_equal(mic.g.values[:, 1], eta(gamma))
        assert not mic.g.values[:, 0].any()

    def test_sampled_input_matches_callable(self):
        grid = Grid(-1.0, 20.0, 2101)
        eta = bump(0.02)
        a = forward_cg(PhysicalIC(grid, eta, zero))
        b = forward_cg(PhysicalIC(grid, eta(grid.nodes), np.zeros(grid.n_points)))
        assert np.max(np.abs(a.g.values - b.g.values)) < 1e-8

    def test_invert_monotone_against_closed_form(self):
        x = np.linspace(0.0, 2.0, 21)
        roots = invert_monotone(lambda y: y ** 3 + y, lambda y: 3 * y ** 2 + 1, x,
                                np.array([0.0, 2.0, 10.0]))
        assert np.allclose(roots, [0.0, 1.0, 2.0], atol=1e-13)

    def test_fold_raises(self):
        ic = PhysicalIC(Grid(-1.0, 20.0, 501), bump(2.0, 8.0), zero)
        with pytest.raises(HodographFoldError):
            transformed_data(ic, ic.default_sigma_grid())


class TestMargins:
    def test_zero_data(self):
        r = check_nonbreaking(PhysicalIC(Grid(-1.0, 10.0, 111), zero, zero))
        assert (r.monotonicity_margin, r.characteristic_margin) == (1.0, 1.0)
        assert r.ok

    def test_linear_velocity_closed_form(self):
        ic = PhysicalIC(Grid(-1.0, 4.0, 501), zero, lambda x: 0.1 * np.asarray(x, float))
        r = check_nonbreaking(ic, Grid(0.0, 4.0, 401))
        assert r.characteristic_margin == pytest.approx(0.96, abs=1e-12)

    def test_steep_front_refused(self):
        ic = PhysicalIC(Grid(-1.0, 20.0, 801), bump(2.0, 8.0), zero)
        r = check_nonbreaking(ic)
        assert r.monotonicity_margin <= 0 and not r.ok
        assert math.isnan(r.characteristic_margin)
        with pytest.raises(BreakingError, match="check_nonbreaking") as info:
            run_pipeline(ic, PipelineConfig())
        assert info.value.stage == "check_nonbreaking"


class TestInverse:
    def test_zero_solution(self):
        g = Grid(0.0, 10.0, 101)
        taus = np.linspace(-1.0, 1.0, 21)
        sol = HodographSolution(g, taus, np.zeros((21, 101, 2)), "zero")
        snap = inverse_cg_snapshot(sol, 0.3)
        assert not snap.eta.any() and not snap.u.any()
        assert np.array_equal(snap.x, g.nodes)
        assert snap.shoreline_x == 0.0
        series = shoreline_series(sol, [0.0, 0.5])
        assert not series.x_s.any()

    def test_bessel_mode_cg_relations(self):
        g = Grid(0.0, 25.0, 2001)
        sol = evolve_spectral(SpectralCoefficients.single_mode(1.0, a=1e-3), g,
                              np.linspace(-0.05, 0.05, 21))
        snap = inverse_cg_snapshot(sol, 0.0)
        assert snap.cg_residual() <= 1e-8
        assert np.max(np.abs(snap.tau + snap.phi)) <= 1e-8

    def test_outside_horizon_raises(self):
        g = Grid(0.0, 10.0, 101)
        sol = HodographSolution(g, np.linspace(0.0, 1.0, 11), np.zeros((11, 101, 2)), "zero")
        with pytest.raises(HorizonError):
            inverse_cg_snapshot(sol, 5.0)
        with pytest.raises(HorizonError):
            shoreline_series(sol, [0.5, 2.0])

    def test_multivalued_level_is_post_breaking(self):
        # phi = A sin(k tau) with A k > 1 makes tau + phi non-monotone
        g = Grid(0.0, 1.0, 11)
        taus = np.linspace(-4.0, 4.0, 161)
        phi = 2.0 * np.sin(2.0 * taus)[:, None] * np.ones((1, 11))
        slices = np.stack([phi, np.zeros_like(phi)], axis=-1)
        sol = HodographSolution(g, taus, slices, "synthetic")
        with pytest.raises(PostBreakingError):
            inverse_cg_snapshot(sol, 0.3)

    def test_resampled_snapshot(self):
        g = Grid(0.0, 10.0, 101)
        taus = np.linspace(-1.0, 1.0, 21)
        sol = HodographSolution(g, taus, np.zeros((21, 101, 2)), "zero")
        x, eta, u = inverse_cg_snapshot(sol, 0.0).resampled(51)
        assert len(x) == 51 and x[0] == 0.0 and x[-1] == 10.0


def test_shoreline_consistent_with_hodograph_solution():
    ic = PhysicalIC(Grid(-1.0, 30.0, 1551), bump(0.01, 6.0, 1.5), zero)
    res = run_pipeline(ic, PipelineConfig(times=(0.0,), shoreline_times=tuple(np.linspace(0, 8, 33)),
                                          eps=1e-12, solver="spectral"))
    sh = res.shoreline
    assert sh.runup > 0 and sh.rundown < 0
    # eta_s + u_s^2/2 is psi at the shoreline, taken at tau = t - u_s
    co = hankel_analyze(res.standard_data)
    _, psi = hankel_evaluate(co, np.zeros_like(sh.t), sh.t - sh.u_s)
    assert np.max(np.abs(sh.eta_s + 0.5 * sh.u_s ** 2 - psi)) < 1e-6
    assert np.allclose(sh.tau, sh.t - sh.u_s, atol=1e-12)
