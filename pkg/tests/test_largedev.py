import numpy as np
import pytest
from conftest import flat_landscape, isolated_well_landscape, quad_landscape

from multiwell.errors import ConfigurationError, OutOfDomainError
from multiwell.landscape import Well, build_landscape, mollify
from multiwell.largedev import (
    action_functional,
    barrier,
    exit_rate_fit,
    min_barrier,
    quasi_potential,
)
from multiwell.noise import build_noise, stream
from multiwell.solver import FieldState, SimConfig, build_discretization, simulate


def make_cfg(land, J=16, sigma=0.0, t_end=1.0, dt=1e-3, ic=(0.3, 0.5),
             record_stride=10, l=10.0, d1=1.0, d2=1.0):
    disc = build_discretization(J=J, d1=d1, d2=d2, dt=dt)
    noise = build_noise(l, disc.x)
    return SimConfig(landscape=land, noise=noise, disc=disc, sigma=sigma,
                     t_end=t_end, record_stride=record_stride,
                     initial_condition=ic)


def symmetric_two_well(fw=0.01, a=(0.3, 0.3), centers=((0.3, 0.5), (0.7, 0.5))):
    raw = build_landscape([Well(centers[0], a[0]), Well(centers[1], a[1])])
    return mollify(raw, fw, (-0.5, 1.5, -0.5, 1.5), 481)


class TestQuasiPotential:
    def test_constant_profile_at_center(self):
        land = isolated_well_landscape()
        disc = build_discretization(J=16, dt=1e-3)
        n = disc.n_nodes
        prof = FieldState(t=0.0, u=np.full(n, 0.25), v=np.full(n, 0.25))
        U = quasi_potential(prof, land, disc)
        # smoothing lifts the minimum by roughly 2*a*fw^2, never above tol
        assert 0 <= U < 1e-2

    def test_constant_profile_is_domain_times_potential(self):
        land = quad_landscape()
        disc = build_discretization(J=16, dt=1e-3)
        n = disc.n_nodes
        p = (0.4, 0.61)
        prof = FieldState(t=0.0, u=np.full(n, p[0]), v=np.full(n, p[1]))
        expected = disc.domain_length * float(land.value_at(*p))
        assert quasi_potential(prof, land, disc) == pytest.approx(expected, abs=1e-12)

    def test_linear_profile_gradient_energy(self):
        # u(x) = x, v = 0, flat potential, d1 = 1: integral of 1/2 over (0,1)
        land = flat_landscape()
        disc = build_discretization(J=200, d1=1.0, d2=1.0, dt=1e-3)
        prof = FieldState(t=0.0, u=disc.x.copy(), v=np.zeros(disc.n_nodes))
        assert quasi_potential(prof, land, disc) == pytest.approx(0.5, abs=1e-12)

    def test_out_of_bounds_profile_rejected(self):
        land = quad_landscape()
        disc = build_discretization(J=8, dt=1e-3)
        prof = FieldState(t=0.0, u=np.full(7, 99.0), v=np.zeros(7))
        with pytest.raises(OutOfDomainError):
            quasi_potential(prof, land, disc)

    def test_periodic_sine_profile(self):
        # u = 0.1 sin(2 pi x): gradient energy d1/2 * (0.2 pi)^2, up to the
        # second-order centered-difference factor sin(2 pi h)/(2 pi h)
        land = flat_landscape()
        disc = build_discretization(J=64, bc="periodic", d1=1.0, d2=1.0,
                                    dt=1e-3)
        u = 0.1 * np.sin(2 * np.pi * disc.x)
        prof = FieldState(t=0.0, u=u, v=np.zeros_like(u), bc="periodic")
        expected = 0.5 * (0.2 * np.pi) ** 2 * 0.5
        assert quasi_potential(prof, land, disc) == pytest.approx(expected,
                                                                  rel=5e-3)


class TestBarrier:
    def test_symmetric_barriers_agree(self):
        land = symmetric_two_well()
        rep01 = barrier(land, 0, 1)
        rep10 = barrier(land, 1, 0)
        assert abs(rep01.barrier - rep10.barrier) < 1e-9
        assert rep01.barrier > 0

    def test_near_raw_limit_matches_hand_saddle(self):
        # wells at (0,0) and (2,0), equal unit weights: the raw ridge is the
        # perpendicular bisector u=1 with minimum F=1 at (1,0); light
        # smoothing only trims the kink by O(filter width)
        raw = build_landscape([Well((0.0, 0.0), 1.0), Well((2.0, 0.0), 1.0)])
        land = mollify(raw, 0.01, (-1.5, 3.5, -2.5, 2.5), 601)
        rep = barrier(land, 0, 1, domain_length=1.0)
        assert rep.saddle_point[0] == pytest.approx(1.0, abs=0.02)
        assert rep.saddle_point[1] == pytest.approx(0.0, abs=0.02)
        assert rep.barrier == pytest.approx(1.0, rel=0.03)

    def test_refined_grid_oracle(self):
        land = quad_landscape(n_grid=121)
        fine = quad_landscape(n_grid=481)  # 4x resolution oracle
        rep = barrier(land, 0, 1)
        rep_fine = barrier(fine, 0, 1)
        # tolerance: the potential's variation across one coarse cell near
        # the saddle
        du = land.cell[0]
        p = rep.saddle_point
        local = land.value_at(np.array([p[0] - du, p[0] + du, p[0], p[0]]),
                              np.array([p[1], p[1], p[1] - du, p[1] + du]))
        tol = np.ptp(local)
        assert abs(rep.saddle_value - rep_fine.saddle_value) <= tol

    def test_non_adjacent_wells_rejected(self):
        # three collinear wells: 0 and 2 never share a boundary
        raw = build_landscape([Well((0.2, 0.5), 1.0), Well((0.5, 0.5), 1.0),
                               Well((0.8, 0.5), 1.0)])
        land = mollify(raw, 0.01, (-0.5, 1.5, -0.2, 1.2), 321)
        with pytest.raises(ConfigurationError, match="no basin boundary"):
            barrier(land, 0, 2)
        assert min_barrier(land, 0).to_well == 1

    def test_same_well_rejected(self):
        land = symmetric_two_well()
        with pytest.raises(ConfigurationError):
            barrier(land, 1, 1)


class TestActionFunctional:
    def test_deterministic_path_has_vanishing_action(self):
        # a spatially varying start exercises the diffusion defect; constant
        # starts ride the explicit flow exactly and score zero outright
        land = isolated_well_landscape()
        actions = []
        for dt in (2e-3, 1e-3):
            disc = build_discretization(J=8, d1=1.0, d2=1.0, dt=dt)
            noise = build_noise(10.0, disc.x)
            x = disc.x
            cfg = SimConfig(landscape=land, noise=noise, disc=disc, sigma=0.0,
                            t_end=2.0, record_stride=1,
                            initial_condition=(0.3 + 0.1 * np.cos(np.pi * x),
                                               0.4 - 0.05 * x))
            traj = simulate(cfg, rng=None)
            actions.append(action_functional(traj, land, disc))
        assert actions[0] < 1e-4   # already O(dt) small
        assert actions[1] < 0.7 * actions[0]

    def test_stationary_path_is_nearly_free(self):
        land = isolated_well_landscape()
        cfg = make_cfg(land, J=8, sigma=0.0, t_end=1.0, dt=1e-3,
                       ic=(0.25, 0.25), record_stride=1)
        traj = simulate(cfg, rng=None)
        S = action_functional(traj, land, cfg.disc)
        assert S <= land.grad_tol**2 * 1.0 * 1.0

    def test_constant_velocity_through_flat_potential(self):
        # z(t) = z0 + w t with flat F: residual is exactly w per channel
        land = flat_landscape()
        disc = build_discretization(J=16, d1=1.0, d2=1.0, dt=1e-3)
        n = disc.n_nodes
        w = (0.7, -0.3)
        T = 2.0
        times = np.linspace(0.0, T, 81)
        us = np.outer(w[0] * times, np.ones(n))
        vs = np.outer(w[1] * times, np.ones(n))
        from multiwell.diagnostics import Trajectory
        traj = Trajectory(times=times, avg_u=np.zeros(81), avg_v=np.zeros(81),
                          mean_u=us[:, 0], mean_v=vs[:, 0],
                          basins=np.zeros(81, int), h=disc.h, bc="neumann",
                          us=us, vs=vs)
        S = action_functional(traj, land, disc)
        assert S == pytest.approx(0.5 * (w[0]**2 + w[1]**2) * T, rel=1e-12)

    def test_too_short_path_rejected(self):
        land = flat_landscape()
        disc = build_discretization(J=8, dt=1e-3)
        cfg = make_cfg(land, J=8, t_end=0.0, ic=(0.0, 0.0))
        traj = simulate(cfg, rng=None)
        with pytest.raises(ConfigurationError, match="2 records"):
            action_functional(traj, land, disc)


class TestExitRateFit:
    def test_zero_barrier_gives_flat_exit_times(self):
        # nearly degenerate wells under heavy smoothing: the residual
        # barrier is tiny, so mean exit ~ relaxation time at every sigma
        # and the fitted slope is negligible
        raw = build_landscape([Well((0.46, 0.5), 0.5), Well((0.54, 0.5), 0.5)])
        land = mollify(raw, 0.04, (-0.5, 1.5, -0.5, 1.5), 241)
        cfg = make_cfg(land, J=8, sigma=0.1, t_end=200.0, dt=1e-3,
                       ic=(0.46, 0.5))
        study = exit_rate_fit(cfg, sigmas=[0.20, 0.16, 0.13], n_traj=20,
                              master_seed=31)
        assert study.predicted_slope < 5e-4
        assert abs(study.fitted_slope) < 5e-3
        assert np.nanmax(study.mean_exit) < 5 * np.nanmin(study.mean_exit)

    def test_doubling_weights_doubles_predicted_slope(self):
        bounds = (-0.5, 1.5, -0.5, 1.5)
        sigmas = [0.16, 0.13, 0.11]
        results = []
        for scale in (1.0, 2.0):
            raw = build_landscape([Well((0.3, 0.5), 0.3 * scale),
                                   Well((0.7, 0.5), 0.3 * scale)])
            land = mollify(raw, 0.01, bounds, 481)
            cfg = make_cfg(land, J=8, sigma=0.1, t_end=1500.0, dt=1e-3,
                           ic=(0.3, 0.5))
            results.append(exit_rate_fit(cfg, sigmas, n_traj=24,
                                         master_seed=32))
        base, doubled = results
        # smoothing is linear and min() commutes with scaling, so the
        # prediction doubles exactly; the Monte Carlo fit tracks it
        assert doubled.predicted_slope == pytest.approx(
            2 * base.predicted_slope, rel=1e-9)
        assert np.all(base.censoring < 0.1) and np.all(doubled.censoring < 0.1)
        assert 1.5 < doubled.fitted_slope / base.fitted_slope < 2.7

    def test_validation(self):
        land = symmetric_two_well()
        cfg = make_cfg(land, J=8, ic=(0.3, 0.5))
        with pytest.raises(ConfigurationError, match="3 sigma"):
            exit_rate_fit(cfg, sigmas=[0.1, 0.2], n_traj=20, master_seed=0)
        with pytest.raises(ConfigurationError, match="20 trajectories"):
            exit_rate_fit(cfg, sigmas=[0.1, 0.2, 0.3], n_traj=5, master_seed=0)


@pytest.mark.invariant
class TestInvariants:
    def test_quasi_potential_exact_on_constants(self):
        land = quad_landscape()
        disc = build_discretization(J=16, dt=1e-3)
        rng = np.random.default_rng(0)
        n = disc.n_nodes
        for _ in range(25):
            p = rng.uniform(0.0, 1.0, size=2)
            prof = FieldState(t=0.0, u=np.full(n, p[0]), v=np.full(n, p[1]))
            expected = disc.domain_length * float(land.value_at(p[0], p[1]))
            assert quasi_potential(prof, land, disc) == pytest.approx(expected, abs=1e-12)

    def test_barrier_swap_symmetric(self):
        land = symmetric_two_well(a=(0.4, 0.4))
        assert barrier(land, 0, 1).barrier == pytest.approx(
            barrier(land, 1, 0).barrier, abs=1e-9)

    def test_action_nonnegative_on_noisy_paths(self):
        land = quad_landscape()
        cfg = make_cfg(land, J=8, sigma=0.05, t_end=0.5, ic=(0.25, 0.25),
                       record_stride=1)
        for seed in range(3):
            traj = simulate(cfg, stream(seed, 0))
            assert action_functional(traj, land, cfg.disc) >= 0.0

    def test_barrier_weakly_decreases_with_smoothing(self):
        raw = build_landscape([Well((0.3, 0.5), 0.3), Well((0.7, 0.5), 0.3)])
        values = []
        for fw in (0.01, 0.03, 0.05):
            land = mollify(raw, fw, (-0.5, 1.5, -0.5, 1.5), 481)
            values.append(barrier(land, 0, 1).barrier)
        assert values[0] >= values[1] >= values[2]
