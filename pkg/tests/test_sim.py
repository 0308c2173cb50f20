"""Closed-loop integration: equilibria, disturbances, sweeps and the cascade."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexlink.metrics import compute_metrics
from flexlink.sim import (DIVERGENCE_LIMIT, ClosedLoop, DisturbanceSpec, PDGains, SimConfig,
                          SimulationDiverged, disturbance_signal, run_scenario,
                          scaled_config, simulate_open_loop, step_closed_loop,
                          sweep_initial_conditions)


def _run(loaded, **kw):
    sc = loaded.scenario
    return run_scenario(replace(sc.sim, **kw), loaded.systems, sc.controller, loaded.observer)


def _at_rest_on_target(loaded):
    """Plant and observer both sitting exactly at the set-point."""
    cfg = loaded.scenario.sim
    cs = loaded.systems.canonical
    psi = np.zeros(loaded.systems.truth.dim)
    psi[0] = cfg.theta_d
    return dict(plant_ic=tuple(psi), observer_ic=tuple(cs.transform_state(psi[:cs.dim])))


class TestDisturbance:
    def test_none(self):
        xi = disturbance_signal(DisturbanceSpec())
        assert xi(0.3) == 0.0 and DisturbanceSpec().bound == 0.0

    def test_sine(self):
        xi = disturbance_signal(DisturbanceSpec("sine", 0.5, 2.0))
        for t in (0.0, 0.1, 1.7, 5.0):
            assert xi(t) == 0.5 * math.sin(2.0 * t)

    def test_step(self):
        xi = disturbance_signal(DisturbanceSpec("step", 0.2, step_time=1.0))
        assert [xi(0.5), xi(1.0), xi(3.0)] == [0.0, 0.2, 0.2]

    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0), st.lists(st.floats(0, 100), max_size=20))
    @settings(max_examples=50)
    def test_noise_respects_bound(self, seed, amp, ts):
        spec = DisturbanceSpec("band-limited-noise", amp, 5.0, seed=seed)
        xi = disturbance_signal(spec)
        assert all(abs(xi(t)) <= spec.bound * (1 + 1e-12) for t in ts)

    def test_noise_is_seeded(self):
        a = disturbance_signal(DisturbanceSpec("band-limited-noise", 0.3, seed=4))
        b = disturbance_signal(DisturbanceSpec("band-limited-noise", 0.3, seed=4))
        c = disturbance_signal(DisturbanceSpec("band-limited-noise", 0.3, seed=5))
        ts = np.linspace(0, 3, 31)
        assert [a(t) for t in ts] == [b(t) for t in ts]
        assert [a(t) for t in ts] != [c(t) for t in ts]

    @pytest.mark.parametrize("kw, msg", [(dict(kind="pink"), "unknown"),
                                         (dict(amplitude=-1.0), "non-negative"),
                                         (dict(kind="band-limited-noise", n_components=0),
                                          "n_components")])
    def test_validation(self, kw, msg):
        with pytest.raises(ValueError, match=msg):
            DisturbanceSpec(**kw)


class TestConfig:
    @pytest.mark.parametrize("kw, msg", [(dict(dt=0.0), "dt"), (dict(t_end=-1.0), "t_end"),
                                         (dict(truth_modes=3), "truth_modes"),
                                         (dict(controller="lqr"), "controller"),
                                         (dict(saturation=0.0), "saturation")])
    def test_rejects(self, kw, msg):
        with pytest.raises(ValueError, match=msg):
            SimConfig(**kw)

    def test_pd_gains(self):
        with pytest.raises(ValueError):
            PDGains(kp=-1.0)

    def test_n_steps(self):
        assert SimConfig(dt=1e-3, t_end=2.0).n_steps == 2000

    def test_bad_initial_conditions(self, loaded):
        with pytest.raises(ValueError, match="plant_ic"):
            _run(loaded, plant_ic=(0.0,) * 7)
        with pytest.raises(ValueError, match="observer_ic"):
            _run(loaded, observer_ic=(0.0,) * 3)


class TestIntegration:
    def test_equilibrium_is_fixed(self, loaded):
        tr = _run(loaded, t_end=0.05, **_at_rest_on_target(loaded))
        drift = np.abs(np.diff(np.hstack([tr.psi, tr.z_hat]), axis=0)).max()
        assert drift < 1e-9
        assert np.abs(tr.theta_t - tr.theta_d).max() < 1e-9

    def test_zero_horizon(self, loaded):
        tr = _run(loaded, t_end=0.0)
        assert len(tr) == 1 and tr.t[0] == 0.0

    def test_fast_step_matches_rk4(self, loaded):
        sc = loaded.scenario
        for cfg in (replace(sc.sim, disturbance=DisturbanceSpec("sine", 0.3, 3.0)),
                    replace(sc.sim, theory_mode=True)):
            loop = ClosedLoop(cfg, loaded.systems, sc.controller, loaded.observer)
            rng = np.random.default_rng(0)
            for _ in range(20):
                x = rng.normal(size=loop.m + loop.n) * 0.5
                t, u = rng.uniform(0, 5), rng.normal()
                ref = loop.step(x, t, u)
                np.testing.assert_allclose(loop.fast_step(x, t, u), ref,
                                           rtol=1e-12, atol=1e-13 * np.abs(ref).max())

    def test_trace_shapes(self, default_trace, loaded):
        N = loaded.scenario.sim.n_steps + 1
        tr = default_trace
        assert len(tr) == N
        assert tr.psi.shape == (N, 6) and tr.z_hat.shape == (N, 4) and tr.s.shape == (N, 4)
        np.testing.assert_allclose(np.diff(tr.t), loaded.scenario.sim.dt, rtol=1e-9)
        assert 0.0 <= tr.boundary_layer_fraction <= 1.0
        np.testing.assert_allclose(tr.estimation_error, tr.z - tr.z_hat)

    def test_step_closed_loop_matches_run(self, loaded):
        sc = loaded.scenario
        loop = ClosedLoop(replace(sc.sim, t_end=0.01), loaded.systems, sc.controller, loaded.observer)
        x = loop.initial_state()
        for k in range(100):
            x, _, _ = step_closed_loop(x, k * sc.sim.dt, loop)
        tr = _run(loaded, t_end=0.01)
        np.testing.assert_allclose(x[:6], tr.psi[-1], rtol=1e-10, atol=1e-14)

    def test_saturation_counts(self, loaded):
        tr = _run(loaded, t_end=0.2, saturation=0.05)
        assert tr.saturation_steps > 0
        assert np.abs(tr.u).max() <= 0.05
        assert np.any(tr.u != tr.u_cmd)

    def test_theory_mode_does_not_saturate(self, loaded):
        tr = _run(loaded, t_end=0.2, saturation=0.05, theory_mode=True)
        assert tr.saturation_steps == 0
        np.testing.assert_array_equal(tr.u, tr.u_cmd)

    def test_divergence_is_reported(self, loaded):
        with pytest.raises(SimulationDiverged) as info:
            _run(loaded, plant_ic=(2 * DIVERGENCE_LIMIT,))
        assert info.value.t == 0.0
        loop = ClosedLoop(loaded.scenario.sim, loaded.systems, loaded.scenario.controller,
                          loaded.observer)
        x = loop.initial_state()
        x[0] = np.nan
        with pytest.raises(SimulationDiverged):
            step_closed_loop(x, 0.0, loop)

    def test_pd_baseline_runs(self, loaded):
        tr = _run(loaded, controller="pd", t_end=2.0)
        assert np.isfinite(tr.psi).all()
        assert np.all(np.diff(tr.theta_t[::1000]) > 0)  # still climbing, no overshoot yet
        assert 0.5 * tr.theta_d < tr.theta_t[-1] < tr.theta_d


class TestOpenLoop:
    def test_rest_stays_at_rest(self, systems):
        t, psi = simulate_open_loop(systems.truth, np.zeros(6), 1e-3, 0.5)
        assert t.size == 501 and not psi.any()

    def test_constant_torque_rigid_acceleration(self, systems):
        """Hub momentum grows as u t: the rigid row of the plant is pure inertia."""
        u, T = 0.01, 0.5
        t, psi = simulate_open_loop(systems.truth, np.zeros(6), 1e-4, T, u=u)
        assert psi[-1, 1] == pytest.approx(u * T / systems.truth.J_t, rel=1e-9)

    def test_shape_check(self, systems):
        with pytest.raises(ValueError, match="psi0"):
            simulate_open_loop(systems.truth, np.zeros(4), 1e-3, 0.1)


class TestSweep:
    def test_empty_scales(self, loaded):
        sc = loaded.scenario
        with pytest.raises(ValueError, match="at least one"):
            sweep_initial_conditions(sc.sim, loaded.systems, sc.controller, loaded.observer, [], 1.0)

    def test_bad_target(self, loaded):
        with pytest.raises(ValueError, match="target"):
            scaled_config(loaded.scenario.sim, loaded.systems, 1.0, target="both")

    def test_plant_scaling(self, loaded):
        cfg = scaled_config(loaded.scenario.sim, loaded.systems, 10.0)
        assert cfg.plant_ic[0] == pytest.approx(math.pi / 4 - 10 * math.pi / 4)
        assert cfg.plant_ic[1:] == (0.0,) * 5

    def test_observer_scaling_default_base(self, loaded):
        sysm = loaded.systems
        cfg = scaled_config(loaded.scenario.sim, sysm, 1.0, target="observer")
        z_d = sysm.canonical.transform_desired(sysm.desired_state(loaded.scenario.sim.theta_d))
        np.testing.assert_allclose(cfg.observer_ic, z_d, atol=1e-15)
        zero = scaled_config(loaded.scenario.sim, sysm, 0.0, target="observer")
        np.testing.assert_array_equal(zero.observer_ic, np.zeros(4))

    def test_single_scale_matches_run(self, loaded, default_trace):
        from flexlink.metrics import settling_time
        sc = loaded.scenario
        rep = sweep_initial_conditions(sc.sim, loaded.systems, sc.controller, loaded.observer,
                                       [1.0], loaded.T_total)
        direct = settling_time(default_trace.t, default_trace.theta_t, sc.sim.theta_d, 0.02,
                               abs(sc.sim.theta_d))
        assert rep.rows[0].settling_time == direct.time
        assert rep.violations == 0 and rep.bound == loaded.T_total

    def test_diverged_row(self, loaded):
        sc = loaded.scenario
        rep = sweep_initial_conditions(replace(sc.sim, t_end=0.01), loaded.systems, sc.controller,
                                       loaded.observer, [1e7 / (math.pi / 4)], 1.0)
        assert rep.rows[0].diverged and rep.violations == 1


class TestDefaultScenario:
    def test_s3_reaches_band_before_bound(self, default_trace, loaded):
        s3 = np.abs(default_trace.s[:, 3])
        assert s3[0] > 1e-3
        first = default_trace.t[np.argmax(s3 < 1e-3)]
        assert first < loaded.controller_bounds.stages[3]

    def test_cascade(self, default_trace):
        """Output estimate is in its band before the last surface is."""
        tr = default_trace
        t_obs = tr.t[np.argmax(np.linalg.norm(tr.e_y, axis=1) < 1e-4)]
        t_s3 = tr.t[np.argmax(np.abs(tr.s[:, 3]) < 1e-3)]
        assert t_obs <= t_s3

    def test_surface_does_not_wait_for_estimate(self, loaded):
        """s3 is built from the estimate, so with an offset plant it reaches its
        band long before the estimate converges; the ordering above is not causal."""
        tr = _run(loaded, t_end=2.0, plant_ic=(0.0, 0.0, 0.0, 0.0, 0.01, 0.0))
        t_obs = tr.t[np.argmax(np.linalg.norm(tr.e_y, axis=1) < 1e-4)]
        t_s3 = tr.t[np.argmax(np.abs(tr.s[:, 3]) < 1e-3)]
        assert t_s3 < 0.1 < t_obs

    def test_surfaces_vanish(self, default_trace):
        tail = np.abs(default_trace.s[int(0.8 * len(default_trace)):])
        assert tail.max() < 1e-6


@pytest.fixture(scope="module")
def residuals(loaded):
    """Steady tip RMS under a 2 rad/s matched sine of three amplitudes."""
    out = {}
    for amp in (0.1, 0.25, 0.5):
        tr = _run(loaded, t_end=5.0, disturbance=DisturbanceSpec("sine", amp, 2.0))
        out[amp] = compute_metrics(tr).steady_state_norm_tip
    return out


class TestSineRejection:
    """A matched sine the observer cannot see biases the estimate by about xi/l,
    so the output-feedback loop keeps a residual proportional to the amplitude."""

    def test_residual_is_small_and_linear(self, residuals):
        assert residuals[0.5] < 1e-2
        ratios = [residuals[a] / a for a in residuals]
        assert max(ratios) / min(ratios) < 1.3

    @pytest.mark.xfail(strict=True, reason="observer bias under an unmeasured matched input; "
                       "measured about 6.5e-3 rad, see decisions ledger")
    def test_target_1e_3(self, residuals):
        assert residuals[0.5] <= 1e-3

    @pytest.mark.xfail(strict=True, reason="undisturbed band is at rounding level, so any "
                       "disturbance exceeds twice it")
    def test_band_within_twice_undisturbed(self, residuals, default_trace):
        base = compute_metrics(default_trace).steady_state_norm_tip
        assert residuals[0.1] <= 2 * base
