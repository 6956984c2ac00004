"""Integrator tests: closed-form decay, observed order, guards, reproducibility."""

import numpy as np
import pytest

from ns2dsens.dynamics import PhysicsParams, SystemKind, SystemSpec, dq_field, with_viscosity2
from ns2dsens.interpolants import SpectralProjection
from ns2dsens.spectral import GridSpec, SpectralField, inner, norm, random_field, taylor_green
from ns2dsens.timestepper import (
    AdmissibilityError,
    AdmissibilityWarning,
    BlowupError,
    CFLWarning,
    SolverConfig,
    Trajectory,
    integrate,
    step_convergence_order,
)

GRID = GridSpec(32)
TG_RATE = 8 * np.pi**2


def tg_flow(grid, nu, t):
    return np.exp(-TG_RATE * nu * t) * taylor_green(grid)


def tg_sensitivity(grid, nu, t):
    return -TG_RATE * t * np.exp(-TG_RATE * nu * t) * taylor_green(grid)


class TestSolverConfig:
    def test_rejects_non_integral_horizon(self):
        with pytest.raises(ValueError, match="integer number of steps"):
            SolverConfig(dt=0.3, t_end=1.0)

    def test_rejects_bad_cadence(self):
        with pytest.raises(ValueError, match="does not divide"):
            SolverConfig(dt=0.1, t_end=1.0, sample_every=3)

    def test_rejects_unknown_scheme(self):
        with pytest.raises(ValueError, match="unknown scheme"):
            SolverConfig(dt=0.1, t_end=1.0, scheme="rk4")

    def test_rejects_dt_beyond_horizon(self):
        with pytest.raises(ValueError, match="exceeds"):
            SolverConfig(dt=2.0, t_end=1.0)

    def test_step_count(self):
        assert SolverConfig(dt=1e-3, t_end=1.0).n_steps == 1000


class TestTaylorGreenDecay:
    def test_flow_matches_exponential_decay(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=1e-3, t_end=0.5, sample_every=100)
        traj = integrate(SystemSpec(SystemKind.NSE), {"u": taylor_green(GRID)}, p, cfg)
        want = tg_flow(GRID, 0.01, 0.5)
        err = norm(traj.final("u") - want) / norm(want)
        assert err < 1e-6

    def test_sensitivity_matches_closed_form(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=1e-3, t_end=0.5, sample_every=100)
        traj = integrate(
            SystemSpec(SystemKind.NSE_SENS), {"u": taylor_green(GRID)}, p, cfg
        )
        want = tg_sensitivity(GRID, 0.01, 0.5)
        err = norm(traj.final("ut") - want) / norm(want)
        assert err < 1e-5

    def test_quotient_stack_tracks_algebraic_quotient(self):
        nu1, nu2 = 0.01, 0.005
        p = PhysicsParams(nu1=nu1, nu2=nu2)
        cfg = SolverConfig(dt=1e-3, t_end=0.5, sample_every=100)
        u0 = taylor_green(GRID)
        traj = integrate(SystemSpec(SystemKind.DQ_DIRECT), {"u1": u0, "u2": u0}, p, cfg)
        alg = dq_field(traj.final("u1"), traj.final("u2"), nu1, nu2)
        err = norm(traj.final("d") - alg) / norm(alg)
        assert err < 1e-6
        # and both agree with the closed form
        decay = (np.exp(-TG_RATE * nu1 * 0.5) - np.exp(-TG_RATE * nu2 * 0.5)) / (nu1 - nu2)
        want = decay * u0
        assert norm(traj.final("d") - want) / norm(want) < 1e-5


class TestObservedOrder:
    def test_second_order_on_closed_form(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=4e-3, t_end=0.5, sample_every=125)
        result = step_convergence_order(
            SystemSpec(SystemKind.NSE),
            {"u": taylor_green(GRID)},
            p,
            cfg,
            exact=lambda t: tg_flow(GRID, 0.01, t),
        )
        assert 1.8 <= result.order <= 2.2
        assert result.errors[0] > result.errors[1] > result.errors[2]

    def test_second_order_against_refined_reference(self):
        p = PhysicsParams(
            nu1=0.02, nu2=0.02, forcing=random_field(GRID, seed=40, kmin=2, kmax=6, l2_norm=0.5)
        )
        init = {"u": random_field(GRID, seed=41, kmin=1, kmax=6, l2_norm=0.5)}
        cfg = SolverConfig(dt=4e-3, t_end=0.2, sample_every=50)
        result = step_convergence_order(SystemSpec(SystemKind.NSE), init, p, cfg)
        assert 1.7 <= result.order <= 2.3

    def test_degenerate_reference_rejected(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=4e-3, t_end=0.2, sample_every=50)
        with pytest.raises(ValueError, match="degenerate refinement"):
            step_convergence_order(
                SystemSpec(SystemKind.NSE),
                {"u": taylor_green(GRID)},
                p,
                cfg,
                refinements=(1, 2, 4),
                reference_refinement=4,
            )


class TestEnergyIdentity:
    def residual(self, dt):
        # d/dt (|u|^2 / 2) + nu ||u||^2 - (f, u) at interior samples, by
        # central differences; second-order accurate for the sampled flow.
        p = PhysicsParams(
            nu1=0.02, nu2=0.02, forcing=random_field(GRID, seed=50, kmin=2, kmax=6)
        )
        cfg = SolverConfig(dt=dt, t_end=0.1, sample_every=1)
        traj = integrate(
            SystemSpec(SystemKind.NSE),
            {"u": random_field(GRID, seed=51, kmin=1, kmax=6)},
            p,
            cfg,
        )
        f = p.forcing
        worst = 0.0
        for i in range(1, traj.n_samples - 1):
            e_prev = 0.5 * traj.norm_series("u")[i - 1] ** 2
            e_next = 0.5 * traj.norm_series("u")[i + 1] ** 2
            dedt = (e_next - e_prev) / (2 * dt)
            u_i = traj.snapshot("u", i)
            rhs = -p.nu1 * norm(u_i, "h1") ** 2 + inner(f, u_i)
            worst = max(worst, abs(dedt - rhs))
        return worst

    def test_balance_residual_is_second_order_small(self):
        coarse = self.residual(2e-3)
        fine = self.residual(1e-3)
        assert coarse < 0.05
        assert fine < coarse / 2.5


class TestGuards:
    def test_blowup_raises_with_history(self):
        p = PhysicsParams(
            nu1=1e-4, nu2=1e-4,
            forcing=random_field(GRID, seed=60, kmin=2, kmax=6, l2_norm=50.0),
        )
        cfg = SolverConfig(dt=0.25, t_end=50.0, sample_every=1)
        init = {"u": random_field(GRID, seed=61, kmin=1, kmax=6, l2_norm=5.0)}
        with warnings_ignored():
            with pytest.raises(BlowupError) as err:
                integrate(SystemSpec(SystemKind.NSE), init, p, cfg)
        assert err.value.field == "u"
        assert err.value.time > 0
        assert len(err.value.history["times"]) >= 1

    def test_cfl_warning(self):
        p = PhysicsParams(nu1=0.05, nu2=0.05)
        cfg = SolverConfig(dt=0.01, t_end=0.03, sample_every=1)
        init = {"u": random_field(GRID, seed=62, kmin=1, kmax=4, l2_norm=2.0)}
        with pytest.warns(CFLWarning):
            integrate(SystemSpec(SystemKind.NSE), init, p, cfg)

    def test_nudging_stability_gate(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01, mu=50.0, interp=SpectralProjection(modes=8))
        cfg = SolverConfig(dt=0.1, t_end=1.0)
        init = {"u": taylor_green(GRID), "v": SpectralField.zero(GRID)}
        with pytest.raises(ValueError, match="dt \\* mu"):
            integrate(SystemSpec(SystemKind.DA), init, p, cfg)

    def test_admissibility_gate_raises(self):
        # mu c0 h^2 = 50 / (4 pi^2 81) ~ 1.56e-2 > nu = 0.01.
        p = PhysicsParams(nu1=0.01, nu2=0.01, mu=50.0, interp=SpectralProjection(modes=8))
        cfg = SolverConfig(dt=1e-3, t_end=0.01, sample_every=10)
        init = {"u": taylor_green(GRID), "v": SpectralField.zero(GRID)}
        with pytest.raises(AdmissibilityError, match="admissibility"):
            integrate(SystemSpec(SystemKind.DA), init, p, cfg)

    def test_admissibility_gate_demotable(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01, mu=50.0, interp=SpectralProjection(modes=8))
        cfg = SolverConfig(dt=1e-3, t_end=0.01, sample_every=10)
        init = {"u": taylor_green(GRID), "v": SpectralField.zero(GRID)}
        with pytest.warns(AdmissibilityWarning):
            traj = integrate(
                SystemSpec(SystemKind.DA), init, p, cfg, enforce_admissibility=False
            )
        assert traj.n_samples == 2


class TestStateHandling:
    def test_missing_field_rejected(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=1e-3, t_end=0.01, sample_every=10)
        with pytest.raises(ValueError, match="missing initial data"):
            integrate(SystemSpec(SystemKind.DA), {"u": taylor_green(GRID)}, p, cfg)

    def test_unknown_field_rejected(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=1e-3, t_end=0.01, sample_every=10)
        init = {"u": taylor_green(GRID), "w": taylor_green(GRID)}
        with pytest.raises(ValueError, match="unknown fields"):
            integrate(SystemSpec(SystemKind.NSE), init, p, cfg)

    def test_quotient_fields_default_to_zero(self):
        p = PhysicsParams(nu1=0.01, nu2=0.005)
        cfg = SolverConfig(dt=1e-3, t_end=0.01, sample_every=10)
        u0 = taylor_green(GRID)
        traj = integrate(SystemSpec(SystemKind.DQ_DIRECT), {"u1": u0, "u2": u0}, p, cfg)
        assert norm(traj.snapshot("d", 0)) == 0.0

    def test_initial_data_projected_on_ingestion(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=1e-3, t_end=0.01, sample_every=10)
        raw = random_field(GRID, seed=63, solenoidal=False)
        traj = integrate(SystemSpec(SystemKind.NSE), {"u": raw}, p, cfg)
        assert traj.snapshot("u", 0).divergence_max() < 1e-13

    def test_sampling_covers_endpoints(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=1e-3, t_end=0.02, sample_every=5)
        traj = integrate(SystemSpec(SystemKind.NSE), {"u": taylor_green(GRID)}, p, cfg)
        assert traj.times[0] == 0.0
        assert traj.times[-1] == pytest.approx(0.02, abs=1e-12)
        assert np.all(np.diff(traj.times) > 0)
        assert traj.n_samples == 5

    def test_projection_drift_is_rounding_level(self):
        p = PhysicsParams(
            nu1=0.01, nu2=0.01, forcing=random_field(GRID, seed=64, kmin=2, kmax=6)
        )
        cfg = SolverConfig(dt=1e-3, t_end=0.1, sample_every=10)
        init = {"u": random_field(GRID, seed=65, kmin=1, kmax=6)}
        traj = integrate(SystemSpec(SystemKind.NSE), init, p, cfg)
        assert traj.max_projection_drift < 1e-13

    def test_window_slicing(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01)
        cfg = SolverConfig(dt=1e-3, t_end=0.02, sample_every=5)
        traj = integrate(SystemSpec(SystemKind.NSE), {"u": taylor_green(GRID)}, p, cfg)
        win = traj.window(1, 3)
        assert win.n_samples == 3
        assert win.times[0] == traj.times[1]
        assert np.array_equal(win.norm_series("u"), traj.norm_series("u")[1:4])


class TestDeterminism:
    def test_bit_identical_repeat(self):
        p = PhysicsParams(
            nu1=0.01, nu2=0.008, forcing=random_field(GRID, seed=70, kmin=2, kmax=6)
        )
        cfg = SolverConfig(dt=1e-3, t_end=0.05, sample_every=10)
        init = {"u1": taylor_green(GRID), "u2": taylor_green(GRID)}
        a = integrate(SystemSpec(SystemKind.DQ_DIRECT), init, p, cfg)
        b = integrate(SystemSpec(SystemKind.DQ_DIRECT), init, p, cfg)
        for name in ("u1", "u2", "d"):
            assert np.array_equal(a.final(name).coeffs, b.final(name).coeffs)


class TestViscositySwitch:
    def _da_setup(self):
        p = PhysicsParams(nu1=0.01, nu2=0.01, mu=10.0, interp=SpectralProjection(modes=8))
        cfg = SolverConfig(dt=1e-3, t_end=0.2, sample_every=20)
        init = {
            "u": taylor_green(GRID),
            "v": random_field(GRID, seed=80, kmin=1, kmax=4, l2_norm=0.5),
        }
        return p, cfg, init

    def test_noop_switch_bit_identical(self):
        p, cfg, init = self._da_setup()
        plain = integrate(SystemSpec(SystemKind.DA), init, p, cfg)
        switched = integrate(
            SystemSpec(SystemKind.DA), init, p, cfg, nu2_switch=(0.1, p.nu2)
        )
        for name in ("u", "v"):
            for i in range(plain.n_samples):
                assert np.array_equal(
                    plain.snapshot(name, i).coeffs, switched.snapshot(name, i).coeffs
                )

    def test_real_switch_changes_solution(self):
        p, cfg, init = self._da_setup()
        plain = integrate(SystemSpec(SystemKind.DA), init, p, cfg)
        switched = integrate(
            SystemSpec(SystemKind.DA), init, p, cfg, nu2_switch=(0.1, 0.005)
        )
        assert np.array_equal(
            plain.snapshot("v", plain.index_at_time(0.1)).coeffs,
            switched.snapshot("v", switched.index_at_time(0.1)).coeffs,
        )
        assert norm(plain.final("v") - switched.final("v")) > 1e-8

    def test_switch_follows_piecewise_closed_form(self):
        # Stokes-only assimilating field with mu = 0: piecewise exponential.
        p = PhysicsParams(nu1=0.01, nu2=0.02)
        cfg = SolverConfig(dt=1e-3, t_end=0.2, sample_every=20)
        u0 = taylor_green(GRID)
        init = {"u": u0, "v": u0}
        traj = integrate(
            SystemSpec(SystemKind.DA, linear_only=True), init, p, cfg,
            nu2_switch=(0.1, 0.04),
        )
        factor = np.exp(-TG_RATE * 0.02 * 0.1) * np.exp(-TG_RATE * 0.04 * 0.1)
        want = factor * u0
        assert norm(traj.final("v") - want) / norm(want) < 1e-5

    def test_switch_validation(self):
        p, cfg, init = self._da_setup()
        with pytest.raises(ValueError, match="step boundary"):
            integrate(SystemSpec(SystemKind.DA), init, p, cfg, nu2_switch=(0.10005, 0.005))
        with pytest.raises(ValueError, match="strictly inside"):
            integrate(SystemSpec(SystemKind.DA), init, p, cfg, nu2_switch=(0.2, 0.005))
        with pytest.raises(ValueError, match="positive"):
            integrate(SystemSpec(SystemKind.DA), init, p, cfg, nu2_switch=(0.1, -1.0))

    def test_with_viscosity2_reuses_forcing(self):
        f = random_field(GRID, seed=81)
        p = PhysicsParams(nu1=0.01, nu2=0.01, forcing=f)
        q = with_viscosity2(p, 0.02)
        assert q.forcing is p.forcing
        assert q.nu2 == 0.02
        assert q.nu1 == p.nu1


class warnings_ignored:
    def __enter__(self):
        import warnings

        self._cm = warnings.catch_warnings()
        self._cm.__enter__()
        warnings.simplefilter("ignore")
        return self

    def __exit__(self, *exc):
        return self._cm.__exit__(*exc)
