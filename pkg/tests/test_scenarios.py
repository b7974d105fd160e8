import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beamfrac import scenarios as scn
from beamfrac.errors import ConfigError, DomainError, UnsupportedScenarioError
from beamfrac.scenarios import ScenarioConfig

SPALL = dict(length=0.1, radius=1e-3, youngs_modulus=260e9, density=3690.0, sigma_c=400e6,
             fracture_energy=100.0, mode_mixity=1.0)


def transverse(**kw):
    base = dict(SPALL, h=2.5e-3, load_rate=1.0, t_end=2e-3, snapshot_stride=0)
    base.update(kw)
    return ScenarioConfig("transverse_fracture", **base)


class TestBucklingOracle:
    def test_table_value(self):
        assert scn.oracle_buckling_load(200e9, 0.1, 10.0) == pytest.approx(1.5503e6, rel=1e-4)

    @given(st.floats(1e6, 1e12), st.floats(1e-3, 1.0), st.floats(0.1, 100.0))
    def test_scaling(self, E, R, L):
        f = scn.oracle_buckling_load(E, R, L)
        assert scn.oracle_buckling_load(E, R, 2 * L) == pytest.approx(f / 4)
        assert scn.oracle_buckling_load(E, 2 * R, L) == pytest.approx(16 * f)

    def test_domain(self):
        with pytest.raises(DomainError):
            scn.oracle_buckling_load(200e9, 0.0, 1.0)


class TestDoubleCircle:
    def test_points(self):
        np.testing.assert_allclose(scn.oracle_double_circle(0.0, 1.0), 0.0)
        np.testing.assert_allclose(scn.oracle_double_circle(0.5, 1.0), 0.0, atol=1e-15)
        a = 1 / (4 * np.pi)
        assert a == pytest.approx(0.07958, abs=1e-5)
        np.testing.assert_allclose(scn.oracle_double_circle(0.125, 1.0), [a, a, 0], rtol=1e-12)

    @given(st.floats(0.0, 1.0))
    def test_unit_speed_on_circle(self, s):
        a = 1 / (4 * np.pi)
        p = scn.oracle_double_circle(s, 1.0)
        assert np.linalg.norm(p - [0, a, 0]) == pytest.approx(a)

    def test_outside(self):
        with pytest.raises(DomainError):
            scn.oracle_double_circle(1.5, 1.0)


class TestRelativeError:
    s = np.linspace(0, 1, 11)
    w = np.full(11, 1 / 11)

    def test_identical(self):
        r = np.random.default_rng(0).standard_normal((11, 3))
        assert scn.relative_l2_error(r, r, self.w, 1.0, 1.0) == 0.0

    @given(st.floats(1e-6, 10.0), st.floats(1e-3, 10.0))
    def test_constant_offset(self, d, umax):
        r = np.zeros((11, 3))
        assert scn.relative_l2_error(r + [0, d, 0], r, self.w, umax, 1.0) == pytest.approx(d / umax)

    def test_needs_positive_scale(self):
        with pytest.raises(DomainError):
            scn.relative_l2_error(np.zeros((2, 3)), np.zeros((2, 3)), [1, 1], 0.0, 1.0)


class TestSpallOracle:
    L, E, rho, sf = 0.1, 260e9, 3690.0, 40e6
    c = math.sqrt(E / rho)
    T = L / (2 * c)

    def sigma(self, t, s, fractured=False):
        return scn.oracle_spall_stress(t, s, self.L, self.E, self.rho, self.sf, fractured)

    def test_table_numbers(self):
        assert self.c == pytest.approx(8394.1, abs=0.05)
        assert self.T == pytest.approx(5.9566e-6, rel=1e-4)

    def test_quarter_gauge(self):
        g = self.L / 4
        assert self.sigma(0.0, g) == 0.0
        assert self.sigma(0.499 * self.T, g) == 0.0
        assert self.sigma(0.501 * self.T, g) == pytest.approx(self.sf / 2)
        assert self.sigma(1.51 * self.T, g) == pytest.approx(self.sf)

    def test_release_after_spall(self):
        g = self.L / 4
        assert self.sigma(1.49 * self.T, g, True) == pytest.approx(self.sf / 2)
        assert self.sigma(1.51 * self.T, g, True) == 0.0

    def test_gauge_outside_half_bar(self):
        with pytest.raises(DomainError):
            self.sigma(1e-6, 0.07)


class TestCriticalForce:
    # ideal bifurcation: linear up to the knee, flat afterwards
    d = np.linspace(1e-4, 1.0, 200)
    f = np.minimum(2.0 * d, 1.0)
    w = np.where(d < 0.5, 1e-3 * d, 1e-3 * 0.5 + (d - 0.5))

    def test_knee(self):
        assert scn.critical_force_knee(self.d, self.f) == pytest.approx(1.0, rel=1e-9)

    def test_extrapolation_rule(self):
        assert scn.critical_force_extrapolation(self.d, self.f, self.w) == pytest.approx(1.0)

    def test_rule_without_growth(self):
        assert scn.critical_force_extrapolation(self.d, self.f, 1e-3 * self.d) is None

    def test_knee_needs_points(self):
        with pytest.raises(DomainError):
            scn.critical_force_knee(self.d[:5], self.f[:5])


class TestObservedOrder:
    def test_quartic(self):
        h = [0.1 / 2**k for k in range(4)]
        orders = scn.observed_orders(h, [x**4 for x in h])
        assert orders[0] is None
        assert orders[1:] == pytest.approx([4, 4, 4])

    def test_zero_error_gives_no_order(self):
        assert scn.observed_orders([1.0, 0.5], [0.0, 0.0]) == [None, None]


class TestConfigValidation:
    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="unknown scenario"):
            ScenarioConfig("bridge")

    def test_missing_field_is_named(self):
        with pytest.raises(ConfigError, match="requires 'kappa0'"):
            ScenarioConfig("spaghetti", h=1e-3, t_end=1e-3, **SPALL)

    def test_penalty_bound(self):
        with pytest.raises(ConfigError, match="beta_p must exceed 1"):
            transverse(beta_p=0.5)

    def test_solver_choice(self):
        assert transverse().solver == "newton"
        assert transverse(solver="explicit").solver == "explicit"
        with pytest.raises(ConfigError):
            ScenarioConfig("buckling", length=1, radius=0.1, youngs_modulus=1e9, h=0.1, delta=1e-3,
                           perturbation_force=1.0, solver="explicit")

    def test_positive(self):
        with pytest.raises(ConfigError, match="must be positive"):
            transverse(h=-1e-3)

    def test_odd_mesh_has_no_centre_interface(self):
        with pytest.raises(ConfigError):
            scn.build_scenario(transverse(h=0.1 / 41))


class TestScenarioRuns:
    def test_cantilever_coarse(self):
        cfg = ScenarioConfig("cantilever_moment", length=1.0, radius=0.01, youngs_modulus=200e9, h=0.25,
                             end_moment=math.pi**2 * 200e9 * 1e-8, snapshot_stride=0)
        res = scn.build_scenario(cfg).run()
        # 4 elements already track the double circle to a few percent
        assert res.summary["relative_l2_error"] < 0.05
        assert len(res.history["step"]) == 50

    def test_buckling_small_column(self):
        # the tabulated column scaled down by ten; coarser load steps jump
        # over the bifurcation onto the unstable straight branch
        cfg = ScenarioConfig("buckling", length=1.0, radius=0.01, youngs_modulus=200e9, h=0.1,
                             delta=5e-4, perturbation_force=1e-2, load_steps=1000, snapshot_stride=0)
        s = scn.build_scenario(cfg).run().summary
        assert s["f_cr_relative_error"] == pytest.approx(0.0, abs=0.02)
        assert s["post_buckling_force_max"] < 1.05 * s["f_cr_oracle"]
        assert abs(s["final_deflection"]) > 1e-3

    def test_transverse_full_model_fractures(self):
        s = scn.build_scenario(transverse()).run().summary
        assert s["center_failed"]
        assert s["n_failed"] == 1
        assert 0.7 < s["peak_moment_over_m_cr"] < 0.9
        assert abs(s["final_moment_over_m_cr"]) < 1e-3

    def test_transverse_ablation_tracks_pure_dg(self):
        a = scn.build_scenario(transverse(bending_initiation=False)).run()
        b = scn.build_scenario(transverse(fracture=False)).run()
        assert a.summary["n_initiated"] == 0
        np.testing.assert_allclose(a.history["gauge_moment"], b.history["gauge_moment"], rtol=1e-3)

    def test_spall_short_run_no_fracture(self):
        cfg = ScenarioConfig("spall", h=1e-3, dt=1e-9, sigma_f=40e6, t_end=2e-6, snapshot_stride=0, **SPALL)
        s = scn.build_scenario(cfg).run().summary
        assert not s["fracture"]
        assert s["dt_critical"] > 1e-9

    def test_time_step_above_limit(self):
        cfg = ScenarioConfig("spall", h=1e-3, dt=1e-7, sigma_f=40e6, t_end=2e-6, **SPALL)
        with pytest.raises(scn.SolverError):
            scn.build_scenario(cfg).run()

    def test_convergence_needs_reference(self):
        with pytest.raises(UnsupportedScenarioError):
            scn.convergence_study(transverse())

    def test_convergence_rows(self):
        cfg = ScenarioConfig("cantilever_moment", length=1.0, radius=0.01, youngs_modulus=200e9, h=0.25,
                             end_moment=math.pi**2 * 200e9 * 1e-8)
        rows = scn.convergence_study(cfg, levels=3, betas=(100.0,))
        assert [r.h for r in rows] == [0.25, 0.125, 0.0625]
        assert rows[0].observed_order is None
        assert rows[0].error > rows[1].error > rows[2].error
