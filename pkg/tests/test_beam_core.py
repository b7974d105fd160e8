import numpy as np
import pytest
from conftest import fd_jacobian, rotation
from hypothesis import given
from hypothesis import strategies as st

from beamfrac import beam_core as bc
from beamfrac.errors import DegenerateElementError, DomainError

xi_s = st.floats(-1.0, 1.0)
vec = st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3).map(np.array)


class TestShapeFunctions:
    def test_node_values(self):
        left, right = bc.shape_functions(-1.0, 2.0), bc.shape_functions(1.0, 2.0)
        np.testing.assert_allclose(left.basis(0), [1, 0, 0, 0], atol=1e-15)
        np.testing.assert_allclose(right.basis(0), [0, 0, 1, 0], atol=1e-15)
        # tangent slots carry the unit slope at their own node
        np.testing.assert_allclose(left.basis(1), [0, 1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(right.basis(1), [0, 0, 0, 1], atol=1e-15)

    @given(xi_s, st.floats(0.01, 10.0))
    def test_partition_of_unity(self, xi, L):
        N = bc.shape_functions(xi, L).basis(0)
        assert N[0] + N[2] == pytest.approx(1.0, abs=1e-12)

    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), xi_s)
    def test_reproduces_cubics(self, c, xi):
        L = 1.7
        p = np.polynomial.Polynomial(c)
        dp = p.deriv()
        X = np.array([[p(0.0), 0, 0], [dp(0.0), 0, 0], [p(L), 0, 0], [dp(L), 0, 0]])
        sh = bc.shape_functions(xi, L)
        s = 0.5 * L * (1 + xi)
        for k in range(4):
            assert (sh.basis(k) @ X)[0] == pytest.approx(p.deriv(k)(s) if k else p(s), abs=1e-9)

    def test_vectorized_matches_scalar(self):
        xi = np.array([-0.3, 0.2, 0.9])
        L = np.array([0.5, 2.0])
        tab = bc.slot_basis(xi, L)
        for e, Le in enumerate(L):
            for g, x in enumerate(xi):
                sh = bc.shape_functions(x, Le)
                for k in range(4):
                    np.testing.assert_allclose(tab[k, e, g], sh.basis(k), rtol=1e-14)

    @pytest.mark.parametrize("xi", [-1.5, 1.0001])
    def test_outside_reference_interval(self, xi):
        with pytest.raises(DomainError):
            bc.shape_functions(xi, 1.0)

    def test_non_positive_length(self):
        with pytest.raises(DomainError):
            bc.shape_functions(0.0, 0.0)


class TestKinematics:
    def test_straight_element_is_unstrained(self):
        kin = bc.interpolate(bc.ElementDofs.straight([1, 2, 3], [1, 1, 0], 0.4), 0.3)
        assert kin.eps == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(kin.kappa, 0.0, atol=1e-13)
        np.testing.assert_allclose(kin.g1, np.array([1, 1, 0]) / np.sqrt(2))

    @pytest.mark.parametrize("stretch", [0.9, 1.0, 1.25])
    def test_uniform_stretch(self, stretch):
        el = bc.ElementDofs([0, 0, 0], [stretch, 0, 0], [stretch, 0, 0], [stretch, 0, 0], 1.0)
        for xi in (-1.0, 0.0, 0.7):
            assert bc.interpolate(el, xi).eps == pytest.approx(stretch - 1.0, abs=1e-14)

    def test_constant_curvature_of_planar_cubic(self):
        # r(s) = (s, c s^2/2, 0) has curvature c / (1 + c^2 s^2)^(3/2) in z
        c, L = 0.3, 1.0
        el = bc.ElementDofs([0, 0, 0], [1, 0, 0], [L, c * L**2 / 2, 0], [1, c * L, 0], L)
        kin = bc.interpolate(el, -1.0)
        np.testing.assert_allclose(kin.kappa, [0, 0, c], rtol=1e-12)

    def test_degenerate_tangent(self):
        el = bc.ElementDofs([0, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0], 1.0)
        with pytest.raises(DegenerateElementError):
            bc.interpolate(el, 0.0)

    @given(vec, vec, st.floats(0.0, 6.0))
    def test_objectivity(self, a, b, angle):
        r1 = np.array([1.0, 0.1, -0.2]) + 0.2 * a
        r2 = b
        Q = rotation([0.3, -1.0, 0.5], angle)
        k0 = bc.kinematic_terms(r1, r2)
        k1 = bc.kinematic_terms(Q @ r1, Q @ r2)
        assert k1["eps"] == pytest.approx(k0["eps"], abs=1e-12)
        np.testing.assert_allclose(k1["kappa"], Q @ k0["kappa"], atol=1e-10)
        np.testing.assert_allclose(k1["g1"], Q @ k0["g1"], atol=1e-12)

    def test_rotated_axial_force(self):
        sec = bc.MaterialSection(1.0e9, 1.0, 0.01)
        el = bc.ElementDofs([0, 0, 0], [1.1, 0, 0], [1.1, 0, 0], [1.1, 0, 0], 1.0)
        Q = rotation([0, 0, 1], 0.7)
        rot = bc.ElementDofs.from_slots(el.as_slots() @ Q.T, 1.0)
        f0 = bc.axial_force(bc.interpolate(el, 0.2), sec)
        f1 = bc.axial_force(bc.interpolate(rot, 0.2), sec)
        np.testing.assert_allclose(f1, Q @ f0, rtol=1e-12)
        assert np.linalg.norm(f1) == pytest.approx(sec.EA * 0.1, rel=1e-12)


class TestLinearizations:
    r1 = np.array([1.05, 0.2, -0.1])
    r2 = np.array([0.3, -0.4, 0.8])
    r3 = np.array([-0.2, 0.5, 0.1])

    def term(self, name, i):
        def f(v):
            args = [self.r1, self.r2, self.r3]
            args[i] = v
            return bc.kinematic_terms(*args)[name]
        return f

    @pytest.mark.parametrize("name,fn,n_args", [
        ("t1", bc.d_t1, 1), ("t2", bc.d_t2, 2), ("t3", bc.d_t3, 2),
        ("t4", bc.d_t4, 1), ("t6", bc.d_t6, 3), ("kappa", bc.d_kappa, 2),
    ])
    def test_against_finite_differences(self, name, fn, n_args):
        args = (self.r1, self.r2, self.r3)[:n_args]
        out = fn(*args)
        out = out if isinstance(out, tuple) else (out,)
        for i, D in enumerate(out):
            J = fd_jacobian(self.term(name, i), (self.r1, self.r2, self.r3)[i])
            np.testing.assert_allclose(D, J, rtol=1e-6, atol=1e-7)

    def test_G1_product(self):
        j = np.array([0.4, -1.0, 2.0])
        J = fd_jacobian(lambda v: bc.kinematic_terms(v, self.r2)["G1"] @ j, self.r1)
        np.testing.assert_allclose(bc.d_G1_times(self.r1, j), J, rtol=1e-6, atol=1e-8)


class TestSection:
    def test_properties(self):
        s = bc.MaterialSection(E=200e9, rho=7800, R=0.1)
        assert s.A == pytest.approx(np.pi * 0.01)
        assert s.I == pytest.approx(np.pi * 1e-4 / 4)
        assert s.wave_speed == pytest.approx(np.sqrt(200e9 / 7800))

    @pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
    def test_rejects_non_positive(self, args):
        with pytest.raises(DomainError):
            bc.MaterialSection(*args)
