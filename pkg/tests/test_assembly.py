import numpy as np
import pytest
import scipy.linalg
from conftest import fd_jacobian, rotate_state, rotation
from hypothesis import given
from hypothesis import strategies as st

from beamfrac import assembly as asm
from beamfrac import beam_core as bc
from beamfrac import solvers as sv
from beamfrac.cohesive import CohesiveParams, InterfaceState
from beamfrac.errors import DomainError

PEN = asm.PenaltyParams(10.0, 10.0)


def perturbed(mesh, rng, scale=0.05):
    return mesh.reference_state() + scale * rng.standard_normal(mesh.n_dofs)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestMesh:
    def test_layout(self, mesh4):
        assert mesh4.n_dofs == 48 and mesh4.n_interfaces == 3
        np.testing.assert_allclose(mesh4.interface_s, [0.25, 0.5, 0.75])
        assert asm.BeamMesh.dof(2, 1, 0) == 27
        assert len(mesh4.position_dofs_at(0.5)) == 2  # duplicated node
        assert mesh4.position_dofs_at(0.3) == []

    def test_reference_state(self, mesh4):
        X = mesh4.reference_state().reshape(4, 4, 3)
        np.testing.assert_allclose(X[:, 1], [[1, 0, 0]] * 4)
        np.testing.assert_allclose(X[:, 2, 0], [0.25, 0.5, 0.75, 1.0])

    def test_h_must_divide_length(self):
        with pytest.raises(DomainError):
            asm.BeamMesh.uniform(1.0, h=0.3)

    def test_penalty_bound(self):
        with pytest.raises(DomainError, match="beta_p must exceed 1"):
            asm.PenaltyParams(0.5, 10)

    def test_neumann_dirichlet_clash(self):
        with pytest.raises(DomainError):
            asm.LoadSpec(point_forces={3: 1.0}, dirichlet={3: lambda t: 0.0})


class TestMass:
    def test_total_mass(self, mesh4, steel):
        M, lumped = asm.assemble_mass(mesh4, steel)
        total = steel.rho * steel.A * 1.0
        assert lumped.reshape(-1, 4, 3)[:, 0::2, 0].sum() == pytest.approx(total)
        ux = np.zeros(mesh4.n_dofs)
        ux[0::3] = 0.0
        ux[[12 * e + 3 * a for e in range(4) for a in (0, 2)]] = 1.0
        assert ux @ M @ ux == pytest.approx(total, rel=1e-12)

    def test_lumped_positive(self, mesh4, steel):
        assert np.all(asm.assemble_mass(mesh4, steel)[1] > 0)


class TestForces:
    def test_reference_is_stress_free(self, mesh4, steel):
        pb = sv.BeamProblem(mesh4, steel, PEN)
        assert np.abs(pb.internal(mesh4.reference_state())).max() < 1e-6

    @given(st.floats(0, 2 * np.pi), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
    def test_rigid_motion_gives_zero_force(self, angle, shift):
        mesh = asm.BeamMesh.uniform(1.0, 4)
        sec = bc.MaterialSection(200e9, 7800, 0.01)
        pb = sv.BeamProblem(mesh, sec, PEN)
        x = rotate_state(mesh.reference_state(), rotation([1, 2, -0.5], angle), np.array(shift))
        assert np.abs(pb.internal(x)).max() < 1e-3  # EA ~ 6e7 N

    def test_objectivity(self, mesh4, steel, rng):
        pb = sv.BeamProblem(mesh4, steel, PEN)
        x = perturbed(mesh4, rng)
        Q = rotation([0.2, -1, 0.4], 1.1)
        f = pb.internal(x)
        fq = pb.internal(rotate_state(x, Q, np.array([1.0, 2.0, 3.0])))
        np.testing.assert_allclose(fq, rotate_state(f, Q), atol=1e-8 * np.abs(f).max())

    def test_jump_energy(self, mesh4, steel):
        x = mesh4.reference_state()
        assert asm.penalty_energy(mesh4, x, steel, PEN) == 0.0
        x[12 + 1] += 1e-4  # open the first interface sideways
        assert asm.penalty_energy(mesh4, x, steel, PEN) > 0.0


class TestStiffness:
    @pytest.mark.parametrize("seed", range(3))
    def test_bulk(self, mesh4, steel, seed):
        x = perturbed(mesh4, np.random.default_rng(seed))
        K = asm._global(mesh4, asm.internal_stiffness_blocks(mesh4, x, steel)).toarray()
        J = fd_jacobian(lambda y: asm.assemble_internal_bulk(mesh4, y, steel), x)
        assert rel(K, J) < 1e-6

    @pytest.mark.parametrize("seed", range(3))
    def test_interfaces(self, mesh4, steel, seed):
        x = perturbed(mesh4, np.random.default_rng(seed))
        loads = asm.LoadSpec(distributed_moment=lambda s, t: np.array([1e3, 2e3, -5e2]))
        K = asm._global(mesh4, np.zeros((4, 12, 12)),
                        asm.interface_stiffness_blocks(mesh4, x, steel, PEN, loads)).toarray()
        J = fd_jacobian(lambda y: asm.assemble_interface_forces(mesh4, y, steel, PEN, loads=loads), x)
        assert rel(K, J) < 1e-6

    def test_follower_end_moment(self, mesh4, steel, rng):
        x = perturbed(mesh4, rng)
        loads = asm.LoadSpec(end_moments={"end": np.array([0, 0, 1e4])})
        K = asm._global(mesh4, asm.external_stiffness_blocks(mesh4, x, loads), None).toarray()
        J = fd_jacobian(lambda y: asm.assemble_external(mesh4, y, loads), x)
        assert rel(K, J) < 1e-6

    def test_with_initiated_interface(self, mesh4, rng):
        sec = bc.MaterialSection(200e9, 7800, 0.01)
        coh = CohesiveParams.for_radius(400e6, 1e4, 1.0, sec.R)
        pb = sv.BeamProblem(mesh4, sec, PEN, cohesive=coh)
        x = mesh4.reference_state()
        x[12 * 2 + 0] += 0.3 * coh.Delta_c  # open interface 1
        x += 1e-6 * rng.standard_normal(x.size)
        state = InterfaceState.fresh(coh, 3)
        state.alpha_n[1] = 0
        K = pb.tangent(x, state).toarray()
        J = fd_jacobian(lambda y: pb.internal(y, state), x, h=1e-9)
        assert rel(K, J) < 1e-5

    def test_nonsymmetric(self, mesh4, steel, rng):
        K = asm.assemble_stiffness(mesh4, perturbed(mesh4, rng, 0.01), steel, PEN).toarray()
        assert rel(K, K.T) > 1e-4


class TestLinearizedOperator:
    def test_single_element_axial_frequency(self, steel):
        h = 0.5
        mesh = asm.BeamMesh.uniform(h, 1)
        K = asm.assemble_linearized_dg(mesh, mesh.reference_state(), steel, PEN).toarray()
        m = asm.assemble_mass(mesh, steel)[1]
        p, t = [0, 6], [3, 9]  # x components of positions and tangents
        S = K[np.ix_(p, p)] - K[np.ix_(p, t)] @ np.linalg.solve(K[np.ix_(t, t)], K[np.ix_(t, p)])
        omega = np.sqrt(np.abs(scipy.linalg.eigvals(S / m[p][:, None]))).max()
        assert omega == pytest.approx(2 * steel.wave_speed / h, rel=1e-12)

    def test_rigid_modes_of_free_chain(self, steel):
        # straight torsion-free chain: 3 translations + 2 rotations
        pb = sv.BeamProblem(asm.BeamMesh.uniform(1.0, 5), steel, PEN)
        w = np.sort(sv.linearized_frequencies(pb))
        # round-off on lambda^2 puts zero modes near sqrt(eps) * omega_max
        assert np.all(w[:5] < 1e-6 * w[-1])
        assert w[5] > 1e-4 * w[-1]
