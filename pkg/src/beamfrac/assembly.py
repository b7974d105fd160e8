"""Global assembly for the discontinuous Galerkin Kirchhoff beam.

Every element owns its two nodes (duplicated at interior interfaces), so the
global DOF vector is simply the concatenation of element slot vectors:
``x[12*e + 3*a + i]`` is component ``i`` of slot ``a`` (``p1, t1, p2, t2``)
of element ``e``. Interface ``n`` joins element ``n`` (minus side, xi=+1) and
element ``n+1`` (plus side, xi=-1).
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import beam_core as bc
from .cohesive import (
    InterfaceState,
    cohesive_tractions,
    jumps_from_arrays,
)
from .errors import DomainError

DOFS_PER_ELEMENT = 12


@dataclass
class BeamMesh:
    """Straight reference beam split into elements along ``direction``."""

    lengths: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=float)
        if self.lengths.ndim != 1 or self.lengths.size < 1 or np.any(self.lengths <= 0):
            raise DomainError("element lengths must be a non-empty positive vector")
        self.origin = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        self.direction = d / np.linalg.norm(d)

    @classmethod
    def uniform(cls, length, n_elements=None, h=None, **kw):
        if n_elements is None:
            if h is None:
                raise DomainError("give n_elements or h")
            n_elements = round(length / h)
            if n_elements < 1 or abs(n_elements * h - length) > 1e-9 * length:
                raise DomainError(f"element size {h} does not divide length {length}")
        return cls(np.full(n_elements, length / n_elements), **kw)

    @property
    def n_elements(self) -> int:
        return self.lengths.size

    @property
    def n_interfaces(self) -> int:
        return self.lengths.size - 1

    @property
    def n_dofs(self) -> int:
        return DOFS_PER_ELEMENT * self.n_elements

    @property
    def length(self) -> float:
        return float(self.lengths.sum())

    @cached_property
    def element_starts(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.lengths)[:-1]])

    @property
    def interface_s(self) -> np.ndarray:
        return self.element_starts[1:]

    @staticmethod
    def dof(element, slot, comp=None):
        base = DOFS_PER_ELEMENT * element + 3 * slot
        return base + np.arange(3) if comp is None else base + comp

    def position_dofs_at(self, s, tol=1e-12):
        """Position DOF triples of every node located at arc length ``s``."""
        out = []
        ends = self.element_starts + self.lengths
        for e in range(self.n_elements):
            if abs(self.element_starts[e] - s) <= tol * self.length:
                out.append(self.dof(e, 0))
            if abs(ends[e] - s) <= tol * self.length:
                out.append(self.dof(e, 2))
        return out

    def tangent_dofs_at(self, s, tol=1e-12):
        out = []
        ends = self.element_starts + self.lengths
        for e in range(self.n_elements):
            if abs(self.element_starts[e] - s) <= tol * self.length:
                out.append(self.dof(e, 1))
            if abs(ends[e] - s) <= tol * self.length:
                out.append(self.dof(e, 3))
        return out

    def reference_state(self) -> np.ndarray:
        X = np.empty((self.n_elements, 4, 3))
        s0 = self.element_starts
        X[:, 0] = self.origin + s0[:, None] * self.direction
        X[:, 1] = self.direction
        X[:, 2] = self.origin + (s0 + self.lengths)[:, None] * self.direction
        X[:, 3] = self.direction
        return X.reshape(-1)

    def reference_position(self, s):
        return self.origin + np.asarray(s)[..., None] * self.direction

    # cached shape data ---------------------------------------------------

    @cached_property
    def gauss_basis(self):
        """(4, E, G, 4) arc-length derivatives of the slot basis at Gauss points."""
        return bc.slot_basis(bc.GAUSS_POINTS, self.lengths)

    @cached_property
    def gauss_weights(self):
        """(E, G) quadrature weights including the Jacobian L/2."""
        return bc.GAUSS_WEIGHTS[None, :] * 0.5 * self.lengths[:, None]

    @cached_property
    def gauss_s(self):
        return self.element_starts[:, None] + 0.5 * self.lengths[:, None] * (1.0 + bc.GAUSS_POINTS)

    @cached_property
    def end_basis(self):
        """(2, 4, E, 4): basis at xi=-1 (index 0) and xi=+1 (index 1) of every element."""
        b = bc.slot_basis([-1.0, 1.0], self.lengths)  # (4, E, 2, 4)
        return np.moveaxis(b, 2, 0)

    @cached_property
    def _element_index(self):
        E = self.n_elements
        base = DOFS_PER_ELEMENT * np.arange(E)[:, None] + np.arange(12)[None, :]
        rows = np.repeat(base[:, :, None], 12, axis=2)
        cols = np.repeat(base[:, None, :], 12, axis=1)
        return rows.reshape(-1), cols.reshape(-1)

    @cached_property
    def _interface_index(self):
        n = self.n_interfaces
        base = DOFS_PER_ELEMENT * np.arange(n)[:, None] + np.arange(24)[None, :]
        rows = np.repeat(base[:, :, None], 24, axis=2)
        cols = np.repeat(base[:, None, :], 24, axis=1)
        return rows.reshape(-1), cols.reshape(-1)

    @cached_property
    def _csr_pattern(self):
        """CSR structure of element + interface blocks and the scatter map into it."""
        r = np.concatenate([self._element_index[0], self._interface_index[0]])
        c = np.concatenate([self._element_index[1], self._interface_index[1]])
        keys, inverse = np.unique(r * self.n_dofs + c, return_inverse=True)
        rows, cols = np.divmod(keys, self.n_dofs)
        indptr = np.searchsorted(rows, np.arange(self.n_dofs + 1))
        return inverse, cols, indptr, keys.size


@dataclass(frozen=True)
class PenaltyParams:
    beta_p: float
    beta_t: float

    def __post_init__(self):
        if not self.beta_p > 1:
            raise DomainError("beta_p must exceed 1")
        if not self.beta_t > 1:
            raise DomainError("beta_t must exceed 1")


def _value(v, t):
    return np.asarray(v(t) if callable(v) else v, dtype=float)


@dataclass
class LoadSpec:
    """External loading as functions of the load parameter ``t``.

    ``distributed_force``/``distributed_moment`` take ``(s, t)`` and return
    arrays broadcastable to ``s.shape + (3,)``. End loads are keyed by
    ``"start"`` (s=0) or ``"end"`` (s=L). ``point_forces`` maps a global DOF
    to a scalar (or callable of t). ``dirichlet`` maps a global DOF to its
    prescribed value as a callable of t.
    """

    distributed_force: Callable | None = None
    distributed_moment: Callable | None = None
    end_forces: dict = field(default_factory=dict)
    end_moments: dict = field(default_factory=dict)
    point_forces: dict = field(default_factory=dict)
    dirichlet: dict = field(default_factory=dict)

    def __post_init__(self):
        loaded = set(self.point_forces)
        clash = loaded & set(self.dirichlet)
        if clash:
            raise DomainError(f"DOFs {sorted(clash)} carry both a Neumann and a Dirichlet condition")

    def fixed_dofs(self) -> np.ndarray:
        return np.array(sorted(self.dirichlet), dtype=int)

    def prescribed(self, t) -> np.ndarray:
        return np.array([_value(self.dirichlet[d], t) for d in sorted(self.dirichlet)], dtype=float)

    def check_mesh(self, mesh: BeamMesh):
        ends = {"start": mesh.dof(0, 0), "end": mesh.dof(mesh.n_elements - 1, 2)}
        tends = {"start": mesh.dof(0, 1), "end": mesh.dof(mesh.n_elements - 1, 3)}
        fixed = set(self.dirichlet)
        for k in self.end_forces:
            if fixed & set(ends[k]):
                raise DomainError(f"end force at '{k}' applied to Dirichlet DOFs")
        for k in self.end_moments:
            if fixed & set(tends[k]):
                raise DomainError(f"end moment at '{k}' applied to Dirichlet DOFs")


def hold_dofs(dofs, values) -> dict:
    """Dirichlet entries holding ``dofs`` at constant ``values``."""
    return {int(d): (lambda t, v=float(v): v) for d, v in zip(np.ravel(dofs), np.ravel(values))}


def clamp(mesh: BeamMesh, s, x=None, tangent=True) -> dict:
    """Hold position and tangent direction of every node at ``s`` at their values in ``x``.

    The tangent slot also carries the stretch, so only the components
    normal to an axis-aligned tangent are held; the support then fixes the
    direction without forbidding axial strain. Off-axis tangents are held
    completely.
    """
    x = mesh.reference_state() if x is None else np.asarray(x)
    pos = mesh.position_dofs_at(s)
    if not pos:
        raise DomainError(f"no node at s={s}")
    dofs = list(np.concatenate(pos))
    if tangent:
        for td in mesh.tangent_dofs_at(s):
            t = x[td]
            k = int(np.argmax(np.abs(t)))
            axial = np.isclose(abs(t[k]), np.linalg.norm(t), rtol=0.0, atol=1e-14 * np.linalg.norm(t))
            dofs += [d for i, d in enumerate(td) if not (axial and i == k)]
    dofs = np.array(dofs, dtype=int)
    return hold_dofs(dofs, x[dofs])


# --------------------------------------------------------------------------
# element helpers


def _slots(mesh, x):
    return np.asarray(x, dtype=float).reshape(mesh.n_elements, 4, 3)


def gauss_kinematics(mesh: BeamMesh, x, with_r3=False):
    X = _slots(mesh, x)
    N = mesh.gauss_basis
    r1 = np.einsum("ega,eai->egi", N[1], X)
    r2 = np.einsum("ega,eai->egi", N[2], X)
    r3 = np.einsum("ega,eai->egi", N[3], X) if with_r3 else None
    kt = bc.kinematic_terms(r1, r2, r3, with_G1=False)
    kt["r1"], kt["r2"] = r1, r2
    return kt


def assemble_mass(mesh: BeamMesh, section: bc.MaterialSection):
    """Consistent mass (sparse) and HRZ-lumped diagonal."""
    N0 = mesh.gauss_basis[0]
    w = mesh.gauss_weights
    m = section.rho * section.A * np.einsum("eg,ega,egb->eab", w, N0, N0)  # (E,4,4)
    Me = np.einsum("eab,ij->eaibj", m, np.eye(3)).reshape(mesh.n_elements, 12, 12)
    rows, cols = mesh._element_index
    M = sp.coo_matrix((Me.reshape(-1), (rows, cols)), shape=(mesh.n_dofs,) * 2).tocsr()

    diag = np.einsum("eaa->ea", m)  # (E,4)
    total = section.rho * section.A * mesh.lengths
    scale = total / (diag[:, 0] + diag[:, 2])
    lumped = np.repeat((diag * scale[:, None])[:, :, None], 3, axis=2).reshape(-1)
    return M, lumped


def assemble_internal_bulk(mesh: BeamMesh, x, section: bc.MaterialSection):
    kt = gauss_kinematics(mesh, x)
    N = mesh.gauss_basis
    w = mesh.gauss_weights
    q1 = section.EA * kt["t1"] + section.EI * kt["t2"]
    q2 = section.EI * kt["t3"]
    f = np.einsum("eg,ega,egi->eai", w, N[1], q1) + np.einsum("eg,ega,egi->eai", w, N[2], q2)
    return f.reshape(-1)


def internal_stiffness_blocks(mesh: BeamMesh, x, section: bc.MaterialSection):
    kt = gauss_kinematics(mesh, x)
    r1, r2 = kt["r1"], kt["r2"]
    EA, EI = section.EA, section.EI
    D1 = bc.d_t1(r1)
    D2a, D2b = bc.d_t2(r1, r2)
    D3a, D3b = bc.d_t3(r1, r2)
    N1, N2 = mesh.gauss_basis[1], mesh.gauss_basis[2]
    w = mesh.gauss_weights
    K = (
        _gauss_contract(w, N1, N1, EA * D1 + EI * D2a)
        + _gauss_contract(w, N1, N2, EI * D2b)
        + _gauss_contract(w, N2, N1, EI * D3a)
        + _gauss_contract(w, N2, N2, EI * D3b)
    )
    return K.transpose(0, 1, 3, 2, 4).reshape(mesh.n_elements, 12, 12)


def _gauss_contract(w, Na, Nb, D):
    """sum_g w Na Nb D as (E, a, b, i, j); a batched matmul over the Gauss axis."""
    E, G = w.shape
    P = (w[..., None, None] * Na[..., :, None] * Nb[..., None, :]).reshape(E, G, 16)
    return (P.transpose(0, 2, 1) @ D.reshape(E, G, 9)).reshape(E, 4, 4, 3, 3)


# --------------------------------------------------------------------------
# interfaces


@dataclass
class InterfaceData:
    """Kinematics on both sides of every interface (index 0 minus, 1 plus)."""

    r: np.ndarray  # (2, n, 3)
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    kt: list
    N: np.ndarray  # (2, 4, n, 4) basis derivatives 0..3 per side
    f: np.ndarray  # (2, n, 3) resultant force per side
    m: np.ndarray  # (2, n, 3) bending moment per side
    kA: np.ndarray
    kI: np.ndarray

    @property
    def mean_f(self):
        return 0.5 * (self.f[0] + self.f[1])

    @property
    def mean_m(self):
        return 0.5 * (self.m[0] + self.m[1])

    @property
    def jump_r(self):
        return self.r[1] - self.r[0]

    @property
    def jump_g1(self):
        return self.kt[1]["g1"] - self.kt[0]["g1"]


def _m_tilde_at_interfaces(mesh, loads, t):
    if loads is None or loads.distributed_moment is None:
        return None
    s = mesh.interface_s
    return np.broadcast_to(_value_s(loads.distributed_moment, s, t), s.shape + (3,))


def _value_s(fn, s, t):
    return np.asarray(fn(s, t) if callable(fn) else fn, dtype=float)


def _side_data(Xm, Xp, Nm, Np, hm, hp, section, mt=None) -> InterfaceData:
    derivs = []
    for Nk, Xs in ((Nm, Xm), (Np, Xp)):
        derivs.append([np.einsum("na,nai->ni", Nk[k], Xs) for k in range(4)])
    kts = [bc.kinematic_terms(d[1], d[2], d[3]) for d in derivs]
    f, m = [], []
    for kt in kts:
        fs = section.EA * kt["t1"] + section.EI * kt["t6"]
        if mt is not None:
            fs = fs + np.cross(kt["t4"], mt)
        f.append(fs)
        m.append(section.EI * kt["kappa"])
    kA = 0.5 * section.EA * (1.0 / hm + 1.0 / hp)
    kI = 0.5 * section.EI * (1.0 / hm + 1.0 / hp)

    def stack(k):
        return np.stack([derivs[0][k], derivs[1][k]])

    return InterfaceData(
        r=stack(0), r1=stack(1), r2=stack(2), r3=stack(3), kt=kts,
        N=np.stack([Nm, Np]), f=np.stack(f), m=np.stack(m), kA=kA, kI=kI,
    )


def interface_data(mesh: BeamMesh, x, section, loads=None, t=0.0, select=None) -> InterfaceData:
    X = _slots(mesh, x)
    eb = mesh.end_basis  # (2, 4, E, 4)
    idx = np.arange(mesh.n_interfaces) if select is None else np.asarray(select)
    mt = _m_tilde_at_interfaces(mesh, loads, t)
    return _side_data(
        X[idx], X[idx + 1], eb[1][:, idx], eb[0][:, idx + 1],
        mesh.lengths[idx], mesh.lengths[idx + 1], section,
        None if mt is None else mt[idx],
    )


def _interface_generalized(d: InterfaceData, penalties, state=None, cohesive=None, R=None):
    """Interface forces per side: (FN (n,3), FD (2,n,3)).

    FN multiplies N_a and FD multiplies N'_a; the side sign is applied later.
    """
    jr, jg = d.jump_r, d.jump_g1
    mean_f, mean_m = d.mean_f, d.mean_m
    t4 = np.stack([d.kt[0]["t4"], d.kt[1]["t4"]])
    G1 = np.stack([d.kt[0]["G1"], d.kt[1]["G1"]])
    mxt = np.cross(mean_m[None], t4)
    pen_t = penalties.beta_t * d.kI[None, :, None] * np.einsum("snij,nj->sni", G1, jg)
    FN_dg = mean_f + penalties.beta_p * d.kA[:, None] * jr
    FD_dg = mxt + pen_t
    if state is None:
        return FN_dg, FD_dg
    alpha, gamma, recon = state.alpha_n, state.gamma_n, state.recontact
    if np.all(alpha == 1):
        return FN_dg, FD_dg
    jumps = jumps_from_arrays(d.r[0], d.kt[0]["g1"], d.r[1], d.kt[1]["g1"], cohesive.alpha, R, state.normal)
    n = jumps.n_coh
    proj = lambda v: np.einsum("ni,ni->n", v, n)[:, None] * n
    f_par, c_par = proj(mean_f), proj(jr)
    f_perp, c_perp = mean_f - f_par, jr - c_par
    bp = penalties.beta_p * d.kA[:, None]
    f_coh, m_coh = cohesive_tractions(jumps, state, cohesive, R)
    on = (alpha == 1)[:, None].astype(float)
    off = 1.0 - on
    gm = (gamma == 1)[:, None].astype(float)
    axial = f_par + bp * c_par
    # closed crack faces transmit compression only
    pushing = np.minimum(np.einsum("ni,ni->n", axial, n), 0.0)[:, None] * n
    contact = (recon & (alpha == 0))[:, None]
    FN = on * axial + np.where(contact, pushing, 0.0) + gm * (f_perp + bp * c_perp) + off * f_coh
    FD = on[None] * FD_dg + off[None] * np.einsum("snij,nj->sni", G1, m_coh)
    return FN, FD


def _scatter_interface(mesh, FN, FD, d: InterfaceData):
    """Local interface forces (n, 2, 4, 3) with the +/- side sign applied."""
    N0, N1 = d.N[:, 0], d.N[:, 1]  # (2, n, 4)
    sign = np.array([-1.0, 1.0])[:, None, None, None]
    loc = sign * (np.einsum("sna,ni->snai", N0, FN) + np.einsum("sna,sni->snai", N1, FD))
    return np.moveaxis(loc, 0, 1)


def assemble_interface_forces(mesh, x, section, penalties, state=None, cohesive=None, loads=None, t=0.0,
                              data=None):
    """Interface force vector; ``data`` may carry precomputed interface kinematics at ``x``."""
    if mesh.n_interfaces == 0:
        return np.zeros(mesh.n_dofs)
    d = interface_data(mesh, x, section, loads, t) if data is None else data
    FN, FD = _interface_generalized(d, penalties, state, cohesive, section.R)
    loc = _scatter_interface(mesh, FN, FD, d)
    f = np.zeros((mesh.n_elements, 4, 3))
    f[:-1] += loc[:, 0]
    f[1:] += loc[:, 1]
    return f.reshape(-1)


def interface_stiffness_blocks(mesh, x, section, penalties, loads=None, t=0.0, select=None):
    """Analytic 24x24 Jacobians of the intact (DG) interface forces."""
    d = interface_data(mesh, x, section, loads, t, select=select)
    n = d.kA.size
    EA, EI = section.EA, section.EI
    mt = _m_tilde_at_interfaces(mesh, loads, t)
    if mt is not None and select is not None:
        mt = mt[np.asarray(select)]
    jg = d.jump_g1
    mean_m = d.mean_m
    I3 = np.eye(3)
    sgn = np.array([-1.0, 1.0])

    Fd, Md, D4s, G1s, dG1j = [], [], [], [], []
    for s in range(2):
        r1, r2, r3 = d.r1[s], d.r2[s], d.r3[s]
        kt = d.kt[s]
        N = d.N[s]  # (4, n, 4)
        D1 = bc.d_t1(r1)
        D6a, D6b, D6c = bc.d_t6(r1, r2, r3)
        D4 = bc.d_t4(r1)
        fd = EA * np.einsum("na,nij->naij", N[1], D1) + EI * (
            np.einsum("na,nij->naij", N[1], D6a)
            + np.einsum("na,nij->naij", N[2], D6b)
            + np.einsum("na,nij->naij", N[3], D6c)
        )
        if mt is not None:
            fd = fd - np.einsum("na,nij->naij", N[1], bc.skew(mt) @ D4)
        md = EI * (
            np.einsum("na,nij->naij", N[1], -bc.skew(r2) @ D4)
            + np.einsum("na,nij->naij", N[2], bc.skew(kt["t4"]))
        )
        Fd.append(fd)
        Md.append(md)
        D4s.append(D4)
        G1s.append(kt["G1"])
        dG1j.append(bc.d_G1_times(r1, jg))

    K = np.zeros((n, 2, 4, 3, 2, 4, 3))
    bp = penalties.beta_p * d.kA
    bt = penalties.beta_t * d.kI
    Smean = bc.skew(mean_m)
    for tau in range(2):
        Nt = d.N[tau]
        dFN = 0.5 * Fd[tau] + sgn[tau] * bp[:, None, None, None] * np.einsum("nb,ij->nbij", Nt[0], I3)
        for sig in range(2):
            Ns = d.N[sig]
            St4 = bc.skew(d.kt[sig]["t4"])
            dFD = -0.5 * np.einsum("nij,nbjk->nbik", St4, Md[tau])
            dFD = dFD + sgn[tau] * bt[:, None, None, None] * np.einsum(
                "nij,njk,nb->nbik", G1s[sig], G1s[tau], Nt[1]
            )
            if sig == tau:
                dFD = dFD + np.einsum("nij,nb->nbij", Smean @ D4s[sig], Ns[1])
                dFD = dFD + bt[:, None, None, None] * np.einsum("nij,nb->nbij", dG1j[sig], Ns[1])
            blk = np.einsum("na,nbij->naibj", Ns[0], dFN) + np.einsum("na,nbij->naibj", Ns[1], dFD)
            K[:, sig, :, :, tau, :, :] = sgn[sig] * blk
    return K.reshape(n, 24, 24)


def cohesive_stiffness_blocks(mesh, x, section, penalties, state, cohesive, idx,
                              loads=None, t=0.0, rel_step=1e-7):
    """Central finite-difference Jacobian of the interface forces at ``idx``.

    The interface history is frozen, as it is within a Newton step.
    """
    X = _slots(mesh, x)
    idx = np.asarray(idx)
    n = idx.size
    base = np.stack([X[idx], X[idx + 1]], axis=1).reshape(n, 24)
    h = rel_step * np.maximum(np.abs(base).max(axis=1), 1e-12)  # (n,)
    # batch: 24 plus and 24 minus perturbations per interface
    pert = np.repeat(base[:, None, :], 48, axis=1)
    j = np.arange(24)
    pert[:, j, j] += h[:, None]
    pert[:, 24 + j, j] -= h[:, None]
    pert = pert.reshape(n * 48, 2, 4, 3)
    rep = np.repeat(idx, 48)
    eb = mesh.end_basis
    mt = _m_tilde_at_interfaces(mesh, loads, t)
    d = _side_data(
        pert[:, 0], pert[:, 1], eb[1][:, rep], eb[0][:, rep + 1],
        mesh.lengths[rep], mesh.lengths[rep + 1], section,
        None if mt is None else mt[rep],
    )
    sub = InterfaceState(
        state.alpha_n[rep], state.gamma_n[rep], state.Delta_max[rep],
        state.f_max[rep], state.recontact[rep], normal=state.normal[rep],
    )
    FN, FD = _interface_generalized(d, penalties, sub, cohesive, section.R)
    loc = _scatter_interface(mesh, FN, FD, d).reshape(n, 48, 24)
    return np.transpose(loc[:, :24] - loc[:, 24:], (0, 2, 1)) / (2 * h[:, None, None])


# --------------------------------------------------------------------------
# external loads


def _end_basis(mesh, where):
    eb = mesh.end_basis
    if where == "start":
        return 0, eb[0][:, 0]  # (4 derivs, 4 slots)
    if where == "end":
        return mesh.n_elements - 1, eb[1][:, -1]
    raise DomainError(f"unknown boundary '{where}'")


def assemble_external(mesh, x, loads: LoadSpec | None, t=0.0):
    f = np.zeros((mesh.n_elements, 4, 3))
    if loads is None:
        return f.reshape(-1)
    X = _slots(mesh, x)
    N = mesh.gauss_basis
    w = mesh.gauss_weights
    if loads.distributed_force is not None:
        ft = np.broadcast_to(_value_s(loads.distributed_force, mesh.gauss_s, t), mesh.gauss_s.shape + (3,))
        f += np.einsum("eg,ega,egi->eai", w, N[0], ft)
    if loads.distributed_moment is not None:
        mt = np.broadcast_to(_value_s(loads.distributed_moment, mesh.gauss_s, t), mesh.gauss_s.shape + (3,))
        r1 = np.einsum("ega,eai->egi", N[1], X)
        t4 = r1 / np.einsum("egi,egi->eg", r1, r1)[..., None]
        f += np.einsum("eg,ega,egi->eai", w, N[1], np.cross(mt, t4))
    for where, v in loads.end_forces.items():
        e, Nb = _end_basis(mesh, where)
        f[e] += np.outer(Nb[0], _value(v, t))
    for where, v in loads.end_moments.items():
        e, Nb = _end_basis(mesh, where)
        r1 = Nb[1] @ X[e]
        t4 = r1 / (r1 @ r1)
        f[e] += np.outer(Nb[1], np.cross(_value(v, t), t4))
    out = f.reshape(-1)
    for dof, v in loads.point_forces.items():
        out[dof] += float(_value(v, t))
    return out


def external_stiffness_blocks(mesh, x, loads: LoadSpec | None, t=0.0):
    """Element blocks of d f_ext / dx (only moment loads are configuration dependent)."""
    K = np.zeros((mesh.n_elements, 4, 3, 4, 3))
    if loads is None:
        return K.reshape(mesh.n_elements, 12, 12)
    X = _slots(mesh, x)
    if loads.distributed_moment is not None:
        N = mesh.gauss_basis
        w = mesh.gauss_weights
        mt = np.broadcast_to(_value_s(loads.distributed_moment, mesh.gauss_s, t), mesh.gauss_s.shape + (3,))
        r1 = np.einsum("ega,eai->egi", N[1], X)
        SD = bc.skew(mt) @ bc.d_t4(r1)
        K += np.einsum("eg,ega,egb,egij->eaibj", w, N[1], N[1], SD)
    for where, v in loads.end_moments.items():
        e, Nb = _end_basis(mesh, where)
        r1 = Nb[1] @ X[e]
        SD = bc.skew(_value(v, t)) @ bc.d_t4(r1)
        K[e] += np.einsum("a,b,ij->aibj", Nb[1], Nb[1], SD)
    return K.reshape(mesh.n_elements, 12, 12)


# --------------------------------------------------------------------------
# global matrices


def _global(mesh, Ke=None, Kif=None):
    inverse, cols, indptr, nnz = mesh._csr_pattern
    ne = mesh.n_elements * 144
    Ke = np.zeros(ne) if Ke is None else np.reshape(Ke, -1)
    Kif = np.zeros(inverse.size - ne) if Kif is None or not mesh.n_interfaces else np.reshape(Kif, -1)
    data = np.bincount(inverse, weights=np.concatenate([Ke, Kif]), minlength=nnz)
    return sp.csr_matrix((data, cols, indptr), shape=(mesh.n_dofs,) * 2)


def interface_jacobian(mesh, x, section, penalties, state=None, cohesive=None, loads=None, t=0.0):
    """24x24 blocks for every interface: analytic where intact, FD where initiated."""
    n = mesh.n_interfaces
    Kif = interface_stiffness_blocks(mesh, x, section, penalties, loads, t) if n else np.zeros((0, 24, 24))
    if state is not None and n:
        broken = np.flatnonzero(state.alpha_n == 0)
        if broken.size:
            Kif[broken] = cohesive_stiffness_blocks(
                mesh, x, section, penalties, state, cohesive, broken, loads, t
            )
    return Kif


def assemble_stiffness(mesh, x, section, penalties, state=None, cohesive=None, loads=None, t=0.0):
    """Newton matrix K_int + K_jump - K_ext (sparse CSR)."""
    Ke = internal_stiffness_blocks(mesh, x, section) - external_stiffness_blocks(mesh, x, loads, t)
    Kif = interface_jacobian(mesh, x, section, penalties, state, cohesive, loads, t)
    return _global(mesh, Ke, Kif)


def assemble_linearized_dg(mesh, x, section, penalties):
    """K_int + K_jump,DG at ``x`` (no loads, all interfaces intact)."""
    Ke = internal_stiffness_blocks(mesh, x, section)
    Kif = interface_stiffness_blocks(mesh, x, section, penalties) if mesh.n_interfaces else None
    return _global(mesh, Ke, Kif)


@dataclass
class AssembledSystem:
    residual: np.ndarray
    K: sp.csr_matrix
    M: sp.csr_matrix
    M_lump: np.ndarray


def assemble_system(mesh, x, section, penalties, state=None, cohesive=None, loads=None, t=0.0):
    r = (
        assemble_internal_bulk(mesh, x, section)
        + assemble_interface_forces(mesh, x, section, penalties, state, cohesive, loads, t)
        - assemble_external(mesh, x, loads, t)
    )
    K = assemble_stiffness(mesh, x, section, penalties, state, cohesive, loads, t)
    M, Ml = assemble_mass(mesh, section)
    return AssembledSystem(r, K, M, Ml)


# --------------------------------------------------------------------------
# energies and gauges


def elastic_energy(mesh, x, section):
    kt = gauss_kinematics(mesh, x)
    dens = 0.5 * section.EA * kt["eps"] ** 2 + 0.5 * section.EI * np.einsum("egi,egi->eg", kt["kappa"], kt["kappa"])
    return float(np.sum(mesh.gauss_weights * dens))


def penalty_energy(mesh, x, section, penalties, state=None):
    if mesh.n_interfaces == 0:
        return 0.0
    d = interface_data(mesh, x, section)
    jr, jg = d.jump_r, d.jump_g1
    e = 0.5 * penalties.beta_p * d.kA * np.einsum("ni,ni->n", jr, jr)
    e += 0.5 * penalties.beta_t * d.kI * np.einsum("ni,ni->n", jg, jg)
    if state is not None:
        e = np.where(state.alpha_n == 1, e, 0.0)
    return float(e.sum())


def sample_centerline(mesh, x, xi):
    """Positions at parametric points ``xi`` of every element: (E, len(xi), 3)."""
    X = _slots(mesh, x)
    N = bc.slot_basis(xi, mesh.lengths)[0]
    return np.einsum("ega,eai->egi", N, X)


def point_fields(mesh, x, section, xi):
    """Per-element fields at parametric points (for snapshots and gauges)."""
    X = _slots(mesh, x)
    N = bc.slot_basis(xi, mesh.lengths)
    r = np.einsum("ega,eai->egi", N[0], X)
    r1 = np.einsum("ega,eai->egi", N[1], X)
    r2 = np.einsum("ega,eai->egi", N[2], X)
    kt = bc.kinematic_terms(r1, r2, with_G1=False)
    s = mesh.element_starts[:, None] + 0.5 * mesh.lengths[:, None] * (1.0 + np.asarray(xi))[None, :]
    fpar = section.EA * kt["eps"][..., None] * kt["g1"]
    return {
        "s": s,
        "r": r,
        "tangent": r1,
        "eps": kt["eps"],
        "kappa": kt["kappa"],
        "kappa_norm": np.linalg.norm(kt["kappa"], axis=-1),
        "axial_force": np.einsum("egi,egi->eg", fpar, kt["g1"]),
        "moment": section.EI * kt["kappa"],
        "moment_norm": section.EI * np.linalg.norm(kt["kappa"], axis=-1),
    }
