"""Resultant-based cohesive law for tensile and bending fracture.

All functions broadcast over a leading interface axis, so the same code
serves one interface (scalars / 3-vectors) and a whole mesh (arrays of
shape ``(n,)`` / ``(n, 3)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateNormalError, DomainError

#: ||<g1>|| below this value means anti-parallel tangents; the cached normal is used.
NORMAL_FLOOR = 1e-8


@dataclass(frozen=True)
class CohesiveParams:
    sigma_c: float
    G_c: float
    alpha: float
    area: float
    #: include the bending term in the equivalent force used for initiation
    bending_initiation: bool = True

    def __post_init__(self):
        if min(self.sigma_c, self.G_c, self.alpha, self.area) <= 0:
            raise DomainError("cohesive parameters must be strictly positive")

    @property
    def f_c(self) -> float:
        return self.sigma_c * self.area

    @property
    def Delta_c(self) -> float:
        return 2.0 * self.G_c / self.sigma_c

    @classmethod
    def for_radius(cls, sigma_c, G_c, alpha, R, **kw):
        return cls(sigma_c, G_c, alpha, np.pi * R**2, **kw)


@dataclass
class InterfaceJumps:
    delta_par: np.ndarray
    Theta: np.ndarray
    n_coh: np.ndarray
    Delta: np.ndarray
    #: lateral offset of the two section centres, ||[[r]] - delta_par n||
    offset: np.ndarray = None


@dataclass
class InterfaceState:
    """History of one or many interfaces.

    ``alpha_n``/``gamma_n`` are 1 before initiation / complete decohesion and
    0 after. ``work`` accumulates the cohesive work done since initiation.
    """

    alpha_n: np.ndarray
    gamma_n: np.ndarray
    Delta_max: np.ndarray
    f_max: np.ndarray
    recontact: np.ndarray
    normal: np.ndarray = field(default=None)
    Delta_prev: np.ndarray = field(default=None)
    f_prev: np.ndarray = field(default=None)
    work: np.ndarray = field(default=None)

    @classmethod
    def fresh(cls, params: CohesiveParams, n: int | None = None):
        shape = () if n is None else (n,)
        return cls(
            alpha_n=np.ones(shape, dtype=np.int8),
            gamma_n=np.ones(shape, dtype=np.int8),
            Delta_max=np.zeros(shape),
            f_max=np.full(shape, params.f_c),
            recontact=np.zeros(shape, dtype=bool),
            normal=np.full(shape + (3,), np.nan),
            Delta_prev=np.zeros(shape),
            f_prev=np.zeros(shape),
            work=np.zeros(shape),
        )

    def copy(self):
        return replace(self, **{k: np.copy(v) for k, v in self.__dict__.items()})

    @property
    def initiated(self):
        return self.alpha_n == 0

    @property
    def failed(self):
        return self.gamma_n == 0


def _macaulay(x):
    return np.maximum(x, 0.0)


def _normals(g1_minus, g1_plus, cached=None):
    mean = 0.5 * (np.asarray(g1_minus) + np.asarray(g1_plus))
    norm = np.linalg.norm(mean, axis=-1, keepdims=True)
    bad = norm[..., 0] < NORMAL_FLOOR
    n = mean / np.where(norm < NORMAL_FLOOR, 1.0, norm)
    if np.any(bad):
        if cached is None:
            raise DegenerateNormalError("anti-parallel tangents and no cached normal")
        cached = np.broadcast_to(cached, n.shape)
        if np.any(np.isnan(cached[bad])):
            raise DegenerateNormalError("anti-parallel tangents and no cached normal")
        n = np.where(bad[..., None], cached, n)
    return n


def jumps_from_arrays(r_minus, g1_minus, r_plus, g1_plus, alpha, R, cached_normal=None):
    n = _normals(g1_minus, g1_plus, cached_normal)
    jr = np.asarray(r_plus) - np.asarray(r_minus)
    Theta = np.asarray(g1_plus) - np.asarray(g1_minus)
    dpar = np.einsum("...i,...i->...", jr, n)
    Delta = np.sqrt(_macaulay(dpar) ** 2 + (alpha * R * np.linalg.norm(Theta, axis=-1)) ** 2)
    offset = np.linalg.norm(jr - dpar[..., None] * n, axis=-1)
    return InterfaceJumps(dpar, Theta, n, Delta, offset)


def compute_jumps(minus, plus, params: CohesiveParams, R: float, cached_normal=None) -> InterfaceJumps:
    """Kinematic jumps between the kinematics ``minus`` (s_n^-) and ``plus`` (s_n^+).

    ``minus``/``plus`` only need ``r`` and ``g1`` attributes.
    """
    return jumps_from_arrays(minus.r, minus.g1, plus.r, plus.g1, params.alpha, R, cached_normal)


def effective_force(Delta, state: InterfaceState, params: CohesiveParams):
    """Scalar cohesive force for the linear-decay law with unloading to the origin."""
    Delta = np.asarray(Delta, dtype=float)
    if np.any(Delta < 0):
        raise DomainError("effective separation must be non-negative")
    envelope = _macaulay(1.0 - Delta / params.Delta_c) * params.f_c
    dmax = np.asarray(state.Delta_max, dtype=float)
    safe = np.where(dmax > 0, dmax, 1.0)
    unload = Delta / safe * state.f_max
    return np.where(Delta >= dmax, envelope, unload)


def cohesive_tractions(jumps: InterfaceJumps, state: InterfaceState, params: CohesiveParams, R: float):
    """Cohesive axial force and bending moment; both vanish at zero separation."""
    f = effective_force(jumps.Delta, state, params)
    pos = jumps.Delta > 0
    ratio = np.where(pos, f / np.where(pos, jumps.Delta, 1.0), 0.0)
    f_par = (ratio * _macaulay(jumps.delta_par))[..., None] * jumps.n_coh
    m_perp = (params.alpha**2 * R**2 * ratio)[..., None] * jumps.Theta
    return f_par, m_perp


def equivalent_force(mean_f, mean_m_perp, n_coh, params: CohesiveParams, R: float, bending=None):
    """Mixed-mode equivalent force driving initiation."""
    if bending is None:
        bending = params.bending_initiation
    fn = np.einsum("...i,...i->...", mean_f, n_coh)
    feq2 = _macaulay(fn) ** 2
    if bending:
        m = np.asarray(mean_m_perp)
        m = m - np.einsum("...i,...i->...", m, n_coh)[..., None] * n_coh
        feq2 = feq2 + np.einsum("...i,...i->...", m, m) / (params.alpha * R) ** 2
    return np.sqrt(feq2)


def initiation_check(mean_f, mean_m_perp, n_coh, params: CohesiveParams, R: float, bending=None):
    return equivalent_force(mean_f, mean_m_perp, n_coh, params, R, bending) >= params.f_c


def update_state(state: InterfaceState, jumps: InterfaceJumps, mean_f, mean_m_perp,
                 params: CohesiveParams, R: float, max_new: int | None = None) -> InterfaceState:
    """Advance the interface history by one converged step (returns a new state).

    ``max_new`` caps how many interfaces may initiate in this step, keeping
    the most loaded ones. Quasi-static continuation uses 1: without inertia,
    symmetric interfaces that cross the threshold in the same increment
    leave the equilibrium problem at a bifurcation Newton cannot resolve.
    """
    new = state.copy()
    intact = state.alpha_n == 1
    feq = equivalent_force(mean_f, mean_m_perp, jumps.n_coh, params, R)
    start = intact & (feq >= params.f_c)
    if max_new is not None and np.ndim(start) and np.count_nonzero(start) > max_new:
        keep = np.argsort(np.where(start, -feq, np.inf), kind="stable")[:max_new]
        start = np.zeros_like(start)
        start[keep] = True
    new.alpha_n = np.where(start, 0, state.alpha_n).astype(np.int8)
    broken = new.alpha_n == 0

    f_now = effective_force(jumps.Delta, state, params)
    dmax = np.where(broken, np.maximum(state.Delta_max, jumps.Delta), state.Delta_max)
    new.Delta_max = dmax
    new.f_max = np.where(broken, _macaulay(1.0 - dmax / params.Delta_c) * params.f_c, state.f_max)
    new.gamma_n = np.where(broken & (dmax >= params.Delta_c), 0, state.gamma_n).astype(np.int8)
    # faces can only touch while the circular sections overlap laterally
    facing = True if jumps.offset is None else jumps.offset < 2.0 * R
    new.recontact = broken & (jumps.delta_par < 0) & (dmax > 0) & facing

    # trapezoidal cohesive work since initiation
    dw = 0.5 * (state.f_prev + f_now) * (jumps.Delta - state.Delta_prev)
    new.work = np.where(broken & ~start, state.work + dw, state.work)
    new.Delta_prev = np.where(broken, jumps.Delta, state.Delta_prev)
    new.f_prev = np.where(broken, f_now, state.f_prev)
    new.normal = np.array(jumps.n_coh, dtype=float, copy=True)
    return new
