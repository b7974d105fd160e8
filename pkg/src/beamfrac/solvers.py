"""Quasi-static Newton continuation, explicit central-difference dynamics and
the eigenvalue estimate of the stable time step."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly as asm
from .beam_core import MaterialSection
from .cohesive import CohesiveParams, InterfaceState, jumps_from_arrays, update_state
from .errors import (
    AssemblyStateError,
    DivergenceError,
    DomainError,
    LinearSolveError,
    StepFailure,
)

log = logging.getLogger(__name__)

DENSE_EIGEN_LIMIT = 3000
DIVERGED = 1e8


def residual_floor(K, x) -> float:
    """Residual norm attainable in double precision at ``x``.

    Internal forces are sums of terms as large as ``|K| |x|``, so their
    rounding error, not the Newton iteration, limits the residual on fine
    meshes (bending scales as EI/h^3, penalties as beta*EA/h).
    """
    rows = np.asarray(abs(K).sum(axis=1)).max()
    return np.finfo(float).eps * rows * max(np.abs(x).max(), 1.0) * np.sqrt(K.shape[0])


@dataclass
class BeamProblem:
    """Everything needed to evaluate residuals and tangents of one beam."""

    mesh: asm.BeamMesh
    section: MaterialSection
    penalties: asm.PenaltyParams
    loads: asm.LoadSpec = field(default_factory=asm.LoadSpec)
    cohesive: CohesiveParams | None = None

    def __post_init__(self):
        self.loads.check_mesh(self.mesh)
        self.fixed = self.loads.fixed_dofs()
        mask = np.ones(self.mesh.n_dofs, dtype=bool)
        mask[self.fixed] = False
        self.free = np.flatnonzero(mask)
        self._lumped = None
        self._icache = None

    @property
    def fracture(self) -> bool:
        return self.cohesive is not None

    def fresh_state(self) -> InterfaceState | None:
        if self.cohesive is None:
            return None
        return InterfaceState.fresh(self.cohesive, self.mesh.n_interfaces)

    @property
    def lumped_mass(self):
        if self._lumped is None:
            self._lumped = asm.assemble_mass(self.mesh, self.section)[1]
        return self._lumped

    def interface_data(self, x, t=0.0):
        """Interface kinematics, reused while ``x`` and ``t`` stay the same."""
        c = self._icache
        if c is not None and c[1] == t and np.array_equal(c[0], x):
            return c[2]
        d = asm.interface_data(self.mesh, x, self.section, self.loads, t)
        self._icache = (np.array(x, copy=True), t, d)
        return d

    def internal(self, x, state=None, t=0.0):
        """f_int + f_jump."""
        data = self.interface_data(x, t) if self.mesh.n_interfaces else None
        return asm.assemble_internal_bulk(self.mesh, x, self.section) + asm.assemble_interface_forces(
            self.mesh, x, self.section, self.penalties, state, self.cohesive, self.loads, t, data
        )

    def residual(self, x, state=None, t=0.0):
        return self.internal(x, state, t) - asm.assemble_external(self.mesh, x, self.loads, t)

    def tangent(self, x, state=None, t=0.0):
        return asm.assemble_stiffness(
            self.mesh, x, self.section, self.penalties, state, self.cohesive, self.loads, t
        )

    def apply_dirichlet(self, x, t):
        x = np.array(x, dtype=float, copy=True)
        if self.fixed.size:
            x[self.fixed] = self.loads.prescribed(t)
        return x

    def interface_resultants(self, x, t=0.0, cached_normal=None):
        """Jumps and mean resultants at every interface."""
        d = self.interface_data(x, t)
        R = self.section.R
        alpha = self.cohesive.alpha if self.cohesive else 1.0
        jumps = jumps_from_arrays(d.r[0], d.kt[0]["g1"], d.r[1], d.kt[1]["g1"], alpha, R, cached_normal)
        return jumps, d.mean_f, d.mean_m

    def update_interfaces(self, x, state, t=0.0, max_new=None):
        if state is None or self.mesh.n_interfaces == 0:
            return state
        jumps, mf, mm = self.interface_resultants(x, t, state.normal)
        return update_state(state, jumps, mf, mm, self.cohesive, self.section.R, max_new)

    def energy(self, x, v=None, state=None):
        e = asm.elastic_energy(self.mesh, x, self.section)
        e += asm.penalty_energy(self.mesh, x, self.section, self.penalties, state)
        if v is not None:
            e += 0.5 * float(np.sum(self.lumped_mass * v * v))
        return e


# --------------------------------------------------------------------------
# quasi-static Newton


@dataclass(frozen=True)
class NewtonSettings:
    load_steps: int = 10
    tol_rel: float = 1e-8
    tol_abs: float | None = None  # defaults to 1e-10 * EA
    max_iters: int = 50
    #: times a load step may be split in two before giving up
    max_cuts: int = 8
    #: a sub-increment taking more iterations than this is split
    cut_iters: int = 12
    #: extrapolate the previous increment as the initial guess
    predictor: bool = True

    def __post_init__(self):
        if self.load_steps < 1 or self.max_iters < 1 or self.cut_iters < 1 or self.max_cuts < 0:
            raise DomainError("load_steps, max_iters and cut_iters must be >= 1")
        if self.tol_rel <= 0 or (self.tol_abs is not None and self.tol_abs <= 0):
            raise DomainError("tolerances must be positive")


@dataclass
class StepResult:
    step: int
    t: float
    x: np.ndarray
    reactions: np.ndarray
    iterations: int
    residual: float
    state: InterfaceState | None = None
    substeps: int = 1


def _solve(K, rhs):
    """Banded LU (the chain couples only neighbouring elements)."""
    K = K.tocoo()
    K.sum_duplicates()
    off = K.row - K.col if K.nnz else np.zeros(1, dtype=int)
    lo, up = max(int(off.max()), 0), max(int(-off.min()), 0)
    ab = np.zeros((lo + up + 1, K.shape[1]))
    ab[up + K.row - K.col, K.col] = K.data
    try:
        with np.errstate(all="raise"):
            dx = scipy.linalg.solve_banded((lo, up), ab, rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        raise LinearSolveError(f"tangent solve failed: {exc}") from exc
    if not np.all(np.isfinite(dx)):
        raise LinearSolveError("tangent matrix is singular")
    return dx


def newton_solve(problem: BeamProblem, x, state, t, settings: NewtonSettings, step=0, max_iters=None):
    """Equilibrium at load parameter ``t`` starting from ``x``.

    Returns ``(x, r, iterations, |r_free|)``.
    """
    max_iters = settings.max_iters if max_iters is None else max_iters
    x = problem.apply_dirichlet(x, t)
    free = problem.free
    tol_abs = settings.tol_abs if settings.tol_abs is not None else 1e-10 * problem.section.EA
    floor, prev, r0 = 0.0, np.inf, None
    for it in range(max_iters + 1):
        r = problem.residual(x, state, t)
        fext = asm.assemble_external(problem.mesh, x, problem.loads, t)
        # support reactions count as external forces for the relative measure
        scale = np.sqrt(np.linalg.norm(fext[free]) ** 2 + np.linalg.norm(r[problem.fixed]) ** 2)
        rn = np.linalg.norm(r[free])
        if rn <= max(tol_abs, settings.tol_rel * scale):
            return x, r, it, rn
        # stagnation at the rounding level counts as converged
        if rn <= floor and prev <= floor:
            return x, r, it, rn
        r0 = rn if r0 is None else r0
        if it == max_iters or not np.isfinite(rn) or rn > DIVERGED * r0:
            break
        K = problem.tangent(x, state, t)[free][:, free]
        floor, prev = residual_floor(K, x), rn
        x[free] -= _solve(K, r[free])
    raise StepFailure(
        f"Newton did not converge in {it} iterations at step {step} (t={t:.6g}, |r|={rn:.3e})",
        step=step,
        residual=rn,
    )


def newton_quasistatic(problem: BeamProblem, settings: NewtonSettings, x0=None, state0=None,
                       callback=None, t_start=0.0, t_end=1.0):
    """Load-stepping continuation from ``t_start`` to ``t_end``.

    Returns one converged :class:`StepResult` per load step. A step whose
    Newton iteration stalls is split into ``2**k`` equal sub-increments
    (``k <= max_cuts``); the split carries over to the next step and is
    relaxed again once convergence is quick. Interface histories advance
    after every converged sub-increment, with at most one new initiation each.
    """
    x = problem.mesh.reference_state() if x0 is None else np.array(x0, dtype=float)
    state = problem.fresh_state() if state0 is None else state0
    out = []
    velocity = None  # dx/dt of the last converged sub-increment
    level = 0
    t_prev = t_start
    for k in range(1, settings.load_steps + 1):
        t = t_start + (t_end - t_start) * k / settings.load_steps
        while True:
            try:
                x1, r, its, rn, st1, v1, worst = _substeps(problem, x, state, t_prev, t, 2**level,
                                                           velocity, settings, k, level)
                break
            except (StepFailure, LinearSolveError):
                if level >= settings.max_cuts:
                    raise
                level += 1
                log.info("step %d: splitting into %d sub-increments", k, 2**level)
        res = StepResult(k, t, x1.copy(), r[problem.fixed].copy(), its, rn, st1, 2**level)
        x, state, velocity, t_prev = x1, st1, v1, t
        if level and worst <= settings.cut_iters // 3:
            level -= 1
        out.append(res)
        log.debug("step %d t=%.4g iters=%d |r|=%.3e", k, t, its, rn)
        if callback is not None:
            callback(res)
    return out


def _substeps(problem, x, state, t0, t1, n, velocity, settings, step, level):
    total = worst = 0
    last = level >= settings.max_cuts
    limit = settings.max_iters if last else min(settings.cut_iters, settings.max_iters)
    for j in range(1, n + 1):
        ta = t0 + (t1 - t0) * (j - 1) / n
        tb = t0 + (t1 - t0) * j / n
        guess = x
        if settings.predictor and velocity is not None:
            guess = x + velocity * (tb - ta)
        x1, r, its, rn = newton_solve(problem, guess, state, tb, settings, step, max_iters=limit)
        velocity = (x1 - x) / (tb - ta)
        x = x1
        state = problem.update_interfaces(x, state, tb, max_new=1)
        total += its
        worst = max(worst, its)
    return x, r, total, rn, state, velocity, worst


# --------------------------------------------------------------------------
# stable time step


@dataclass(frozen=True)
class TimestepEstimate:
    omega_max: float
    dt_c: float


def stable_timestep(K, M_lump, free=None) -> TimestepEstimate:
    """Largest |lambda| of M_lump^-1 K on the free DOFs; dt_c = 2/omega_max.

    ``lambda**2`` are the eigenvalues of ``M^-1 K`` (possibly complex, as K is
    not symmetric), so ``|lambda| = sqrt(|mu|)``.
    """
    K = K.tocsr() if sp.issparse(K) else sp.csr_matrix(K)
    n = K.shape[0]
    free = np.arange(n) if free is None else np.asarray(free)
    Kff = K[free][:, free]
    m = np.asarray(M_lump)[free]
    if np.any(m <= 0):
        raise DomainError("lumped mass must be positive on free DOFs")
    if not np.all(np.isfinite(Kff.data)):
        raise AssemblyStateError("non-finite entries in the linearized operator")
    A = sp.diags(1.0 / m) @ Kff
    if free.size <= DENSE_EIGEN_LIMIT:
        mu = scipy.linalg.eigvals(A.toarray())
    else:
        mu = spla.eigs(A, k=1, which="LM", return_eigenvectors=False, tol=1e-6)
    if not np.all(np.isfinite(mu)):
        raise AssemblyStateError("non-finite eigenvalues of the linearized operator")
    omega = float(np.sqrt(np.max(np.abs(mu))))
    if omega <= 0:
        raise AssemblyStateError("zero maximum frequency")
    return TimestepEstimate(omega, 2.0 / omega)


def problem_timestep(problem: BeamProblem, x=None) -> TimestepEstimate:
    """Stable step of ``problem`` linearized at ``x`` (default: reference)."""
    x = problem.mesh.reference_state() if x is None else x
    K = asm.assemble_linearized_dg(problem.mesh, x, problem.section, problem.penalties)
    return stable_timestep(K, problem.lumped_mass, problem.free)


def linearized_frequencies(problem: BeamProblem, x=None):
    """All |lambda| on the free DOFs (dense; small meshes only)."""
    x = problem.mesh.reference_state() if x is None else x
    K = asm.assemble_linearized_dg(problem.mesh, x, problem.section, problem.penalties).toarray()
    f = problem.free
    mu = scipy.linalg.eigvals(K[np.ix_(f, f)] / problem.lumped_mass[f][:, None])
    return np.sort(np.sqrt(np.abs(mu)))


# --------------------------------------------------------------------------
# explicit dynamics


@dataclass
class DynamicState:
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("time step must be positive")
        if not (len(self.x) == len(self.v) == len(self.a)):
            raise DomainError("state arrays must have equal length")


def accelerations(problem: BeamProblem, x, state, t):
    f = asm.assemble_external(problem.mesh, x, problem.loads, t) - problem.internal(x, state, t)
    a = f / problem.lumped_mass
    a[problem.fixed] = 0.0
    return a


def initial_dynamic_state(problem: BeamProblem, x0, dt, v0=None, t0=0.0, state=None):
    x0 = problem.apply_dirichlet(x0, t0)
    v = np.zeros_like(x0) if v0 is None else np.array(v0, dtype=float)
    if problem.fixed.size:
        v[problem.fixed] = (problem.loads.prescribed(t0 + dt) - problem.loads.prescribed(t0)) / dt
    return DynamicState(x0, v, accelerations(problem, x0, state, t0), t0, dt)


def newmark_explicit_step(ds: DynamicState, problem: BeamProblem, state=None):
    """One central-difference step (Newmark beta=0, gamma=1/2).

    Returns the new dynamic state and the updated interface history; the
    history is advanced at the new configuration before its forces are
    evaluated.
    """
    dt = ds.dt
    t1 = ds.t + dt
    x1 = ds.x + dt * ds.v + 0.5 * dt * dt * ds.a
    if problem.fixed.size:
        x1[problem.fixed] = problem.loads.prescribed(t1)
    # a blow-up is reported below, not through floating-point warnings
    with np.errstate(over="ignore", invalid="ignore"):
        state = problem.update_interfaces(x1, state, t1)
        a1 = accelerations(problem, x1, state, t1)
        v1 = ds.v + 0.5 * dt * (ds.a + a1)
    if problem.fixed.size:
        v1[problem.fixed] = (x1[problem.fixed] - ds.x[problem.fixed]) / dt
    if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(v1))):
        raise DivergenceError(f"non-finite state at t={t1:.6g}; time step {dt:.3e} is probably too large")
    return DynamicState(x1, v1, a1, t1, dt), state


def run_explicit(problem: BeamProblem, ds: DynamicState, n_steps: int, state=None,
                 callback=None, every: int = 1):
    """Advance ``n_steps`` steps; ``callback(step, ds, state)`` every ``every`` steps."""
    if callback is not None:
        callback(0, ds, state)
    for k in range(1, n_steps + 1):
        ds, state = newmark_explicit_step(ds, problem, state)
        if callback is not None and (k % every == 0 or k == n_steps):
            callback(k, ds, state)
    return ds, state
