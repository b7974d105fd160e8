"""The five benchmark problems, their closed-form oracles and the mesh
convergence driver.

Every scenario is described by a flat :class:`ScenarioConfig` (SI units) and
built into a :class:`Scenario` whose ``run`` method drives the appropriate
solver and returns a :class:`RunResult` with a history table, snapshots and
a summary of headline quantities.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, fields

import numpy as np

from . import assembly as asm
from . import beam_core as bc
from . import solvers as sv
from .cohesive import CohesiveParams
from .errors import ConfigError, DomainError, SolverError, UnsupportedScenarioError

log = logging.getLogger(__name__)

SCENARIOS = ("cantilever_moment", "buckling", "spall", "transverse_fracture", "spaghetti")

HISTORY_COLUMNS = (
    "step", "stage", "time", "load", "gauge_force", "gauge_moment", "gauge_displacement",
    "kinetic_energy", "strain_energy", "penalty_energy", "dissipated_energy",
    "n_initiated", "n_failed",
)

SNAPSHOT_COLUMNS = (
    "element", "node", "s", "x", "y", "z", "tx", "ty", "tz",
    "eps", "kappa_norm", "axial_force", "moment_norm",
)


# --------------------------------------------------------------------------
# configuration


@dataclass
class ScenarioConfig:
    """Flat scenario description. Lengths in m, stresses in Pa, times in s."""

    scenario: str
    length: float | None = None
    radius: float | None = None
    youngs_modulus: float | None = None
    density: float | None = None
    sigma_c: float | None = None
    fracture_energy: float | None = None
    mode_mixity: float | None = None
    fracture: bool = True
    bending_initiation: bool = True
    beta_p: float = 10.0
    beta_t: float = 10.0
    h: float | None = None
    solver: str | None = None
    load_steps: int | None = None
    tol_rel: float = 1e-8
    max_iters: int = 50
    dt: float | None = None
    t_end: float | None = None
    dt_safety: float = 0.9
    end_moment: float | None = None
    delta: float | None = None
    perturbation_force: float | None = None
    sigma_f: float | None = None
    load_rate: float | None = None
    kappa0: float | None = None
    preload_steps: int = 10
    gauge_position: float = 0.25
    snapshot_stride: int | None = None
    history_stride: int | None = None
    vtk: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario '{self.scenario}' (expected one of {', '.join(SCENARIOS)})")
        if self.solver is None:
            self.solver = "explicit" if self.scenario in ("spall", "spaghetti") else "newton"
        if self.solver not in ("newton", "explicit"):
            raise ConfigError(f"solver must be 'newton' or 'explicit', got '{self.solver}'")
        if self.solver not in SOLVERS[self.scenario]:
            raise ConfigError(f"scenario '{self.scenario}' does not support solver '{self.solver}'")
        for name in REQUIRED[self.scenario]:
            if getattr(self, name) is None:
                raise ConfigError(f"scenario '{self.scenario}' requires '{name}'")
        if not self.beta_p > 1:
            raise ConfigError("beta_p must exceed 1")
        if not self.beta_t > 1:
            raise ConfigError("beta_t must exceed 1")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in POSITIVE and v is not None and not v > 0:
                raise ConfigError(f"{f.name} must be positive, got {v}")
        if self.snapshot_stride is not None and self.snapshot_stride < 0:
            raise ConfigError("snapshot_stride must be >= 0 (0 disables snapshots)")
        if not 0.0 <= self.gauge_position <= 1.0:
            raise ConfigError("gauge_position is a fraction of the length in [0, 1]")

    # derived ------------------------------------------------------------

    @property
    def section(self) -> bc.MaterialSection:
        return bc.MaterialSection(self.youngs_modulus, self.density or 1.0, self.radius)

    @property
    def cohesive(self) -> CohesiveParams | None:
        if not self.fracture or self.sigma_c is None:
            return None
        return CohesiveParams.for_radius(
            self.sigma_c, self.fracture_energy, self.mode_mixity, self.radius,
            bending_initiation=self.bending_initiation,
        )

    @property
    def penalties(self) -> asm.PenaltyParams:
        return asm.PenaltyParams(self.beta_p, self.beta_t)

    @property
    def wave_speed(self) -> float:
        return math.sqrt(self.youngs_modulus / self.density)


_BASE = ("length", "radius", "youngs_modulus", "h")
_FRACTURE = ("density", "sigma_c", "fracture_energy", "mode_mixity", "t_end")
REQUIRED = {
    "cantilever_moment": _BASE + ("end_moment",),
    "buckling": _BASE + ("delta", "perturbation_force"),
    "spall": _BASE + _FRACTURE + ("sigma_f",),
    "transverse_fracture": _BASE + _FRACTURE + ("load_rate",),
    "spaghetti": _BASE + _FRACTURE + ("kappa0",),
}
POSITIVE = {
    "length", "radius", "youngs_modulus", "density", "sigma_c", "fracture_energy", "mode_mixity",
    "h", "load_steps", "tol_rel", "max_iters", "dt", "t_end", "dt_safety", "delta", "sigma_f",
    "load_rate", "kappa0", "preload_steps", "history_stride",
}
DEFAULT_LOAD_STEPS = {"cantilever_moment": 50, "buckling": 1000, "transverse_fracture": 200}
SOLVERS = {
    "cantilever_moment": ("newton",),
    "buckling": ("newton",),
    "spall": ("explicit",),
    "transverse_fracture": ("newton", "explicit"),
    "spaghetti": ("explicit",),
}


# --------------------------------------------------------------------------
# oracles


@dataclass(frozen=True)
class OracleResult:
    name: str
    values: dict = field(default_factory=dict)


def oracle_buckling_load(E, R, L) -> float:
    """Euler load of a pinned-pinned circular column."""
    if min(E, R, L) <= 0:
        raise DomainError("E, R and L must be positive")
    return math.pi**3 / 4.0 * E * R**4 / L**2


def oracle_double_circle(s, L):
    """Centerline of a clamped beam bent into a circle of radius L/(4 pi), wound twice.

    The clamp is at the origin with tangent +x; bending happens in the x-y plane.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < -1e-12 * L) or np.any(s > L * (1 + 1e-12)):
        raise DomainError("arc length outside [0, L]")
    a = L / (4.0 * math.pi)
    phi = s / a
    return np.stack([a * np.sin(phi), a * (1.0 - np.cos(phi)), np.zeros_like(phi)], axis=-1)


def relative_l2_error(r_h, r_ref, weights, u_max, L) -> float:
    """(1/u_max) sqrt((1/L) int ||r_h - r_ref||^2 ds) for quadrature ``weights``."""
    if not u_max > 0:
        raise DomainError("u_max must be positive")
    d2 = np.sum((np.asarray(r_h) - np.asarray(r_ref)) ** 2, axis=-1)
    return float(np.sqrt(np.sum(np.asarray(weights) * d2) / L) / u_max)


def spall_arrivals(gauge_s, half_length, c, fractured, n_waves=8):
    """Arrival times and signs of the step waves seen at ``gauge_s`` on the half bar.

    The loaded end (s=0) reflects stress with unchanged sign; the far end
    (s=half_length) does the same when fixed and flips it when free.
    """
    far = -1.0 if fractured else 1.0
    out = []
    for n in range(n_waves):
        out.append(((2 * n * half_length + gauge_s) / c, far**n))
        out.append(((2 * (n + 1) * half_length - gauge_s) / c, far ** (n + 1)))
    return sorted(out)


def oracle_spall_stress(t, gauge_s, L, E, rho, sigma_f, fractured: bool):
    """Axial stress of the 1D wave solution on the half bar [0, L/2].

    Both bar ends move outwards at sigma_f/(2 rho c), sending tensile steps of
    sigma_f/2 inwards; the mid-plane acts as a fixed end (intact bar) or as a
    free surface (spalled bar).
    """
    if not 0.0 <= gauge_s <= L / 2:
        raise DomainError("gauge must lie on the half bar [0, L/2]")
    t = np.asarray(t, dtype=float)
    c = math.sqrt(E / rho)
    sigma = np.zeros_like(t)
    for ta, sign in spall_arrivals(gauge_s, L / 2, c, fractured):
        sigma = sigma + sign * 0.5 * sigma_f * (t >= ta)
    return sigma


def critical_force_knee(delta, force, pre=0.2, post=0.2):
    """Critical force at the intersection of the pre-buckling line and the
    post-buckling plateau fitted to a force/displacement curve."""
    delta, force = np.asarray(delta, float), np.asarray(force, float)
    n = delta.size
    if n < 10:
        raise DomainError("need at least 10 points")
    i1, i2 = max(int(pre * n), 2), min(int((1 - post) * n), n - 2)
    k = np.dot(delta[:i1], force[:i1]) / np.dot(delta[:i1], delta[:i1])
    a, b = np.polyfit(delta[i2:], force[i2:], 1)
    if abs(k - a) < 1e-12 * abs(k):
        raise DomainError("curve has no knee")
    d_star = b / (k - a)
    return float(k * d_star)


def critical_force_extrapolation(delta, force, deflection, factor=10.0, n_fit=5):
    """Force when the deflection first exceeds ``factor`` times its initial
    linear extrapolation (``None`` if it never does)."""
    delta, deflection = np.asarray(delta, float), np.abs(np.asarray(deflection, float))
    slope = np.dot(delta[:n_fit], deflection[:n_fit]) / np.dot(delta[:n_fit], delta[:n_fit])
    hit = np.flatnonzero(deflection > factor * slope * delta)
    return float(np.asarray(force)[hit[0]]) if hit.size else None


# --------------------------------------------------------------------------
# recording


@dataclass
class Snapshot:
    step: int
    time: float
    table: np.ndarray  # rows follow SNAPSHOT_COLUMNS


def snapshot_table(mesh, x, section) -> np.ndarray:
    """Nodal fields at both ends of every element (nodes are duplicated)."""
    pf = asm.point_fields(mesh, x, section, np.array([-1.0, 1.0]))
    E = mesh.n_elements
    elem = np.repeat(np.arange(E), 2)
    node = np.tile([0, 1], E)
    cols = [
        elem, node, pf["s"].ravel(),
        *pf["r"].reshape(-1, 3).T, *pf["tangent"].reshape(-1, 3).T,
        pf["eps"].ravel(), pf["kappa_norm"].ravel(), pf["axial_force"].ravel(), pf["moment_norm"].ravel(),
    ]
    return np.column_stack(cols)


class Recorder:
    """Collects history rows and snapshots; ``sink`` receives snapshots instead
    of keeping them in memory."""

    def __init__(self, snapshot_stride=1, history_stride=1, sink: Callable | None = None):
        self.snapshot_stride = snapshot_stride
        self.history_stride = history_stride
        self.sink = sink
        self.rows: list[tuple] = []
        self.snapshots: list[Snapshot] = []

    def history(self) -> dict:
        data = np.array(self.rows, dtype=float).reshape(-1, len(HISTORY_COLUMNS))
        return {c: data[:, i] for i, c in enumerate(HISTORY_COLUMNS)}

    def add_row(self, **values):
        self.rows.append(tuple(float(values.get(c, 0.0)) for c in HISTORY_COLUMNS))

    def add_snapshot(self, snap: Snapshot):
        if self.sink is not None:
            self.sink(snap)
        else:
            self.snapshots.append(snap)


@dataclass
class RunResult:
    scenario: str
    history: dict
    snapshots: list
    summary: dict
    x: np.ndarray
    state: object = None


# --------------------------------------------------------------------------
# scenario base


class Scenario:
    """Mesh, loads and solver program of one benchmark."""

    quasi_static = False

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.section = config.section
        try:
            self.mesh = asm.BeamMesh.uniform(config.length, h=config.h)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        self.problem = self.build_problem()

    def build_problem(self) -> sv.BeamProblem:
        raise NotImplementedError

    def oracle(self) -> OracleResult | None:
        return None

    def run(self, recorder: Recorder | None = None) -> RunResult:
        raise NotImplementedError

    # shared helpers ------------------------------------------------------

    def default_recorder(self):
        c = self.config
        snap, hist = (1, 1) if self.quasi_static else (100, 10)
        return Recorder(snap if c.snapshot_stride is None else c.snapshot_stride, c.history_stride or hist)

    def energies(self, problem, x, v=None, state=None):
        out = {
            "strain_energy": asm.elastic_energy(self.mesh, x, self.section),
            "penalty_energy": asm.penalty_energy(self.mesh, x, self.section, problem.penalties, state),
            "kinetic_energy": 0.0 if v is None else 0.5 * float(np.sum(problem.lumped_mass * v * v)),
        }
        if state is not None:
            out["dissipated_energy"] = float(np.sum(state.work))
            out["n_initiated"] = int(np.sum(state.initiated))
            out["n_failed"] = int(np.sum(state.failed))
        return out

    def snapshot(self, step, t, x):
        return Snapshot(step, t, snapshot_table(self.mesh, x, self.section))

    def node_dofs(self, s, slot="position"):
        dofs = self.mesh.position_dofs_at(s) if slot == "position" else self.mesh.tangent_dofs_at(s)
        if not dofs:
            raise ConfigError(f"no node at s={s:g}; choose h so that it falls on an element boundary")
        return dofs

    def timestep(self, problem, x0) -> float:
        c = self.config
        est = sv.problem_timestep(problem, x0)
        self.dt_critical = est.dt_c
        if c.dt is None:
            return c.dt_safety * est.dt_c
        if c.dt > est.dt_c:
            raise SolverError(f"time step {c.dt:.3e} s exceeds the stable limit {est.dt_c:.3e} s")
        return c.dt

    def run_dynamic(self, problem, ds, state, n_steps, recorder, gauge, stage=0, step0=0, watch=None):
        """Explicit loop with history/snapshot recording.

        ``gauge(x, state, t)`` returns (load, force, moment, displacement);
        ``watch(step, ds, old_state, new_state)`` sees every step.
        """
        def record(k, ds, state):
            load, f, m, d = gauge(ds.x, state, ds.t)
            recorder.add_row(step=step0 + k, stage=stage, time=ds.t, load=load, gauge_force=f,
                             gauge_moment=m, gauge_displacement=d,
                             **self.energies(problem, ds.x, ds.v, state))

        record(0, ds, state)
        if recorder.snapshot_stride:
            recorder.add_snapshot(self.snapshot(step0, ds.t, ds.x))
        for k in range(1, n_steps + 1):
            old = state
            ds, state = sv.newmark_explicit_step(ds, problem, state)
            if watch is not None:
                watch(k, ds, old, state)
            if k % recorder.history_stride == 0 or k == n_steps:
                record(k, ds, state)
            if recorder.snapshot_stride and (k % recorder.snapshot_stride == 0 or k == n_steps):
                recorder.add_snapshot(self.snapshot(step0 + k, ds.t, ds.x))
        return ds, state


def _fix(dofs, fn):
    """Dirichlet entries for ``dofs`` following ``fn(t)``."""
    return {int(d): fn for d in np.ravel(dofs)}


def _const(v):
    return lambda t, v=float(v): v


def axial_force_at(mesh, x, section, s):
    """Axial force f.g1 at arc length ``s`` (mean of both sides at a node)."""
    ends = mesh.element_starts + mesh.lengths
    tol = 1e-9 * mesh.length
    locs = []
    for e in range(mesh.n_elements):
        a, b = mesh.element_starts[e], ends[e]
        if a - tol <= s <= b + tol:
            locs.append((e, float(np.clip(2 * (s - a) / mesh.lengths[e] - 1, -1, 1))))
    X = np.asarray(x).reshape(mesh.n_elements, 4, 3)
    vals = []
    for e, xi in locs:
        sh = bc.shape_functions(xi, mesh.lengths[e])
        r1 = sh.basis(1) @ X[e]
        vals.append(section.EA * (np.linalg.norm(r1) - 1.0))
    return float(np.mean(vals))


# --------------------------------------------------------------------------
# cantilever


class CantileverMoment(Scenario):
    """Clamped beam wound into a double circle by an end moment."""

    quasi_static = True

    def build_problem(self):
        c = self.config
        M = c.end_moment
        loads = asm.LoadSpec(
            end_moments={"end": lambda t: np.array([0.0, 0.0, M * t])},
            dirichlet=asm.clamp(self.mesh, 0.0),
        )
        return sv.BeamProblem(self.mesh, self.section, c.penalties, loads)

    def oracle(self):
        L = self.config.length
        return OracleResult("double_circle", {"radius": L / (4 * math.pi), "curvature": 4 * math.pi / L})

    def settings(self):
        c = self.config
        return sv.NewtonSettings(load_steps=c.load_steps or DEFAULT_LOAD_STEPS[c.scenario],
                                 tol_rel=c.tol_rel, max_iters=c.max_iters)

    def centerline_error(self, x, n_points=6):
        L = self.config.length
        g, w = np.polynomial.legendre.leggauss(n_points)
        r = asm.sample_centerline(self.mesh, x, g)
        s = self.mesh.element_starts[:, None] + 0.5 * self.mesh.lengths[:, None] * (1 + g)
        W = 0.5 * self.mesh.lengths[:, None] * w[None, :]
        ref = oracle_double_circle(s, L)
        u_max = np.linalg.norm(r - self.mesh.reference_position(s), axis=-1).max()
        return relative_l2_error(r, ref, W, u_max, L)

    def run(self, recorder=None):
        rec = recorder or self.default_recorder()
        tip = self.mesh.position_dofs_at(self.config.length)[0]
        X0 = self.mesh.reference_state()
        M = self.config.end_moment

        def cb(res):
            if res.step % rec.history_stride == 0:
                rec.add_row(step=res.step, time=res.t, load=M * res.t,
                            gauge_force=np.linalg.norm(res.reactions[:3]),
                            gauge_moment=M * res.t,
                            gauge_displacement=np.linalg.norm(res.x[tip] - X0[tip]),
                            **self.energies(self.problem, res.x))
            if rec.snapshot_stride and res.step % rec.snapshot_stride == 0:
                rec.add_snapshot(self.snapshot(res.step, res.t, res.x))

        steps = sv.newton_quasistatic(self.problem, self.settings(), callback=cb)
        x = steps[-1].x
        err = self.centerline_error(x)
        summary = {
            "scenario": self.config.scenario,
            "elements": self.mesh.n_elements,
            "relative_l2_error": err,
            "tip_position": x[tip].tolist(),
            "newton_iterations": sum(s.iterations for s in steps),
        }
        return RunResult(self.config.scenario, rec.history(), rec.snapshots, summary, x)


# --------------------------------------------------------------------------
# buckling


class Buckling(Scenario):
    """Pinned column under end shortening with a small lateral perturbation.

    Motion is restricted to the x-y plane: a circular column has a neutral
    out-of-plane mode once buckled, which would make the tangent singular.
    """

    quasi_static = True

    def build_problem(self):
        c = self.config
        mesh, L = self.mesh, c.length
        dirichlet = {}
        bottom = self.node_dofs(0.0)[0]
        top = self.node_dofs(L)[-1]
        dirichlet.update(_fix(bottom, _const(0.0)))
        dirichlet.update(_fix(top[1:], _const(0.0)))
        dirichlet[int(top[0])] = lambda t: L - c.delta * t
        # planar motion
        z = np.arange(2, mesh.n_dofs, 3)
        dirichlet.update(_fix([d for d in z if int(d) not in dirichlet], _const(0.0)))
        mid = self.node_dofs(L / 2)
        point = {int(d[1]): c.perturbation_force / len(mid) for d in mid}
        self.roller_dof, self.mid_dofs = int(top[0]), [int(d[1]) for d in mid]
        loads = asm.LoadSpec(point_forces=point, dirichlet=dirichlet)
        return sv.BeamProblem(mesh, self.section, c.penalties, loads)

    def oracle(self):
        c = self.config
        return OracleResult("euler", {"f_cr": oracle_buckling_load(c.youngs_modulus, c.radius, c.length)})

    def run(self, recorder=None):
        c = self.config
        rec = recorder or self.default_recorder()
        fixed = list(self.problem.fixed)
        i_roller = fixed.index(self.roller_dof)
        disp, force, defl = [], [], []

        def cb(res):
            d = c.delta * res.t
            f = -res.reactions[i_roller]
            w = float(np.mean(res.x[self.mid_dofs]))
            disp.append(d), force.append(f), defl.append(w)
            if res.step % rec.history_stride == 0:
                rec.add_row(step=res.step, time=res.t, load=d, gauge_force=f, gauge_displacement=w,
                            **self.energies(self.problem, res.x))
            if rec.snapshot_stride and res.step % rec.snapshot_stride == 0:
                rec.add_snapshot(self.snapshot(res.step, res.t, res.x))

        settings = sv.NewtonSettings(load_steps=c.load_steps or DEFAULT_LOAD_STEPS[c.scenario],
                                     tol_rel=c.tol_rel, max_iters=c.max_iters)
        steps = sv.newton_quasistatic(self.problem, settings, callback=cb)
        f_cr = self.oracle().values["f_cr"]
        detected = critical_force_extrapolation(disp, force, defl)
        knee = critical_force_knee(disp, force)
        ref = detected if detected is not None else knee
        post = np.asarray(force)[np.asarray(disp) > 1.2 * ref / (c.youngs_modulus * self.section.A) * c.length]
        summary = {
            "scenario": c.scenario,
            "f_cr_oracle": f_cr,
            "f_cr_detected": detected,
            "f_cr_relative_error": None if detected is None else detected / f_cr - 1.0,
            "f_cr_knee": knee,
            "post_buckling_force_min": float(post.min()) if post.size else None,
            "post_buckling_force_max": float(post.max()) if post.size else None,
            "final_deflection": defl[-1],
        }
        return RunResult(c.scenario, rec.history(), rec.snapshots, summary, steps[-1].x)


# --------------------------------------------------------------------------
# spall


class Spall(Scenario):
    """Bar pulled at both ends; the tensile steps meet and may spall the centre."""

    def build_problem(self):
        c = self.config
        mesh, L = self.mesh, c.length
        v0 = c.sigma_f / (2.0 * c.density * c.wave_speed)
        left, right = self.node_dofs(0.0)[0], self.node_dofs(L)[-1]
        dirichlet = {int(left[0]): lambda t: -v0 * t, int(right[0]): lambda t: L + v0 * t}
        dirichlet.update(_fix([left[1], left[2], right[1], right[2]], _const(0.0)))
        self.v0 = v0
        loads = asm.LoadSpec(dirichlet=dirichlet)
        return sv.BeamProblem(mesh, self.section, c.penalties, loads, c.cohesive)

    @property
    def T_half(self):
        return self.config.length / (2.0 * self.config.wave_speed)

    def oracle(self):
        c = self.config
        return OracleResult("dalembert", {"T_half": self.T_half, "wave_speed": c.wave_speed,
                                          "step": 0.5 * c.sigma_f})

    def oracle_stress(self, t, fractured):
        c = self.config
        return oracle_spall_stress(t, c.gauge_position * c.length, c.length, c.youngs_modulus,
                                   c.density, c.sigma_f, fractured)

    def run(self, recorder=None):
        c = self.config
        rec = recorder or self.default_recorder()
        pb = self.problem
        x0 = self.mesh.reference_state()
        dt = self.timestep(pb, x0)
        state = pb.fresh_state()
        ds = sv.initial_dynamic_state(pb, x0, dt, state=state)
        n = math.ceil(c.t_end / dt - 1e-9)
        gs = c.gauge_position * c.length
        init_time = np.full(self.mesh.n_interfaces, np.nan)
        fail_time = np.full(self.mesh.n_interfaces, np.nan)

        def gauge(x, state, t):
            return self.v0 * t, axial_force_at(self.mesh, x, self.section, gs), 0.0, 0.0

        def watch(k, ds, old, new):
            if new is None:
                return
            init_time[(old.alpha_n == 1) & (new.alpha_n == 0)] = ds.t
            fail_time[(old.gamma_n == 1) & (new.gamma_n == 0)] = ds.t

        ds, state = self.run_dynamic(pb, ds, state, n, rec, gauge, watch=watch)
        summary = _fracture_summary(self, init_time, fail_time, dt)
        summary["T_half"] = self.T_half
        if summary["n_initiated"]:
            summary["first_initiation_over_T_half"] = summary["first_initiation_time"] / self.T_half
        return RunResult(c.scenario, rec.history(), rec.snapshots, summary, ds.x, state)


def _fracture_summary(sc: Scenario, init_time, fail_time, dt):
    s_if = sc.mesh.interface_s
    started = np.flatnonzero(np.isfinite(init_time))
    failed = np.flatnonzero(np.isfinite(fail_time))
    out = {
        "scenario": sc.config.scenario,
        "elements": sc.mesh.n_elements,
        "dt": dt,
        "dt_critical": getattr(sc, "dt_critical", None),
        "fracture": bool(started.size),
        "n_initiated": int(started.size),
        "n_failed": int(failed.size),
        "initiated_at_s": [float(s_if[i]) for i in started],
        "initiation_times": [float(init_time[i]) for i in started],
        "failed_at_s": [float(s_if[i]) for i in failed],
        "failure_times": [float(fail_time[i]) for i in failed],
    }
    if started.size:
        i = started[np.argmin(init_time[started])]
        out["first_initiation_time"] = float(init_time[i])
        out["first_initiation_s"] = float(s_if[i])
    return out


# --------------------------------------------------------------------------
# transverse fracture


class TransverseFracture(Scenario):
    """Doubly clamped bar pushed sideways at mid-span."""

    def build_problem(self):
        c = self.config
        mesh, L = self.mesh, c.length
        dirichlet = {}
        dirichlet.update(asm.clamp(mesh, 0.0))
        dirichlet.update(asm.clamp(mesh, L))
        mid = self.node_dofs(L / 2)
        if len(mid) != 2:
            raise ConfigError("an even number of elements is needed to load the centre interface")
        v = c.load_rate
        dirichlet.update(_fix([d[1] for d in mid], lambda t: v * t))
        self.center = int(np.argmin(np.abs(mesh.interface_s - L / 2)))
        loads = asm.LoadSpec(dirichlet=dirichlet)
        return sv.BeamProblem(mesh, self.section, c.penalties, loads, c.cohesive)

    @property
    def m_cr(self):
        c = self.config
        return self.section.A * c.radius * c.sigma_c

    def oracle(self):
        return OracleResult("bending_strength", {"m_cr": self.m_cr})

    def center_resultants(self, x, state):
        d = asm.interface_data(self.mesh, x, self.section, select=[self.center])
        f = d.mean_f[0]
        g = 0.5 * (d.kt[0]["g1"][0] + d.kt[1]["g1"][0])
        n = g / max(np.linalg.norm(g), 1e-300)
        m = d.mean_m[0]
        m_perp = m - np.dot(m, n) * n
        return float(np.dot(f, n)), float(np.linalg.norm(m_perp))

    @property
    def quasi_static(self):
        return self.config.solver == "newton"

    def run(self, recorder=None):
        c = self.config
        rec = recorder or self.default_recorder()
        n_if = self.mesh.n_interfaces
        init_time, fail_time = np.full(n_if, np.nan), np.full(n_if, np.nan)
        # peak of the centre moment while the centre still holds
        peak = {"m": 0.0, "t": 0.0, "f": 0.0}

        def observe(x, t, old, new):
            f, m = self.center_resultants(x, new)
            if (new is None or not new.failed[self.center]) and m > peak["m"]:
                peak.update(m=m, t=t, f=f)
            if new is not None:
                init_time[(old.alpha_n == 1) & (new.alpha_n == 0)] = t
                fail_time[(old.gamma_n == 1) & (new.gamma_n == 0)] = t
            return f, m

        if self.quasi_static:
            x, state, dt = self.run_quasi_static(rec, observe)
        else:
            x, state, dt = self.run_explicit(rec, observe)
        summary = _fracture_summary(self, init_time, fail_time, dt)
        _f_end, m_end = self.center_resultants(x, state)
        summary.update({
            "solver": c.solver,
            "m_cr": self.m_cr,
            "peak_moment": peak["m"],
            "peak_moment_over_m_cr": peak["m"] / self.m_cr,
            "peak_time": peak["t"],
            "peak_displacement": c.load_rate * peak["t"],
            "axial_force_at_peak": peak["f"],
            "final_moment_over_m_cr": m_end / self.m_cr,
            "center_failed": bool(state is not None and state.failed[self.center]),
        })
        return RunResult(c.scenario, rec.history(), rec.snapshots, summary, x, state)

    def run_quasi_static(self, rec, observe):
        c = self.config
        pb = self.problem
        prev = {"state": pb.fresh_state()}

        def cb(res):
            f, m = observe(res.x, res.t, prev["state"], res.state)
            prev["state"] = res.state
            if res.step % rec.history_stride == 0:
                d = c.load_rate * res.t
                rec.add_row(step=res.step, time=res.t, load=d, gauge_force=f, gauge_moment=m,
                            gauge_displacement=d, **self.energies(pb, res.x, state=res.state))
            if rec.snapshot_stride and res.step % rec.snapshot_stride == 0:
                rec.add_snapshot(self.snapshot(res.step, res.t, res.x))

        settings = sv.NewtonSettings(load_steps=c.load_steps or DEFAULT_LOAD_STEPS[c.scenario],
                                     tol_rel=c.tol_rel, max_iters=c.max_iters)
        steps = sv.newton_quasistatic(pb, settings, callback=cb, t_end=c.t_end)
        return steps[-1].x, steps[-1].state, c.t_end / settings.load_steps

    def run_explicit(self, rec, observe):
        c = self.config
        pb = self.problem
        x0 = self.mesh.reference_state()
        dt = self.timestep(pb, x0)
        state = pb.fresh_state()
        ds = sv.initial_dynamic_state(pb, x0, dt, state=state)
        n = math.ceil(c.t_end / dt - 1e-9)

        def gauge(x, state, t):
            f, m = self.center_resultants(x, state)
            return c.load_rate * t, f, m, c.load_rate * t

        ds, state = self.run_dynamic(pb, ds, state, n, rec, gauge,
                                     watch=lambda k, ds, old, new: observe(ds.x, ds.t, old, new))
        return ds.x, state, dt


# --------------------------------------------------------------------------
# spaghetti


class Spaghetti(Scenario):
    """Rod bent quasi-statically by an end moment, then released."""

    def build_problem(self):
        return self.release_problem()

    def preload_problem(self):
        c = self.config
        M = self.section.EI * c.kappa0
        loads = asm.LoadSpec(end_moments={"end": lambda t: np.array([0.0, 0.0, M * t])},
                             dirichlet=asm.clamp(self.mesh, 0.0))
        return sv.BeamProblem(self.mesh, self.section, c.penalties, loads, c.cohesive)

    def release_problem(self):
        c = self.config
        loads = asm.LoadSpec(dirichlet=asm.clamp(self.mesh, 0.0))
        return sv.BeamProblem(self.mesh, self.section, c.penalties, loads, c.cohesive)

    @property
    def m_cr(self):
        c = self.config
        return c.mode_mixity * c.radius * self.section.A * c.sigma_c

    def oracle(self):
        return OracleResult("bending_strength", {"m_cr": self.m_cr,
                                                 "kappa_cr": self.m_cr / self.section.EI})

    def curvature_field(self, x):
        """||kappa|| at every Gauss point, shape (E, G)."""
        return np.linalg.norm(asm.gauss_kinematics(self.mesh, x)["kappa"], axis=-1)

    def curvature(self, x):
        """Largest curvature and its arc length."""
        k = self.curvature_field(x)
        i = np.unravel_index(np.argmax(k), k.shape)
        return float(k[i]), float(self.mesh.gauss_s[i])

    def run(self, recorder=None):
        c = self.config
        rec = recorder or self.default_recorder()
        pre = self.preload_problem()
        M = self.section.EI * c.kappa0
        tip = self.node_dofs(c.length)[-1]

        def cb(res):
            rec.add_row(step=res.step, stage=0, time=0.0, load=M * res.t,
                        gauge_moment=self.curvature(res.x)[0],
                        gauge_displacement=np.linalg.norm(res.x[tip] - self.mesh.reference_state()[tip]),
                        **self.energies(pre, res.x, state=res.state))
            if rec.snapshot_stride:
                rec.add_snapshot(self.snapshot(res.step, 0.0, res.x))

        settings = sv.NewtonSettings(load_steps=c.preload_steps, tol_rel=c.tol_rel, max_iters=c.max_iters)
        steps = sv.newton_quasistatic(pre, settings, callback=cb)
        x0, state = steps[-1].x, steps[-1].state
        kappa_pre, _ = self.curvature(x0)

        pb = self.problem
        dt = self.timestep(pb, x0)
        # released from rest: v = a = 0 at t = 0
        zeros = np.zeros_like(x0)
        ds = sv.DynamicState(pb.apply_dirichlet(x0, 0.0), zeros, zeros.copy(), 0.0, dt)
        n = math.ceil(c.t_end / dt - 1e-9)
        init_time = np.full(self.mesh.n_interfaces, np.nan)
        fail_time = np.full(self.mesh.n_interfaces, np.nan)
        track = {"kappa": kappa_pre, "s": 0.0, "t": 0.0, "near": kappa_pre}
        near = self.mesh.gauss_s <= 0.25 * c.length
        step0 = c.preload_steps

        def gauge(x, state, t):
            k, _ = self.curvature(x)
            return 0.0, 0.0, k, np.linalg.norm(x[tip] - self.mesh.reference_state()[tip])

        def watch(k, ds, old, new):
            if new is None:
                return
            if not np.any(new.failed):
                kap = self.curvature_field(ds.x)
                i = np.unravel_index(np.argmax(kap), kap.shape)
                if kap[i] > track["kappa"]:
                    track.update(kappa=float(kap[i]), s=float(self.mesh.gauss_s[i]), t=ds.t)
                track["near"] = max(track["near"], float(kap[near].max()))
            init_time[(old.alpha_n == 1) & (new.alpha_n == 0)] = ds.t
            fail_time[(old.gamma_n == 1) & (new.gamma_n == 0)] = ds.t

        ds, state = self.run_dynamic(pb, ds, state, n, rec, gauge, stage=1, step0=step0, watch=watch)
        summary = _fracture_summary(self, init_time, fail_time, dt)
        summary.update({
            "kappa0": c.kappa0,
            "preload_curvature": kappa_pre,
            "kappa_cr": self.m_cr / self.section.EI,
            "max_curvature_before_failure": track["kappa"],
            "max_curvature_over_kappa0": track["kappa"] / c.kappa0,
            "max_curvature_s": track["s"],
            "max_curvature_time": track["t"],
            "max_curvature_near_clamp_over_kappa0": track["near"] / c.kappa0,
        })
        return RunResult(c.scenario, rec.history(), rec.snapshots, summary, ds.x, state)


BUILDERS = {
    "cantilever_moment": CantileverMoment,
    "buckling": Buckling,
    "spall": Spall,
    "transverse_fracture": TransverseFracture,
    "spaghetti": Spaghetti,
}


def build_scenario(config: ScenarioConfig) -> Scenario:
    return BUILDERS[config.scenario](config)


# --------------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceRow:
    h: float
    beta: float
    error: float
    observed_order: float | None


def observed_orders(h, err):
    """Pairwise log2-style orders log(e_i-1/e_i)/log(h_i-1/h_i); first entry None."""
    out = [None]
    for i in range(1, len(h)):
        if err[i] > 0 and err[i - 1] > 0:
            out.append(math.log(err[i - 1] / err[i]) / math.log(h[i - 1] / h[i]))
        else:
            out.append(None)
    return out


def convergence_study(config: ScenarioConfig, levels=7, betas=(10.0, 100.0, 1000.0),
                      on_row: Callable | None = None):
    """Errors of the cantilever benchmark over ``levels`` meshes (h, h/2, ...)
    and penalty values ``betas`` (applied to both penalties)."""
    if config.scenario != "cantilever_moment":
        raise UnsupportedScenarioError(
            f"scenario '{config.scenario}' has no reference solution for a convergence study")
    rows = []
    for beta in betas:
        hs, errs = [], []
        for k in range(levels):
            h = config.h / 2**k
            cfg = _replace(config, h=h, beta_p=beta, beta_t=beta)
            sc = CantileverMoment(cfg)
            steps = sv.newton_quasistatic(sc.problem, sc.settings())
            hs.append(h)
            errs.append(sc.centerline_error(steps[-1].x))
            log.info("beta=%g h=%g error=%.3e", beta, h, errs[-1])
        for h, e, p in zip(hs, errs, observed_orders(hs, errs)):
            row = ConvergenceRow(h, beta, e, p)
            rows.append(row)
            if on_row is not None:
                on_row(row)
    return rows


def _replace(config, **kw):
    values = {f.name: getattr(config, f.name) for f in fields(config)}
    values.update(kw)
    return ScenarioConfig(**values)
