"""Kinematics, Hermite shape functions and constitutive law of the
torsion-free Kirchhoff beam.

Element DOFs are stored in *slot* order ``[p1, t1, p2, t2]`` (node positions
and node tangents). The tangent slots carry the factor ``L/2`` inside their
basis function, so that ``r = sum_a N_a x_a`` holds for all four slots.

Most helpers below are vectorized: they accept arrays of shape ``(..., 3)``
and evaluate every point at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateElementError, DomainError

#: Default floor on ||r'|| below which an element is declared degenerate.
#: r' is dimensionless, so the floor is relative to the unit reference stretch.
DEGENERATE_FLOOR = 1e-12

# Coefficients (ascending powers of xi) of 4*N for [Np1, Np2, Nt1, Nt2].
_HERMITE_COEFFS = np.array(
    [
        [2.0, -3.0, 0.0, 1.0],
        [2.0, 3.0, 0.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
        [-1.0, -1.0, 1.0, 1.0],
    ]
) / 4.0

# Gauss-Legendre rule used for every bulk integral.
GAUSS_POINTS, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class MaterialSection:
    """Homogeneous circular cross-section."""

    E: float
    rho: float
    R: float
    A: float = field(init=False)
    I: float = field(init=False)

    def __post_init__(self):
        if not (self.E > 0 and self.rho > 0 and self.R > 0):
            raise DomainError("E, rho and R must be strictly positive")
        object.__setattr__(self, "A", np.pi * self.R**2)
        object.__setattr__(self, "I", np.pi * self.R**4 / 4.0)

    @property
    def EA(self) -> float:
        return self.E * self.A

    @property
    def EI(self) -> float:
        return self.E * self.I

    @property
    def wave_speed(self) -> float:
        return float(np.sqrt(self.E / self.rho))


@dataclass(frozen=True)
class ShapeEval:
    """Hermite shape functions at one parametric coordinate.

    ``values[k]`` holds the k-th derivative with respect to xi of
    ``[Np1, Np2, Nt1, Nt2]``; ``ds_dxi`` is the Jacobian L/2.
    """

    xi: float
    L: float
    values: np.ndarray

    @property
    def ds_dxi(self) -> float:
        return 0.5 * self.L

    def basis(self, k: int = 0) -> np.ndarray:
        """k-th arc-length derivative of the slot basis ``[p1, t1, p2, t2]``."""
        v = self.values[k]
        scale = (2.0 / self.L) ** k
        return scale * np.array([v[0], 0.5 * self.L * v[2], v[1], 0.5 * self.L * v[3]])


def _hermite_table(xi):
    """Parametric derivatives 0..3 of [Np1, Np2, Nt1, Nt2]; shape (4, ..., 4)."""
    xi = np.asarray(xi, dtype=float)
    powers = np.stack([np.ones_like(xi), xi, xi**2, xi**3], axis=-1)
    d1 = np.stack([np.zeros_like(xi), np.ones_like(xi), 2 * xi, 3 * xi**2], axis=-1)
    d2 = np.stack([np.zeros_like(xi), np.zeros_like(xi), 2 * np.ones_like(xi), 6 * xi], axis=-1)
    d3 = np.stack([np.zeros_like(xi)] * 3 + [6 * np.ones_like(xi)], axis=-1)
    return np.stack([p @ _HERMITE_COEFFS.T for p in (powers, d1, d2, d3)])


def shape_functions(xi: float, L: float) -> ShapeEval:
    if not -1.0 <= xi <= 1.0:
        raise DomainError(f"parametric coordinate {xi} outside [-1, 1]")
    if not L > 0:
        raise DomainError("element length must be positive")
    return ShapeEval(float(xi), float(L), _hermite_table(xi))


def slot_basis(xi, L):
    """Arc-length derivatives of the slot basis, vectorized.

    Parameters
    ----------
    xi : array_like, shape (G,)
        Parametric coordinates.
    L : array_like, shape (E,)
        Element lengths.

    Returns
    -------
    ndarray, shape (4, E, G, 4)
        ``out[k, e, g, a]`` is the k-th arc-length derivative of slot ``a``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    L = np.atleast_1d(np.asarray(L, dtype=float))
    tab = _hermite_table(xi)  # (4, G, 4) in [Np1, Np2, Nt1, Nt2]
    half = 0.5 * L[:, None]
    out = np.empty((4, L.size, xi.size, 4))
    for k in range(4):
        scale = (2.0 / L[:, None]) ** k
        out[k, :, :, 0] = scale * tab[k, None, :, 0]
        out[k, :, :, 1] = scale * half * tab[k, None, :, 2]
        out[k, :, :, 2] = scale * tab[k, None, :, 1]
        out[k, :, :, 3] = scale * half * tab[k, None, :, 3]
    return out


@dataclass
class ElementDofs:
    p1: np.ndarray
    t1: np.ndarray
    p2: np.ndarray
    t2: np.ndarray
    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("element length must be positive")
        for name in ("p1", "t1", "p2", "t2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def as_slots(self) -> np.ndarray:
        return np.stack([self.p1, self.t1, self.p2, self.t2])

    @classmethod
    def from_slots(cls, X, L):
        X = np.asarray(X, dtype=float).reshape(4, 3)
        return cls(X[0], X[1], X[2], X[3], L)

    @classmethod
    def straight(cls, start, direction, L):
        """Undeformed element of length L along a unit direction."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        p = np.asarray(start, dtype=float)
        return cls(p, d.copy(), p + L * d, d.copy(), L)


@dataclass
class LocalKinematics:
    r: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    eps: float
    kappa: np.ndarray
    g1: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    t4: np.ndarray
    t5: np.ndarray | None
    t6: np.ndarray
    G1: np.ndarray


def kinematic_terms(r1, r2, r3=None, floor=DEGENERATE_FLOOR, with_G1=True):
    """Strain measures and auxiliary vectors from centerline derivatives.

    Works on any leading shape. Returns a dict with keys ``norm, eps, g1,
    kappa, t1, t2, t3, t4``, ``G1`` unless ``with_G1`` is false, and, when ``r3`` is given, ``t6``.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    n = np.linalg.norm(r1, axis=-1)
    if np.any(n < floor) or not np.all(np.isfinite(n)):
        raise DegenerateElementError(f"||r'|| = {np.min(n):.3e} below floor {floor:.1e}")
    inv = 1.0 / n[..., None]
    inv2 = inv * inv
    inv4 = inv2 * inv2
    a = _vdot(r1, r2)[..., None]
    b = _vdot(r2, r2)[..., None]
    out = {
        "norm": n,
        "eps": n - 1.0,
        "g1": r1 * inv,
        "kappa": _cross(r1, r2) * inv2,
        "t1": r1 - r1 * inv,
        "t2": 2.0 * r1 * a * a * inv4 * inv2 - (r1 * b + r2 * a) * inv4,
        "t3": r2 * inv2 - r1 * a * inv4,
        "t4": r1 * inv2,
    }
    if with_G1:
        out["G1"] = np.eye(3) * inv[..., None] - r1[..., :, None] * r1[..., None, :] * (inv2 * inv)[..., None]
    if r3 is not None:
        r3 = np.asarray(r3, dtype=float)
        c = _vdot(r1, r3)[..., None]
        out["t6"] = (2.0 * r2 * a + r1 * c) * inv4 - 2.0 * r1 * a * a * inv4 * inv2 - r3 * inv2
    return out


def _vdot(u, v):
    return (u * v).sum(axis=-1)


def _cross(u, v):
    out = np.empty(np.broadcast_shapes(u.shape, v.shape))
    out[..., 0] = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    out[..., 1] = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    out[..., 2] = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return out


def interpolate(dofs: ElementDofs, xi: float, floor: float = DEGENERATE_FLOOR) -> LocalKinematics:
    sh = shape_functions(xi, dofs.L)
    X = dofs.as_slots()
    r, r1, r2, r3 = (sh.basis(k) @ X for k in range(4))
    kt = kinematic_terms(r1, r2, r3, floor=floor)
    return LocalKinematics(
        r=r, r1=r1, r2=r2, r3=r3,
        eps=float(kt["eps"]), kappa=kt["kappa"], g1=kt["g1"],
        t1=kt["t1"], t2=kt["t2"], t3=kt["t3"], t4=kt["t4"], t5=None, t6=kt["t6"],
        G1=kt["G1"],
    )


def axial_force(kin, sec: MaterialSection) -> np.ndarray:
    """f_par = EA * eps * g1."""
    return sec.EA * np.asarray(kin.eps)[..., None] * kin.g1


def bending_moment(kin, sec: MaterialSection) -> np.ndarray:
    """m_perp = EI * kappa."""
    return sec.EI * kin.kappa


# --- linearizations (derivatives with respect to r', r'', r''') -------------


def _outer(u, v):
    return np.einsum("...i,...j->...ij", u, v)


def _dot(u, v):
    return np.einsum("...i,...i->...", u, v)[..., None, None]


def skew(v):
    """S(v) with S(v) w = v x w, vectorized over leading axes."""
    v = np.asarray(v, dtype=float)
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1] = -v[..., 2]
    S[..., 0, 2] = v[..., 1]
    S[..., 1, 0] = v[..., 2]
    S[..., 1, 2] = -v[..., 0]
    S[..., 2, 0] = -v[..., 1]
    S[..., 2, 1] = v[..., 0]
    return S


def d_t1(r1):
    """dt1/dr'."""
    n = np.linalg.norm(r1, axis=-1)[..., None, None]
    return (n - 1.0) / n * np.eye(3) + _outer(r1, r1) / n**3


def d_t2(r1, r2):
    """(dt2/dr', dt2/dr'')."""
    n = np.linalg.norm(r1, axis=-1)[..., None, None]
    a = _dot(r1, r2)
    b = _dot(r2, r2)
    I = np.eye(3)
    A = (
        (2 * a**2 / n**6 - b / n**4) * I
        + (-12 * a**2 / n**8 + 4 * b / n**6) * _outer(r1, r1)
        + 4 * a / n**6 * (_outer(r1, r2) + _outer(r2, r1))
        - _outer(r2, r2) / n**4
    )
    B = -a / n**4 * I + 4 * a / n**6 * _outer(r1, r1) - 2 * _outer(r1, r2) / n**4 - _outer(r2, r1) / n**4
    return A, B


def d_t3(r1, r2):
    """(dt3/dr', dt3/dr'')."""
    n = np.linalg.norm(r1, axis=-1)[..., None, None]
    a = _dot(r1, r2)
    I = np.eye(3)
    A = -a / n**4 * I + 4 * a / n**6 * _outer(r1, r1) - 2 * _outer(r2, r1) / n**4 - _outer(r1, r2) / n**4
    B = I / n**2 - _outer(r1, r1) / n**4
    return A, B


def d_t4(r1):
    """dt4/dr'."""
    n = np.linalg.norm(r1, axis=-1)[..., None, None]
    return np.eye(3) / n**2 - 2 * _outer(r1, r1) / n**4


def d_t6(r1, r2, r3):
    """(dt6/dr', dt6/dr'', dt6/dr''')."""
    n = np.linalg.norm(r1, axis=-1)[..., None, None]
    a = _dot(r1, r2)
    c = _dot(r1, r3)
    I = np.eye(3)
    A = (
        (-2 * a**2 / n**6 + c / n**4) * I
        + (12 * a**2 / n**8 - 4 * c / n**6) * _outer(r1, r1)
        - 4 * a / n**6 * _outer(r1, r2)
        - 8 * a / n**6 * _outer(r2, r1)
        + 2 * _outer(r2, r2) / n**4
        + _outer(r1, r3) / n**4
        + 2 * _outer(r3, r1) / n**4
    )
    B = 2 * a / n**4 * I - 4 * a / n**6 * _outer(r1, r1) + 2 * _outer(r2, r1) / n**4
    C = -I / n**2 + _outer(r1, r1) / n**4
    return A, B, C


def d_G1_times(r1, j):
    """d(G1 j)/dr' for a fixed vector j."""
    n = np.linalg.norm(r1, axis=-1)[..., None, None]
    jr = _dot(j, r1)
    return (
        -_outer(j, r1) / n**3
        - _outer(r1, j) / n**3
        - jr / n**3 * np.eye(3)
        + 3 * jr * _outer(r1, r1) / n**5
    )


def d_kappa(r1, r2):
    """(dkappa/dr', dkappa/dr'') with kappa = t4 x r''."""
    t4 = r1 / np.linalg.norm(r1, axis=-1, keepdims=True) ** 2
    return -skew(r2) @ d_t4(r1), skew(t4)
