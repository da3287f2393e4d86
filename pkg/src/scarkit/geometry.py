"""SL(2, R) elements, Iwasawa coordinates and the horocycle bracket.

Conventions
-----------
KAN coordinates write ``g = rot(theta) @ a(t) @ n(u)`` with

    rot(theta) = [[cos, -sin], [sin, cos]]
    a(t)       = diag(e^{t/2}, e^{-t/2})
    n(u)       = [[1, u], [0, 1]]

The weight spaces use ``k_theta = rot(-theta)`` (see :mod:`scarkit.ladder`).
The base point of ``g`` in the upper half-plane is ``g . i``; the origin of the
disc model corresponds to ``i``.

The horocycle bracket is ``phi(g) = log(a^2 + c^2) = t``. It is invariant
under left rotations and right unipotent translations.

Haar measure is ``dg = (1/2pi) dtheta * e^t dt du``. With this normalization a
right-K-invariant function integrates to its hyperbolic area integral
``dx dy / y^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, InvalidElementError, SingularConfigurationError

DET_TOL = 1e-10


@dataclass(frozen=True)
class GroupElement:
    """A real 2x2 matrix [[a, b], [c, d]] with unit determinant."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_matrix(cls, m, check: bool = True) -> "GroupElement":
        m = np.asarray(m, dtype=float)
        g = cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))
        if check:
            g.check()
        return g

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rot(cls, theta: float) -> "GroupElement":
        c, s = math.cos(theta), math.sin(theta)
        return cls(c, -s, s, c)

    @classmethod
    def k(cls, theta: float) -> "GroupElement":
        """Weight-convention rotation [[cos, sin], [-sin, cos]]."""
        return cls.rot(-theta)

    @classmethod
    def a_t(cls, t: float) -> "GroupElement":
        return cls(math.exp(t / 2), 0.0, 0.0, math.exp(-t / 2))

    @classmethod
    def n_u(cls, u: float) -> "GroupElement":
        return cls(1.0, u, 0.0, 1.0)

    @classmethod
    def from_iwasawa(cls, theta: float, t: float, u: float) -> "GroupElement":
        return cls.rot(theta) @ cls.a_t(t) @ cls.n_u(u)

    @classmethod
    def random(cls, rng, scale: float = 1.0) -> "GroupElement":
        theta = rng.uniform(-math.pi, math.pi)
        t = rng.normal(scale=scale)
        u = rng.normal(scale=scale)
        return cls.from_iwasawa(theta, t, u)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def check(self, tol: float = DET_TOL) -> "GroupElement":
        if not abs(self.det - 1.0) <= tol:
            raise InvalidElementError(f"determinant {self.det!r} differs from 1 by more than {tol}")
        return self

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "GroupElement":
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def act(self, z: complex) -> complex:
        """Mobius action on the upper half-plane."""
        return (self.a * z + self.b) / (self.c * z + self.d)

    def base_point(self) -> complex:
        return self.act(1j)

    def iwasawa(self):
        return iwasawa(self)

    def phi(self) -> float:
        return horocycle_phi(self)


def iwasawa(g: GroupElement):
    """(theta, t, u) with g = rot(theta) a(t) n(u), theta in (-pi, pi]."""
    g.check()
    rho2 = g.a * g.a + g.c * g.c
    theta = math.atan2(g.c, g.a)
    if theta == -math.pi:
        theta = math.pi
    t = math.log(rho2)
    u = (g.a * g.b + g.c * g.d) / rho2
    return theta, t, u


def horocycle_phi(g: GroupElement) -> float:
    return math.log(g.a * g.a + g.c * g.c)


def phi_a_n_rot(t, u, theta):
    """phi(a(t) n(u) rot(theta)), vectorized.

    The first column of a(t) n(u) rot(theta) is
    (e^{t/2}(cos + u sin), e^{-t/2} sin).
    """
    t, u, theta = np.broadcast_arrays(*map(np.asarray, (t, u, theta)))
    c, s = np.cos(theta), np.sin(theta)
    return np.log(np.exp(t) * (c + u * s) ** 2 + np.exp(-t) * s * s)


def phi_theta_derivative_tu(t, u, theta, check: bool = True):
    """d/dtheta phi(a(t) n(u) rot(theta)) in closed form, vectorized.

    numerator   (-2 sinh t + e^t u^2) sin 2theta + 2 u e^t cos 2theta
    denominator e^t cos^2 + u e^t sin 2theta + e^t u^2 sin^2 + e^{-t} sin^2
    """
    t, u, theta = np.broadcast_arrays(*map(np.asarray, (t, u, theta)))
    et = np.exp(t)
    s2, c2 = np.sin(2 * theta), np.cos(2 * theta)
    c, s = np.cos(theta), np.sin(theta)
    num = (-2 * np.sinh(t) + et * u * u) * s2 + 2 * u * et * c2
    den = et * c * c + u * et * s2 + et * u * u * s * s + np.exp(-t) * s * s
    if check and np.any(den < 1e-14):
        raise SingularConfigurationError("phase-derivative denominator below 1e-14")
    return num / den


def phi_theta_derivative(g: GroupElement, theta: float) -> float:
    """d/dtheta phi(g rot(theta)); only the (t, u) part of g matters."""
    _, t, u = iwasawa(g)
    return float(phi_theta_derivative_tu(t, u, theta))


def hyperbolic_distance(z: complex, w: complex) -> float:
    if not (z.imag > 0 and w.imag > 0):
        raise DomainError("points must lie in the open upper half-plane")
    return math.acosh(1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag))


def t_coordinate(z: complex, w: complex) -> float:
    """2 sinh^2(d/2) = cosh d - 1 = |z - w|^2 / (2 Im z Im w)."""
    if not (z.imag > 0 and w.imag > 0):
        raise DomainError("points must lie in the open upper half-plane")
    return abs(z - w) ** 2 / (2.0 * z.imag * w.imag)


def base_distance(t, u):
    """Distance from i to a(t) n(u) . i = e^t (u + i), vectorized."""
    t, u = np.asarray(t, dtype=float), np.asarray(u, dtype=float)
    et = np.exp(t)
    arg = 1.0 + (et * et * u * u + (et - 1.0) ** 2) / (2.0 * et)
    return np.arccosh(arg)


def haar_weight(t, u=None):
    """Density e^t of the Haar measure in (t, u); the K fibre has volume 1."""
    return np.exp(t)


class RegionKind(Enum):
    BALL = "ball"          # B(0, tau) K
    TUBE = "tube"          # B_r: |u| <= u_cut inside the ball
    COMPLEMENT = "complement"


@dataclass(frozen=True)
class Region:
    kind: RegionKind
    tau: float
    u_cut: float

    @classmethod
    def from_config(cls, kind, cfg, N: float | None = None) -> "Region":
        return cls(RegionKind(kind), cfg.tau, cfg.u_cut(N))

    def contains_tu(self, t, u):
        inside = base_distance(t, u) <= self.tau
        if self.kind is RegionKind.BALL:
            return inside
        tube = inside & (np.abs(u) <= self.u_cut)
        if self.kind is RegionKind.TUBE:
            return tube
        return inside & ~tube


def region_contains(reg: Region, g: GroupElement, cfg=None) -> bool:
    if cfg is not None and not math.isclose(reg.tau, cfg.tau):
        raise DomainError("region built for a different tau")
    _, t, u = iwasawa(g)
    return bool(reg.contains_tu(t, u))


def u_extent(tau: float) -> float:
    """Largest |u| inside B(0, tau).

    For fixed u the distance is smallest at e^t = (1 + u^2)^{-1/2}, where
    cosh d = sqrt(1 + u^2); so |u| <= sinh(tau).
    """
    return math.sinh(tau)


def phase_lemma_scan(tau: float, N_values, u_cut: float, n_t: int = 41, n_u: int = 120,
                     n_theta: int = 41, u_max: float | None = None, kappa0: float = 0.5,
                     angle: str = "fejer", ball: bool = True):
    """Dense scan of the phase-derivative lower bound.

    For each N, over |t| <= tau, u_cut <= |u| <= u_max (and inside B(0, tau)K
    when ``ball``) and over the angular window, report min of sign(u) phi' / |u|.
    The window is |theta_F| <= |u| N^{-1/4} in the Fejer variable theta_F =
    2 theta (``angle="fejer"``, the variable in which the lift weight is
    F_L(theta_F)), or the same bound on the matrix angle (``angle="matrix"``).
    ``N_min`` is the smallest N whose minimum is at least ``kappa0``.
    """
    if angle not in ("fejer", "matrix"):
        raise ValueError("angle must be 'fejer' or 'matrix'")
    scale = 0.5 if angle == "fejer" else 1.0
    if u_max is None:
        u_max = u_extent(tau)
    t = np.linspace(-tau, tau, n_t)
    u_pos = np.geomspace(max(u_cut, 1e-6), u_max, n_u)
    u = np.concatenate([-u_pos[::-1], u_pos])
    T, U = np.meshgrid(t, u, indexing="ij")
    keep = base_distance(T, U) <= tau if ball else np.ones(T.shape, bool)
    T, U = T[keep][:, None], U[keep][:, None]
    frac = np.linspace(-1.0, 1.0, n_theta)[None, :]
    rows = []
    n_min = None
    for N in N_values:
        theta = scale * frac * np.abs(U) * N ** -0.25
        ratio = np.sign(U) * phi_theta_derivative_tu(T, U, theta) / np.abs(U)
        worst = float(ratio.min()) if ratio.size else math.inf
        rows.append({"N": float(N), "min_ratio": worst, "pass": worst >= kappa0, "points": int(T.size)})
        if n_min is None and worst >= kappa0:
            n_min = float(N)
    return {"kappa0": kappa0, "angle": angle, "ball": ball, "rows": rows, "N_min": n_min}
