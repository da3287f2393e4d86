"""Weight spaces, raising/lowering operators and the Fejer lift coefficients.

A *group function* here is any callable taking an array of 2x2 matrices of
shape (..., 2, 2) and returning values of shape (...). Weight spaces use
k_theta = [[cos, sin], [-sin, cos]]; f lies in weight 2n when
f(g k_theta) = e^{2 i n theta} f(g).

E+ and E- are the right-invariant derivatives along

    (1/2) [[1, i], [i, -1]]   and   (1/2) [[1, -i], [-i, -1]],

i.e. E+- = (X1 +- i X2)/2 with X1 = diag(1, -1), X2 = [[0, 1], [1, 0]]. The
factor 1/2 is what makes E+ phi_{2n} = (ir + 1/2 + n) phi_{2n+2} hold for the
components defined below; without it every coefficient doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .config import SpectralConfig
from .errors import ConfigError, DifferentiationError, InterfaceError, ResolutionError

GroupFunction = Callable[[np.ndarray], np.ndarray]


def k_matrix(theta):
    """Stack of k_theta matrices, shape theta.shape + (2, 2)."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def as_matrices(g) -> np.ndarray:
    if hasattr(g, "matrix"):
        return g.matrix
    return np.asarray(g, dtype=float)


def phi_matrix(m):
    """Horocycle bracket log(a^2 + c^2) on a matrix stack."""
    m = np.asarray(m)
    return np.log(m[..., 0, 0] ** 2 + m[..., 1, 0] ** 2)


# --------------------------------------------------------------------------
# coefficients
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderCoefficients:
    r: float

    def raise_(self, n) -> complex:
        """E+ phi_{2n} = raise(n) phi_{2n+2}."""
        return 1j * self.r + 0.5 + n

    def lower(self, n) -> complex:
        """E- phi_{2n} = lower(n) phi_{2n-2}."""
        return 1j * self.r + 0.5 - n

    def casimir(self, n) -> complex:
        """Eigenvalue of E+ E- on weight 2n: lower(n) raise(n-1) = -(r^2 + (n - 1/2)^2)."""
        return self.lower(n) * self.raise_(n - 1)

    def normalized_raise(self, n) -> complex:
        """Scalar by which R = E+ / raise(n) acts on coefficients: always 1."""
        return self.raise_(n) / self.raise_(n)


# --------------------------------------------------------------------------
# Fejer lift coefficients
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LiftWeights:
    L: int
    prefactor: float

    def __call__(self, n) -> float:
        n = np.asarray(n)
        return self.prefactor * np.where(np.abs(n) <= self.L, (self.L - np.abs(n)) / self.L, 0.0)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    @property
    def table(self) -> np.ndarray:
        return self(self.indices)

    def sum_squares(self) -> float:
        return float(math.fsum(float(w) ** 2 for w in self.table))


def fejer_square_sum(L: int) -> float:
    """sum_{|n|<=L} ((L - |n|)/L)^2, which equals (2L^2 + 1)/(3L)."""
    return math.fsum(((L - abs(n)) / L) ** 2 for n in range(-L, L + 1))


def lift_weights(cfg_or_r) -> LiftWeights:
    r = cfg_or_r.r if isinstance(cfg_or_r, SpectralConfig) else float(cfg_or_r)
    if r < 1:
        raise ConfigError("r must be at least 1")
    L = max(1, math.floor(math.sqrt(r)))
    return LiftWeights(L, math.sqrt(3 * L / (2 * L * L + 1)))


# --------------------------------------------------------------------------
# E+-
# --------------------------------------------------------------------------

def _flow(kind: int, eps: float) -> np.ndarray:
    if kind == 1:
        return np.array([[math.exp(eps), 0.0], [0.0, math.exp(-eps)]])
    return np.array([[math.cosh(eps), math.sinh(eps)], [math.sinh(eps), math.cosh(eps)]])


def _directional(F: GroupFunction, m: np.ndarray, kind: int, h: float):
    return (F(m @ _flow(kind, h)) - F(m @ _flow(kind, -h))) / (2 * h)


def apply_E(F: GroupFunction, sign: int, step: float = 1e-5, rtol: float = 1e-3) -> GroupFunction:
    """The group function E+F (sign=+1) or E-F (sign=-1).

    Each right derivative is a central difference at ``step`` and ``step/2``
    combined by Richardson extrapolation. If the two raw estimates differ by
    more than ``rtol`` of their size, F is treated as non-smooth.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")

    def EF(g):
        m = as_matrices(g)
        out = []
        for kind in (1, 2):
            d1 = _directional(F, m, kind, step)
            d2 = _directional(F, m, kind, step / 2)
            scale = np.maximum(np.abs(d2), np.abs(F(m)) * 1e-8 + 1e-300)
            if np.any(np.abs(d1 - d2) > rtol * scale):
                raise DifferentiationError("step halving changed the derivative beyond tolerance")
            out.append((4 * d2 - d1) / 3)
        return 0.5 * (out[0] + sign * 1j * out[1])

    return EF


# --------------------------------------------------------------------------
# weight projection
# --------------------------------------------------------------------------

def weight_project(F: GroupFunction, n: int, n_theta: int = 64, check: bool = True,
                   tol: float = 1e-10) -> GroupFunction:
    """g -> (1/2pi) int_0^{2pi} F(g k_theta) e^{-2 i n theta} dtheta (trapezoid).

    With ``check`` the projection is recomputed on a doubled grid and a
    change beyond ``tol`` (relative to the fibre maximum) raises
    ResolutionError.
    """

    def project(g, nt=n_theta, chk=check):
        m = as_matrices(g)
        th = 2 * math.pi * np.arange(nt) / nt
        vals = F(m[..., None, :, :] @ k_matrix(th))
        out = np.mean(vals * np.exp(-2j * n * th), axis=-1)
        if chk:
            fine = project(g, 2 * nt, False)
            scale = float(np.max(np.abs(vals))) or 1.0
            if np.max(np.abs(fine - out)) > tol * scale:
                raise ResolutionError(f"weight projection aliased at {nt} nodes; increase n_theta")
        return out

    return project


def fibre_parseval(F: GroupFunction, g, n_theta: int = 64):
    """(sum_n |F_n(g)|^2, fibre mean of |F(g k_theta)|^2) from one FFT."""
    m = as_matrices(g)
    th = 2 * math.pi * np.arange(n_theta) / n_theta
    vals = F(m[..., None, :, :] @ k_matrix(th))
    coeffs = np.fft.fft(vals, axis=-1) / n_theta
    # e^{-2 i n theta} on a grid of n_theta nodes samples only even harmonics
    # of theta; the odd FFT bins belong to no weight space and must vanish
    even = coeffs[..., 0::2]
    odd = coeffs[..., 1::2]
    return (np.sum(np.abs(even) ** 2, axis=-1), np.mean(np.abs(vals) ** 2, axis=-1),
            np.sum(np.abs(odd) ** 2, axis=-1))


# --------------------------------------------------------------------------
# plane waves
# --------------------------------------------------------------------------

def plane_wave(s: float, b: float = 0.0) -> GroupFunction:
    """F(g) = e^{(is - 1/2) phi(g k_b)}."""
    kb = k_matrix(b)

    def F(g):
        return np.exp((1j * s - 0.5) * phi_matrix(as_matrices(g) @ kb))

    return F


def plane_wave_component(s: float, b: float, n: int, n_theta: int = 256, check: bool = False) -> GroupFunction:
    """Weight-2n component of the plane wave with its boundary phase removed:
    e^{-2 i n b} times the projection. These satisfy E+ c_{2n} = raise(n) c_{2n+2}."""
    proj = weight_project(plane_wave(s, b), n, n_theta=n_theta, check=check)
    phase = np.exp(-2j * n * b)

    def comp(g):
        return phase * proj(g)

    return comp


def upper_triangular(x, y):
    """n_x a_{log y}: the matrix sending i to x + iy, as a stack."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    sy = np.sqrt(y)
    zero = np.zeros_like(sy)
    return np.stack([np.stack([sy, x / sy], -1), np.stack([zero, 1 / sy], -1)], -2)


def hyperbolic_laplacian_fd(f: Callable, x: float, y: float, h: float = 1e-3):
    """y^2 (f_xx + f_yy) by a five-point stencil plus its half-step value for
    Richardson extrapolation (returns the extrapolated value)."""

    def lap(hh):
        pts_x = np.array([x - hh, x + hh, x, x, x])
        pts_y = np.array([y, y, y - hh, y + hh, y])
        v = f(pts_x, pts_y)
        return y * y * (v[0] + v[1] + v[2] + v[3] - 4 * v[4]) / (hh * hh)

    return (4 * lap(h / 2) - lap(h)) / 3


# --------------------------------------------------------------------------
# weight components on a common grid and the pairing I_psi
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FibreGrid:
    """Base points a(t) n(u) with Haar weights e^t dt du, plus a theta grid for
    brute-force fibre integrals."""

    t: np.ndarray
    u: np.ndarray
    weight: np.ndarray
    n_theta: int = 64

    @classmethod
    def rectangle(cls, t_range, u_range, n_t: int = 16, n_u: int = 16, n_theta: int = 64) -> "FibreGrid":
        from .quadrature import gauss_legendre

        tn, tw = gauss_legendre(*t_range, 1, order=n_t)
        un, uw = gauss_legendre(*u_range, 1, order=n_u)
        T, U = np.meshgrid(tn, un, indexing="ij")
        W = np.outer(tw, uw) * np.exp(T)
        return cls(T.ravel(), U.ravel(), W.ravel(), n_theta)

    def matrices(self) -> np.ndarray:
        et = np.exp(self.t / 2)
        z = np.zeros_like(et)
        return np.stack([np.stack([et, et * self.u], -1), np.stack([z, 1 / et], -1)], -2)


@dataclass
class WeightComponent:
    """f(a n k_theta) = e^{2 i n theta} values[a n] on a FibreGrid."""

    n: int
    values: np.ndarray
    grid: FibreGrid

    @classmethod
    def from_function(cls, F: GroupFunction, n: int, grid: FibreGrid, n_theta: int = 64) -> "WeightComponent":
        return cls(n, weight_project(F, n, n_theta=n_theta, check=False)(grid.matrices()), grid)

    def on_fibre(self, theta) -> np.ndarray:
        """Values at a n k_theta, shape (points, len(theta))."""
        return self.values[:, None] * np.exp(2j * self.n * np.asarray(theta))[None, :]

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2 * self.grid.weight))


def _common_grid(*groups) -> FibreGrid:
    grid = None
    for comps in groups:
        for c in comps:
            if grid is None:
                grid = c.grid
            elif c.grid is not grid:
                raise InterfaceError("weight components live on different grids")
    if grid is None:
        raise InterfaceError("no components given")
    return grid


def pair_I_psi(f: Mapping[int, WeightComponent], psi: Mapping[int, WeightComponent],
               method: str = "fast") -> complex:
    """I_psi(f) = sum_l <f psi_{2l}, psi_0> for K-finite f = sum_j f_{2j}.

    ``fast`` keeps only j = -l, the terms that survive the fibre integral;
    ``brute`` forms the full double sum on the (theta, t, u) grid.
    The pairing is linear in f and conjugate-linear in psi_0.
    """
    grid = _common_grid(f.values(), psi.values())
    for key, c in list(f.items()) + list(psi.items()):
        if key != c.n:
            raise InterfaceError(f"component stored under {key} has weight index {c.n}")
    if 0 not in psi:
        return 0.0 + 0.0j
    psi0 = psi[0].values
    if method == "fast":
        total = 0.0 + 0.0j
        for l, pc in psi.items():
            fc = f.get(-l)
            if fc is None:
                continue
            total += np.sum(fc.values * pc.values * np.conj(psi0) * grid.weight)
        return complex(total)
    if method != "brute":
        raise ValueError("method must be 'fast' or 'brute'")
    th = 2 * math.pi * np.arange(grid.n_theta) / grid.n_theta
    p0 = psi[0].on_fibre(th)
    total = 0.0 + 0.0j
    for fc in f.values():
        fv = fc.on_fibre(th)
        for pc in psi.values():
            total += np.sum(np.mean(fv * pc.on_fibre(th) * np.conj(p0), axis=1) * grid.weight)
    return complex(total)
