"""Selberg/Harish-Chandra transform triple and the Helgason radial transform.

Conventions (fixed once, everything else is calibrated against them):

    h(s) = int e^{isu} g(u) du,            g(u) = (1/2pi) int e^{-isu} h(s) ds
    g(u) = 2 Q(sinh^2(u/2))
    k(w) = -(1/pi) int_w^inf dQ(v) / sqrt(v - w)

The Abel variable ``w`` is sinh^2(d/2) for hyperbolic distance d; the
``t``-coordinate 2 sinh^2(d/2) = cosh d - 1 is exposed alongside it.
Area measure on H is dx dy / y^2, under which

    k(d)    = (1/2pi) int_0^inf P_{-1/2+is}(cosh d) h(s) s tanh(pi s) ds
    ||k||^2 = (1/2pi) int_0^inf h(s)^2 s tanh(pi s) ds

``SPECTRAL_DENSITY`` is that 1/2pi; :func:`calibrate_conventions` re-derives
it from the Gaussian pair.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import PrecisionError, TailModelRequired
from .quadrature import gauss_legendre, gauss_legendre_breaks, oscillation_panels

SPECTRAL_DENSITY = 1.0 / (2.0 * math.pi)


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------

@dataclass
class FourierSide:
    """Even function g(u) vanishing for |u| > support."""

    func: Callable[[np.ndarray], np.ndarray]
    support: float
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        out = np.zeros(u.shape)
        inside = u <= self.support
        if np.any(inside):
            out[inside] = self.func(u[inside])
        return out

    def deriv(self, u):
        """g'(u), odd; finite differences when no closed form was supplied."""
        u = np.asarray(u, dtype=float)
        if self.derivative is not None:
            a = np.abs(u)
            out = np.zeros(u.shape)
            inside = a <= self.support
            out[inside] = self.derivative(a[inside])
            return np.sign(u) * out
        h = 1e-4 * max(self.support, 1e-3)
        return (8 * (self(u + h) - self(u - h)) - (self(u + 2 * h) - self(u - 2 * h))) / (12 * h)

    def scaled(self, factor: float) -> "FourierSide":
        d = self.derivative
        return FourierSide(lambda u: factor * self.func(u), self.support,
                           None if d is None else (lambda u: factor * d(u)))


@dataclass
class SpectralFunction:
    """Even real function h sampled on a nonnegative s-grid.

    ``exact`` (optional) evaluates h directly; ``__call__`` interpolates the
    samples with a quintic spline and returns 0 beyond the grid unless a tail
    model ``|h(s)| <= tail_amplitude * s^-tail_exponent`` is attached (the
    tail only enters error estimates).
    """

    s: np.ndarray
    values: np.ndarray
    exact: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tail_exponent: Optional[float] = None
    tail_amplitude: float = 0.0
    error_estimate: float = 0.0
    order: int = 5
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.values = np.asarray(self.values, dtype=float)

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    def spline(self):
        if self._spline is None:
            k = min(self.order, len(self.s) - 1)
            self._spline = make_interp_spline(self.s, self.values, k=k)
        return self._spline

    def __call__(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        out = np.zeros(s.shape)
        inside = s <= self.s_max
        if np.any(inside):
            out[inside] = self.spline()(s[inside])
        return out

    def evaluate(self, s):
        """Direct evaluation when available, spline otherwise."""
        if self.exact is not None:
            return np.asarray(self.exact(np.abs(np.asarray(s, dtype=float))), dtype=float)
        return self(s)

    def tail_l1(self) -> float:
        """Bound on int_{s_max}^inf |h| from the tail model (0 without one)."""
        p = self.tail_exponent
        if p is None or self.tail_amplitude == 0.0:
            return 0.0
        return self.tail_amplitude * self.s_max ** (1 - p) / (p - 1)


@dataclass
class QFunction:
    """Q on the Abel variable w = sinh^2(d/2), zero past ``omega_max``.

    Built from g by :func:`q_from_g`, or directly from closed forms (used by
    the Abel oracle). ``dq`` is dQ/dw.
    """

    q: Callable[[np.ndarray], np.ndarray]
    dq: Callable[[np.ndarray], np.ndarray]
    omega_max: float
    g: Optional[FourierSide] = None

    @property
    def d_max(self) -> float:
        """Distance matching ``omega_max``."""
        return 2 * math.asinh(math.sqrt(self.omega_max))

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w <= self.omega_max, self.q(np.clip(w, 0.0, self.omega_max)), 0.0)

    def derivative(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w <= self.omega_max, self.dq(np.clip(w, 0.0, self.omega_max)), 0.0)

    def samples(self, n: int = 256):
        w = np.linspace(0.0, self.omega_max, n)
        return w, self(w)


@dataclass
class RadialProfile:
    """Radial kernel k sampled on a distance grid d in [0, d_max].

    ``omega = sinh^2(d/2)`` is the Abel variable, ``t = 2 omega`` the
    t-coordinate. ``direct`` evaluates k at arbitrary distances (the Abel
    integral itself) and is used for quadrature; ``__call__`` interpolates.
    """

    d: np.ndarray
    values: np.ndarray
    d_max: float
    direct: Optional[Callable[[np.ndarray], np.ndarray]] = None
    error_estimate: float = 0.0
    _spline: object = field(default=None, repr=False, compare=False)

    @property
    def omega(self):
        return np.sinh(self.d / 2) ** 2

    @property
    def t(self):
        return 2 * self.omega

    @property
    def t_max(self) -> float:
        return 2 * math.sinh(self.d_max / 2) ** 2

    def __call__(self, d):
        d = np.abs(np.asarray(d, dtype=float))
        if self._spline is None:
            self._spline = make_interp_spline(self.d, self.values, k=5)
        out = np.zeros(d.shape)
        inside = d <= self.d_max
        out[inside] = self._spline(d[inside])
        return out

    def at_t(self, t):
        """k as a function of the t-coordinate 2 sinh^2(d/2)."""
        t = np.asarray(t, dtype=float)
        return self(2 * np.arcsinh(np.sqrt(np.maximum(t, 0.0) / 2)))

    def evaluate(self, d):
        if self.direct is not None:
            return self.direct(np.abs(np.asarray(d, dtype=float)))
        return self(d)

    def norm_sq(self, panels: int = 64) -> float:
        """Spatial ||k||^2 = 2 pi int_0^d_max k(d)^2 sinh d dd."""
        x, w = gauss_legendre(0.0, self.d_max, panels)
        return float(2 * math.pi * np.sum(w * self.evaluate(x) ** 2 * np.sinh(x)))


# --------------------------------------------------------------------------
# h <-> g
# --------------------------------------------------------------------------

def _cos_transform(func, s, upper, rtol, max_doublings, scale=2.0):
    """scale * int_0^upper cos(s u) func(u) du for every s, refined until stable."""
    s = np.asarray(s, dtype=float)
    smax = float(np.max(np.abs(s))) if s.size else 0.0
    panels = oscillation_panels(upper, smax, per_panel=1.0, minimum=8)
    prev = None
    err = math.inf
    for _ in range(max_doublings):
        u, w = gauss_legendre(0.0, upper, panels)
        fu = func(u) * w
        cur = np.empty(s.shape)
        step = max(1, 2 ** 22 // max(u.size, 1))
        for i in range(0, s.size, step):
            cur[i:i + step] = scale * (np.cos(np.outer(s[i:i + step], u)) @ fu)
        if prev is not None:
            err = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
            # |h| <= ||g||_1 everywhere, so that is the natural scale
            ref = max(float(np.max(np.abs(cur))) if cur.size else 0.0, scale * float(np.sum(np.abs(fu))))
            if err <= rtol * ref or ref == 0.0:
                return cur, err
        prev = cur
        panels *= 2
    raise PrecisionError(
        f"cosine transform did not converge to rtol={rtol}", estimate=err
    )


def h_from_g(g: FourierSide, s_grid, rtol: float = 1e-13, max_doublings: int = 8) -> SpectralFunction:
    """h(s) = int_{-tau}^{tau} e^{isu} g(u) du = 2 int_0^tau cos(su) g(u) du.

    Composite Gauss-Legendre, panel count doubled until two successive
    estimates agree to ``rtol`` relative to max(max|h|, ||g||_1).
    """
    s_grid = np.asarray(s_grid, dtype=float)
    vals, err = _cos_transform(g, s_grid, g.support, rtol, max_doublings)

    def exact(s, _g=g):
        return _cos_transform(_g, np.atleast_1d(s), _g.support, rtol, max_doublings)[0].reshape(np.shape(s))

    return SpectralFunction(s_grid, vals, exact=exact, error_estimate=err)


def g_from_h(h: SpectralFunction, support: Optional[float] = None, rtol: float = 1e-12,
             negligible: float = 1e-12, u_limit: float = 40.0) -> FourierSide:
    """g(u) = (1/2pi) int e^{-isu} h(s) ds = (1/pi) int_0^inf cos(su) h(s) ds.

    h must be negligible at the end of its grid or carry an integrable tail
    model (exponent > 1). The s-panels resolve cos(su) for |u| up to the
    support (or ``u_limit`` while the support is being estimated).
    """
    top = float(np.max(np.abs(h.values))) if h.values.size else 0.0
    end = abs(float(h.evaluate(np.array([h.s_max]))[0]))
    if top > 0 and end > negligible * top:
        if h.tail_exponent is None:
            raise TailModelRequired(
                f"|h(s_max)| = {end:.3e} is not negligible; supply tail_exponent/tail_amplitude"
            )
        if h.tail_exponent <= 1:
            raise TailModelRequired("tail exponent must exceed 1 for an integrable tail")
    s_hi = h.s_max
    u_top = support if support is not None else u_limit
    ds = min(2.0, 8.0 / max(u_top, 1e-3))
    breaks = np.linspace(0.0, s_hi, max(8, int(np.ceil(s_hi / ds))) + 1)
    if top == 0.0:
        return FourierSide(lambda u: np.zeros(np.shape(u)), support or 0.0,
                           lambda u: np.zeros(np.shape(u)))

    def build(refine):
        sn, sw = gauss_legendre_breaks(np.linspace(0.0, s_hi, (len(breaks) - 1) * refine + 1), order=16)
        hv = h.evaluate(sn) * sw / math.pi
        return sn, hv

    sn, hw = build(1)

    def func(u, sn=sn, hw=hw):
        u = np.asarray(u, dtype=float)
        out = np.empty(u.shape)
        flat = u.ravel()
        res = np.empty(flat.shape)
        for i in range(0, flat.size, 2048):
            res[i:i + 2048] = np.cos(np.outer(flat[i:i + 2048], sn)) @ hw
        out[...] = res.reshape(u.shape)
        return out

    def deriv(u, sn=sn, hw=hw):
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        res = np.empty(flat.shape)
        for i in range(0, flat.size, 2048):
            res[i:i + 2048] = -np.sin(np.outer(flat[i:i + 2048], sn)) @ (hw * sn)
        return res.reshape(u.shape)

    probe = np.linspace(0.0, u_top, 64)
    sn2, hw2 = build(2)
    ref = func(probe, sn2, hw2)
    err = float(np.max(np.abs(func(probe) - ref)))
    if err > rtol * max(float(np.max(np.abs(ref))), 1e-300):
        raise PrecisionError(f"inverse transform unstable under refinement ({err:.2e})", estimate=err)
    if support is None:
        support = _estimate_support(func, s_hi, u_limit)
    return FourierSide(func, support, deriv)


def _estimate_support(func, s_hi, u_limit=40.0, rel=1e-15):
    step = math.pi / (4 * max(s_hi, 1.0))
    u = np.arange(0.0, u_limit, step)
    vals = np.abs(func(u))
    top = vals.max()
    if top == 0:
        return 0.0
    big = np.nonzero(vals > rel * top)[0]
    return float(u[big[-1]] + 10 * step) if big.size else float(step)


# --------------------------------------------------------------------------
# g -> Q -> k
# --------------------------------------------------------------------------

def q_from_g(g: FourierSide) -> QFunction:
    """Q(w) = g(2 arcsinh sqrt w) / 2; support w <= sinh^2(tau/2)."""

    def q(w):
        return 0.5 * g(2 * np.arcsinh(np.sqrt(np.maximum(w, 0.0))))

    def dq(w):
        w = np.maximum(w, 1e-300)
        # dQ/dw = g'(u) / (2 sqrt(w (1 + w))), u = 2 arcsinh sqrt w
        return g.deriv(2 * np.arcsinh(np.sqrt(w))) / (2 * np.sqrt(w * (1 + w)))

    return QFunction(q, dq, math.sinh(g.support / 2) ** 2, g)


def k_at_omega(q: QFunction, omega, panels: int = 64):
    """k(w) = -(1/pi) int_w^inf Q'(v) / sqrt(v - w) dv at Abel-variable points w."""
    return _abel(q, omega, panels)


def _abel(q: QFunction, omega, panels: int):
    """k(w) = -(2/pi) int_0^{sqrt(wmax - w)} Q'(w + v^2) dv; v = sqrt(omega - w) removes the root."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    wmax = q.omega_max
    out = np.zeros(omega.shape)
    x, wts = gauss_legendre(0.0, 1.0, panels)
    for i, w0 in enumerate(omega):
        if w0 >= wmax:
            continue
        V = math.sqrt(wmax - w0)
        v = V * x
        out[i] = -(2.0 / math.pi) * V * np.sum(wts * q.derivative(w0 + v * v))
    return out


def k_from_q(q: QFunction, d_grid=None, n: int = 401, panels: int = 32, tol: float = 1e-9) -> RadialProfile:
    """Radial kernel from Q by the Abel integral.

    Evaluated at two resolutions; a disagreement above ``tol`` relative to
    max|k| (typically a Q that is not smooth at its support edge) triggers a
    warning carrying the estimate.
    """
    d_max = q.d_max
    if d_grid is None:
        d_grid = np.linspace(0.0, d_max, n)
    d_grid = np.asarray(d_grid, dtype=float)
    omega = np.sinh(d_grid / 2) ** 2
    coarse = _abel(q, omega, panels)
    fine = _abel(q, omega, 2 * panels)
    scale = float(np.max(np.abs(fine))) if fine.size else 0.0
    err = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
    if scale > 0 and err > tol * scale:
        warnings.warn(f"Abel integral resolution estimate {err:.2e} exceeds {tol:g} * max|k|",
                      RuntimeWarning, stacklevel=2)

    def direct(d, _q=q, _p=2 * panels):
        d = np.asarray(d, dtype=float)
        return _abel(_q, np.sinh(d.ravel() / 2) ** 2, _p).reshape(d.shape)

    return RadialProfile(d_grid, fine, d_max, direct=direct, error_estimate=err)


# --------------------------------------------------------------------------
# k -> h (Helgason)
# --------------------------------------------------------------------------

def h_from_k_forward(k: RadialProfile, s_grid, boundary_angle: float = 0.0,
                     radial_panels: int = 24, angle_factor: float = 1.0,
                     cutoff: float = 1e-15) -> SpectralFunction:
    """h(s) = int_H e^{(-is+1/2)<z,b>} k(z) dz as a 2-D quadrature.

    Geodesic polar coordinates (d, alpha) about i, dz = sinh d dd dalpha, and
    e^{<z,b>} = 1 / (cosh d - sinh d cos(alpha - beta)). Gauss-Legendre in d,
    trapezoid in alpha with a node count adapted to each radius.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    smax = float(np.max(np.abs(s_grid))) if s_grid.size else 0.0
    d_nodes, d_w = gauss_legendre(0.0, k.d_max, radial_panels)
    kv = k.evaluate(d_nodes)
    weight = kv * np.sinh(d_nodes) * d_w
    scale = np.max(np.abs(weight) * np.exp(d_nodes / 2)) if weight.size else 0.0
    acc = np.zeros(s_grid.shape, dtype=complex)
    expo = (-1j * s_grid + 0.5)
    diffs = np.diff(s_grid)
    uniform = s_grid.ndim == 1 and s_grid.size > 2 and np.allclose(diffs, diffs[0], rtol=1e-12, atol=0)
    ds = float(diffs[0]) if uniform else 0.0
    for d, wgt in zip(d_nodes, weight):
        if scale == 0 or abs(wgt) * math.exp(d / 2) < cutoff * scale:
            continue
        # analytic in alpha; nearest complex singularity ~ e^{-d}, phase range ~ 2 s d
        m = int(angle_factor * (64 + 12 * math.exp(d) + 4 * smax * d))
        m = 1 << max(6, int(math.ceil(math.log2(m))))
        alpha = 2 * math.pi * np.arange(m) / m
        base = math.cosh(d) - math.sinh(d) * np.cos(alpha - boundary_angle)
        logb = -np.log(base)                       # <z, b>
        if uniform:
            # e^{(1/2 - i s_j) <z,b>} for s_j = s_0 + j ds by repeated multiplication
            term = np.exp(expo[0] * logb)
            step = np.exp(-1j * ds * logb)
            vals = np.empty(s_grid.size, dtype=complex)
            for j in range(s_grid.size):
                vals[j] = term.mean()
                term *= step
            vals *= 2 * math.pi
        else:
            vals = np.exp(np.outer(expo, logb)).mean(axis=1) * 2 * math.pi
        acc += wgt * vals
    return SpectralFunction(s_grid, acc.real, error_estimate=float(np.max(np.abs(acc.imag))) if acc.size else 0.0)


# --------------------------------------------------------------------------
# Plancherel
# --------------------------------------------------------------------------

def plancherel_norm(h: SpectralFunction, tol: float = 1e-8, panels_per_unit: float = 2.0) -> float:
    """||k||^2 on H from the spectral side: (1/2pi) int_0^inf h^2 s tanh(pi s) ds.

    The tail beyond the grid is bounded with the tail model and must stay
    below ``tol`` relative to the result.
    """
    top = float(np.max(np.abs(h.values))) if h.values.size else 0.0
    if top == 0.0:
        return 0.0
    panels = max(8, int(np.ceil(h.s_max * panels_per_unit)))
    s, w = gauss_legendre(0.0, h.s_max, panels)
    hv = h(s)
    val = SPECTRAL_DENSITY * float(np.sum(w * hv * hv * s * np.tanh(math.pi * s)))
    tail = 0.0
    if h.tail_exponent is not None and h.tail_amplitude > 0:
        p = 2 * h.tail_exponent - 1
        if p <= 1:
            raise PrecisionError("tail model does not make h^2 s integrable")
        tail = SPECTRAL_DENSITY * h.tail_amplitude ** 2 * h.s_max ** (1 - p) / (p - 1)
    if val > 0 and tail > tol * val:
        raise PrecisionError(f"Plancherel tail {tail:.2e} exceeds tolerance", estimate=tail)
    return val


def spherical_function(s, d, n_alpha: int = 512):
    """P_{-1/2+is}(cosh d) = (1/2pi) int (cosh d - sinh d cos a)^{is - 1/2} da."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    alpha = 2 * math.pi * np.arange(n_alpha) / n_alpha
    base = np.log(math.cosh(d) - math.sinh(d) * np.cos(alpha))
    return np.exp(np.outer(1j * s - 0.5, base)).mean(axis=1).real


def k_from_h_spectral(h: SpectralFunction, d, panels_per_unit: float = 4.0):
    """Spectral inversion k(d) = (1/2pi) int_0^inf P_{-1/2+is}(cosh d) h s tanh ds (oracle path)."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    s, w = gauss_legendre(0.0, h.s_max, max(8, int(np.ceil(h.s_max * panels_per_unit))))
    f = h(s) * s * np.tanh(math.pi * s) * w
    out = np.empty(d.shape)
    for i, di in enumerate(d):
        n_alpha = 1 << max(7, int(math.ceil(math.log2(64 + 4 * h.s_max * di + 12 * math.exp(di)))))
        out[i] = SPECTRAL_DENSITY * np.dot(spherical_function(s, di, n_alpha), f)
    return out


# --------------------------------------------------------------------------
# reference pair and calibration
# --------------------------------------------------------------------------

def gaussian_g(cut: float = 8.0) -> FourierSide:
    """g(u) = e^{-u^2/2} / sqrt(2 pi) truncated at |u| = cut; its transform is e^{-s^2/2}."""
    c = 1.0 / math.sqrt(2 * math.pi)
    return FourierSide(lambda u: c * np.exp(-0.5 * u * u), cut,
                       lambda u: -c * u * np.exp(-0.5 * u * u))


def gaussian_h(s_max: float = 12.0, n: int = 481) -> SpectralFunction:
    s = np.linspace(0.0, s_max, n)
    return SpectralFunction(s, np.exp(-0.5 * s * s), exact=lambda x: np.exp(-0.5 * np.asarray(x) ** 2))


def calibrate_conventions(cut: float = 8.0) -> dict:
    """Re-derive the Plancherel density from the Gaussian pair.

    Returns the measured ratio spatial ||k||^2 / int h^2 s tanh(pi s) ds,
    which should equal SPECTRAL_DENSITY.
    """
    g = gaussian_g(cut)
    k = k_from_q(q_from_g(g), n=161, panels=48)
    spatial = k.norm_sq(panels=96)
    h = gaussian_h()
    spectral = plancherel_norm(h) / SPECTRAL_DENSITY
    ratio = spatial / spectral
    return {"spatial": spatial, "spectral_integral": spectral, "density": ratio,
            "expected": SPECTRAL_DENSITY, "rel_error": abs(ratio / SPECTRAL_DENSITY - 1)}


def write_table(path, columns: dict) -> None:
    """CSV with one named column per key; all columns must share a length."""
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*data):
            w.writerow([repr(float(v)) for v in row])
