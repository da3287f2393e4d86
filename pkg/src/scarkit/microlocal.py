"""The microlocal kernel kappa and its localization near the radial tube.

kappa is evaluated with the s- and theta-integrals exchanged:

    G(x)     = int_0^inf e^{isx} h(s) s tanh(pi s) ds
    E(g)     = (1/2pi) e^{-phi(g)/2} G(phi(g))
    kappa(g) = w0 (1/2pi) int_0^{2pi} E(g k_theta) F_L(2 theta) dtheta

with w0 = sqrt(3L / (2L^2 + 1)) and F_L the Fejer kernel. F_L(2 theta) has
Fourier coefficients (L - |n|)/L on e^{2 i n theta}, i.e. on the weight-2n
components, which is what makes ||kappa|| match ||k||. The integrand has
period pi in theta.

G is tabulated once on a uniform x-grid after removing the carrier e^{irx}
and interpolated with 4-point Lagrange polynomials. Splitting the s-integral
at eta r gives G_low and G_high, hence kappa_1 and kappa_2.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import GridConfig, SpectralConfig
from .errors import ConfigError, ResolutionError
from .geometry import phi_a_n_rot, phi_theta_derivative_tu, u_extent
from .quadrature import gauss_legendre, gauss_legendre_breaks
from .transforms import SPECTRAL_DENSITY, SpectralFunction


def thread_count() -> int:
    try:
        n = int(os.environ.get("SCARKIT_THREADS", "1"))
    except ValueError:
        raise ConfigError("SCARKIT_THREADS must be an integer")
    return max(1, n)


# --------------------------------------------------------------------------
# Fejer kernel
# --------------------------------------------------------------------------

def fejer(L: int, theta):
    """F_L(theta) = (1/L) (sin(L theta/2) / sin(theta/2))^2, equal to L at theta = 0 mod 2pi."""
    if L < 1:
        raise ConfigError("Fejer order must be at least 1")
    theta = np.asarray(theta, dtype=float)
    den = np.sin(theta / 2)
    small = np.abs(den) < 1e-12
    safe = np.where(small, 1.0, den)
    out = (np.sin(L * theta / 2) / safe) ** 2 / L
    return np.where(small, float(L), out)


def fejer_tail(L: int, a: float, n: int = 1 << 16) -> float:
    """int_{a <= |theta| <= pi} F_L by trapezoid on a fine periodic grid."""
    theta = -math.pi + 2 * math.pi * np.arange(n) / n
    f = fejer(L, theta)
    return float(np.sum(f[np.abs(theta) >= a]) * 2 * math.pi / n)


# --------------------------------------------------------------------------
# spectral profile
# --------------------------------------------------------------------------

def spectral_weight(h: SpectralFunction, s):
    s = np.asarray(s, dtype=float)
    return h.evaluate(s) * s * np.tanh(math.pi * s)


def low_frequency_mass(h: SpectralFunction, upper: float, s_hi: float | None = None) -> float:
    """(1/2pi) int_0^upper h^2 s tanh(pi s) ds, the share of ||k||^2 below ``upper``."""
    if upper <= 0:
        return 0.0
    s, w = gauss_legendre(0.0, upper, max(8, int(np.ceil(upper / 0.5))))
    hv = h.evaluate(s)
    return SPECTRAL_DENSITY * float(np.sum(w * hv * hv * s * np.tanh(math.pi * s)))


def choose_eta(h: SpectralFunction, cfg: SpectralConfig, candidates=(0.5, 0.6, 0.7, 0.8),
               budget: float = 1e-3) -> dict:
    """Largest eta whose low-frequency share of ||k||^2 is at most ``budget``."""
    s_hi = spectral_extent(h, cfg)
    total = low_frequency_mass(h, s_hi)
    rows = []
    best = None
    for eta in sorted(candidates):
        share = low_frequency_mass(h, eta * cfg.r) / total if total else 0.0
        ok = share <= budget
        rows.append({"eta": eta, "share": share, "pass": ok})
        if ok:
            best = eta
    return {"eta": best, "rows": rows, "budget": budget, "total": total}


def spectral_extent(h: SpectralFunction, cfg: SpectralConfig) -> float:
    """Upper s-limit used for every integral over h: four times r + 40C."""
    return 4 * cfg.s_max


def _s_nodes(cfg: SpectralConfig, lo: float, hi: float, step: float):
    pts = {lo, hi}
    for off in (-8 * cfg.C, -cfg.C, 0.0, cfg.C, 8 * cfg.C):
        if lo < cfg.r + off < hi:
            pts.add(cfg.r + off)
    pts = sorted(pts)
    breaks = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil((b - a) / step)))
        breaks.extend(np.linspace(a, b, n + 1)[1:])
    return gauss_legendre_breaks(np.asarray(breaks), order=16)


@dataclass
class SpectralProfile:
    """Tables of the demodulated profiles D(x) = e^{-i r x} G(x) on a uniform grid.

    ``low`` integrates s <= eta r, ``high`` s > eta r; G = G_low + G_high.
    """

    x0: float
    dx: float
    carrier: float
    low: np.ndarray
    high: np.ndarray
    eta: float
    s_split: float
    s_hi: float
    interp_error: float = 0.0
    resolution_change: float = 0.0
    _nodes: tuple = field(default=None, repr=False)

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.low.size)

    @property
    def x_max(self) -> float:
        return self.x0 + self.dx * (self.low.size - 1)

    def _interp(self, x, tables):
        x = np.asarray(x, dtype=float)
        p = (x - self.x0) / self.dx
        i = np.floor(p).astype(np.intp)
        n = self.low.size
        if np.any(i < 1) or np.any(i > n - 3):
            raise ResolutionError("profile evaluated outside its x-range; widen the margin")
        f = p - i
        # 4-point Lagrange on nodes i-1, i, i+1, i+2
        c0 = -f * (f - 1) * (f - 2) / 6
        c1 = (f + 1) * (f - 1) * (f - 2) / 2
        c2 = -(f + 1) * f * (f - 2) / 2
        c3 = (f + 1) * f * (f - 1) / 6
        carrier = np.exp(1j * self.carrier * x)
        out = []
        for t in tables:
            out.append(carrier * (c0 * t[i - 1] + c1 * t[i] + c2 * t[i + 1] + c3 * t[i + 2]))
        return out

    def G(self, x):
        lo, hi = self._interp(x, (self.low, self.high))
        return lo + hi

    def G_parts(self, x):
        return tuple(self._interp(x, (self.low, self.high)))

    def G_direct(self, x, part: str = "full"):
        """Direct quadrature of the s-integral (reference path)."""
        s, w = self._nodes
        x = np.atleast_1d(np.asarray(x, dtype=float))
        sel = np.ones(s.size, bool)
        if part == "low":
            sel = s <= self.s_split
        elif part == "high":
            sel = s > self.s_split
        return _profile_sum(x, s[sel], w[sel])


def _profile_sum(x, s, w, chunk: int = 1 << 22):
    out = np.empty(x.shape, dtype=complex)
    step = max(1, chunk // max(s.size, 1))
    for i in range(0, x.size, step):
        out[i:i + step] = np.exp(1j * np.outer(x[i:i + step], s)) @ w
    return out


def _uniform_profile(x0, dx, n, freq, w, anchor: int = 64):
    """sum_k w_k e^{i freq_k (x0 + j dx)} for j < n by a phase recurrence,
    re-anchored with exact exponentials every ``anchor`` rows."""
    out = np.empty(n, dtype=complex)
    step = np.exp(1j * dx * freq)
    for j0 in range(0, n, anchor):
        row = np.exp(1j * (x0 + j0 * dx) * freq) * w
        for j in range(j0, min(n, j0 + anchor)):
            out[j] = row.sum()
            row *= step
    return out


def build_profile(h: SpectralFunction, cfg: SpectralConfig, eta: float | None = None,
                  x_range: float | None = None, margin: float = 0.05,
                  dx: float | None = None, s_step: float = 0.5,
                  tol: float = 1e-5, check: bool = True) -> SpectralProfile:
    """Tabulate G_low and G_high over |x| <= x_range + margin.

    The default x_range is tau, which bounds |phi| on B(0, tau)K. The table
    step defaults to pi / (8 s_max) / 4; after demodulation that leaves
    about 30 samples per period of the fastest significant component.
    """
    eta = cfg.eta if eta is None else eta
    if x_range is None:
        x_range = cfg.tau
    if dx is None:
        dx = math.pi / (8 * cfg.s_max) / 4
    s_hi = spectral_extent(h, cfg)
    split = eta * cfg.r
    s, w = _s_nodes(cfg, 0.0, s_hi, s_step)
    weight = spectral_weight(h, s) * w
    n = int(np.ceil(2 * (x_range + margin) / dx)) + 1
    x = -(x_range + margin) + dx * np.arange(n)
    low_sel = s <= split
    low = _uniform_profile(x[0], dx, n, s[low_sel] - cfg.r, weight[low_sel])
    high = _uniform_profile(x[0], dx, n, s[~low_sel] - cfg.r, weight[~low_sel])
    prof = SpectralProfile(float(x[0]), dx, cfg.r, low, high, eta, split, s_hi,
                           _nodes=(s, weight))
    if check:
        rng = np.random.default_rng(12345)
        probe = rng.uniform(-x_range, x_range, 256)
        direct = prof.G_direct(probe)
        scale = float(np.max(np.abs(prof.G(x[2:-3]))))
        prof.interp_error = float(np.max(np.abs(prof.G(probe) - direct)))
        if prof.interp_error > tol * scale:
            raise ResolutionError(
                f"profile interpolation error {prof.interp_error:.2e} exceeds {tol:g} max|G|; reduce dx"
            )
        s2, w2 = _s_nodes(cfg, 0.0, s_hi, s_step / 2)
        fine = _profile_sum(probe, s2, spectral_weight(h, s2) * w2)
        prof.resolution_change = float(np.max(np.abs(fine - direct)) / scale)
    return prof


# --------------------------------------------------------------------------
# kappa
# --------------------------------------------------------------------------

def phase_rate_bound(tau: float, u_max: float | None = None, n: int = 33, n_theta: int = 256) -> float:
    """Coarse scan of sup |d phi / d theta| over |t| <= tau, |u| <= u_max, all theta."""
    if u_max is None:
        u_max = u_extent(tau)
    t = np.linspace(-tau, tau, n)
    u = np.linspace(0.0, u_max, n)
    th = np.pi * np.arange(n_theta) / n_theta
    T, U, TH = np.meshgrid(t, u, th, indexing="ij")
    return float(np.max(np.abs(phi_theta_derivative_tu(T, U, TH))))


def theta_count(cfg: SpectralConfig, oversample: float = 16.0, rate: float | None = None) -> int:
    """Trapezoid nodes on [0, pi): half of max(64 L, oversample * s_max * sup|phi'|), even."""
    if rate is None:
        rate = phase_rate_bound(cfg.tau)
    full = max(64 * cfg.L, int(math.ceil(oversample * cfg.s_max * rate)))
    half = int(math.ceil(full / 2))
    return half + (half % 2)


class KappaEvaluator:
    """Evaluates kappa, kappa_1, kappa_2 at points a(t) n(u) (left-K invariance
    makes theta of g irrelevant)."""

    def __init__(self, profile: SpectralProfile, cfg: SpectralConfig, n_theta: int | None = None,
                 oversample: float = 16.0):
        self.profile = profile
        self.cfg = cfg
        self.n_theta = n_theta or theta_count(cfg, oversample)
        th = math.pi * np.arange(self.n_theta) / self.n_theta
        self.cos, self.sin = np.cos(th), np.sin(th)
        # prefactor, 1/2pi from E, and the theta mean folded in one weight vector
        self.weights = cfg.prefactor * fejer(cfg.L, 2 * th) / (2 * math.pi) / self.n_theta

    def parts(self, t, u, chunk: int = 128):
        """(kappa_1, kappa_2) at arrays t, u."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = np.atleast_1d(np.asarray(u, dtype=float))
        t, u = np.broadcast_arrays(t, u)
        shape = t.shape
        t, u = t.ravel(), u.ravel()
        k1 = np.empty(t.size, complex)
        k2 = np.empty(t.size, complex)
        for i in range(0, t.size, chunk):
            tt = t[i:i + chunk, None]
            uu = u[i:i + chunk, None]
            et = np.exp(tt)
            a = self.cos + uu * self.sin
            phi = np.log(et * a * a + self.sin * self.sin / et)
            lo, hi = self.profile.G_parts(phi)
            damp = np.exp(-0.5 * phi) * self.weights
            k1[i:i + chunk] = (lo * damp).sum(axis=1)
            k2[i:i + chunk] = (hi * damp).sum(axis=1)
        return k1.reshape(shape), k2.reshape(shape)

    def __call__(self, t, u):
        k1, k2 = self.parts(t, u)
        return k1 + k2


def eval_kappa(g, profile: SpectralProfile, cfg: SpectralConfig, part: str = "full",
               n_theta: int | None = None, check: bool = False, tol: float = 1e-5):
    """kappa(g) (or kappa_1 / kappa_2 with part='low' / 'high').

    With ``check`` the theta-grid is doubled and the two values must agree to
    ``tol`` relative, otherwise ResolutionError.
    """
    from .geometry import iwasawa

    _, t, u = iwasawa(g)
    ev = KappaEvaluator(profile, cfg, n_theta=n_theta)
    k1, k2 = ev.parts(t, u)
    val = {"full": k1 + k2, "low": k1, "high": k2}[part][0]
    if check:
        ev2 = KappaEvaluator(profile, cfg, n_theta=2 * ev.n_theta)
        a1, a2 = ev2.parts(t, u)
        val2 = {"full": a1 + a2, "low": a1, "high": a2}[part][0]
        if abs(val2 - val) > tol * max(abs(val2), 1e-300):
            raise ResolutionError(f"theta-grid doubling changed kappa by {abs(val2 - val):.2e}")
    return complex(val)


def kappa_direct(t: float, u: float, h: SpectralFunction, cfg: SpectralConfig,
                 n_theta: int | None = None, s_step: float = 0.25) -> complex:
    """Oracle: 2-D quadrature in (s, theta) without the tabulated profile."""
    n_theta = n_theta or theta_count(cfg)
    th = math.pi * (np.arange(n_theta) + 0.5) / n_theta      # offset grid, independent nodes
    phi = phi_a_n_rot(t, u, th)
    s, w = _s_nodes(cfg, 0.0, spectral_extent(h, cfg), s_step)
    sw = spectral_weight(h, s) * w
    fw = cfg.prefactor * fejer(cfg.L, 2 * th) / (2 * math.pi) / n_theta * np.exp(-0.5 * phi)
    total = 0.0 + 0.0j
    step = max(1, (1 << 21) // s.size)
    for i in range(0, th.size, step):
        total += fw[i:i + step] @ (np.exp(1j * np.outer(phi[i:i + step], s)) @ sw)
    return complex(total)


# --------------------------------------------------------------------------
# field on the (t, u) grid
# --------------------------------------------------------------------------

def row_half_width(t, tau: float):
    """Largest |u| with a(t) n(u) . i inside B(i, tau)."""
    t = np.asarray(t, dtype=float)
    et = np.exp(t)
    val = 2 * et * (math.cosh(tau) - 1) - (et - 1) ** 2
    return np.sqrt(np.maximum(val, 0.0)) / et


@dataclass
class MicrolocalField:
    """kappa_1, kappa_2 on quadrature nodes covering B(0, tau)K.

    Nodes carry u >= 0 only; the mirror u -> -u leaves kappa unchanged, so
    every weight already counts both halves. ``weight`` includes the Haar
    density e^t (the K fibre has volume 1).
    """

    cfg: SpectralConfig
    t: np.ndarray
    u: np.ndarray
    weight: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    breaks: np.ndarray
    n_theta: int

    @property
    def kappa(self):
        return self.kappa1 + self.kappa2

    def mass(self, values=None, mask=None) -> float:
        v = np.abs(self.kappa if values is None else values) ** 2 * self.weight
        if mask is not None:
            v = v[mask]
        return float(np.sum(np.sort(v)))

    @property
    def total_mass(self) -> float:
        return self.mass()

    def spacing_near(self, u0: float) -> float:
        """Width of the u-panel containing u0 (largest over rows)."""
        j = np.searchsorted(self.breaks, u0)
        if j <= 0 or j >= self.breaks.size:
            return math.inf
        return float(self.breaks[j] - self.breaks[j - 1])

    def volume(self, mask=None) -> float:
        w = self.weight if mask is None else self.weight[mask]
        return float(np.sum(w))


def _u_breaks(tau: float, n_panels: int, extra=()):
    top = u_extent(tau)
    b = np.geomspace(1e-3 * top, top, n_panels)
    b = np.concatenate([[0.0], b, [x for x in extra if 0 < x < top]])
    return np.unique(b)


def build_field(profile: SpectralProfile, cfg: SpectralConfig, grid: GridConfig | None = None,
                cut_points=(), n_theta: int | None = None, threads: int | None = None) -> MicrolocalField:
    """Evaluate kappa on Gauss nodes: ``grid.n_t`` in t over [-tau, tau] and
    ``grid.n_u / 2`` per row in u over [0, U(t)] on geometric panels.

    ``cut_points`` (tube half-widths) are inserted as panel breaks so masses
    over the tube and its complement are exact quadratures.
    """
    grid = grid or GridConfig()
    tau = cfg.tau
    order_t = 16 if grid.n_t % 16 == 0 else 8
    tn, tw = gauss_legendre(-tau, tau, max(1, grid.n_t // order_t), order=order_t)
    order_u = 4
    half = max(order_u, grid.n_u // 2)
    breaks = _u_breaks(tau, half // order_u, cut_points)
    T, U, W = [], [], []
    for t_i, w_i in zip(tn, tw):
        Ut = float(row_half_width(t_i, tau))
        if Ut <= 0:
            continue
        b = breaks[breaks < Ut]
        b = np.append(b, Ut)
        un, uw = gauss_legendre_breaks(b, order=order_u)
        T.append(np.full(un.size, t_i))
        U.append(un)
        W.append(2.0 * uw * w_i * math.exp(t_i))
    t = np.concatenate(T)
    u = np.concatenate(U)
    w = np.concatenate(W)
    ev = KappaEvaluator(profile, cfg, n_theta=n_theta, oversample=grid.theta_oversample)
    threads = threads or thread_count()
    chunks = np.array_split(np.arange(t.size), max(1, threads * 4))
    k1 = np.empty(t.size, complex)
    k2 = np.empty(t.size, complex)

    def work(idx):
        a, b = ev.parts(t[idx], u[idx])
        k1[idx] = a
        k2[idx] = b

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, chunks))
    else:
        for idx in chunks:
            work(idx)
    return MicrolocalField(cfg, t, u, w, k1, k2, breaks, ev.n_theta)


# --------------------------------------------------------------------------
# mass statistics
# --------------------------------------------------------------------------

@dataclass
class MassSplit:
    N: float
    u_cut: float
    inside: float
    outside: float
    total: float

    @property
    def fraction(self) -> float:
        return self.outside / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {"N": self.N, "u_cut": self.u_cut, "inside": self.inside,
                "outside": self.outside, "total": self.total, "fraction": self.fraction}


def outside_mass(field: MicrolocalField, N: float, check: bool = True) -> MassSplit:
    """Mass of |kappa|^2 over B(0,tau)K outside the tube |u| <= N c^{-1} r^{-1/2}."""
    u_cut = field.cfg.u_cut(N)
    if check and u_cut < u_extent(field.cfg.tau):
        if field.spacing_near(u_cut) > u_cut / 8:
            raise ResolutionError(
                f"u-panels near u_cut={u_cut:.3g} are coarser than u_cut/8; increase n_u or pass cut_points"
            )
    out_mask = field.u > u_cut
    total = field.total_mass
    outside = field.mass(mask=out_mask)
    inside = field.mass(mask=~out_mask)
    return MassSplit(float(N), u_cut, inside, outside, total)


def liouville_fraction(field: MicrolocalField, N: float) -> float:
    """Haar volume of the tube over the Haar volume of B(0,tau)K."""
    mask = field.u <= field.cfg.u_cut(N)
    return field.volume(mask) / field.volume()


def loglog_slope(N_values, fractions) -> float | None:
    N = np.asarray(N_values, float)
    f = np.asarray(fractions, float)
    keep = f > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(N[keep]), np.log(f[keep]), 1)[0])


def calibrate_N(field: MicrolocalField, N_sweep, target_fraction: float) -> dict:
    """Smallest N in the sweep whose outside fraction is at most the target.

    Never raises for an unreachable target; ``N_star`` is then None.
    """
    if not 0 < target_fraction <= 1:
        raise ConfigError("target_fraction must lie in (0, 1]")
    rows = [outside_mass(field, N) for N in sorted(N_sweep)]
    n_star = next((r.N for r in rows if r.fraction <= target_fraction), None)
    fr = [r.fraction for r in rows]
    return {
        "target_fraction": target_fraction,
        "N_star": n_star,
        "calibrated": n_star is not None,
        "sweep": [r.to_dict() for r in rows],
        "monotone": bool(all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(fr, fr[1:]))),
        "slope": loglog_slope([r.N for r in rows], fr),
    }


@dataclass
class SplitReport:
    eta: float
    kappa1_norm: float
    low_bound: float
    consistency: float
    K2: dict

    @property
    def ratio(self) -> float:
        return self.kappa1_norm / self.low_bound if self.low_bound else math.inf

    def to_dict(self) -> dict:
        return {"eta": self.eta, "kappa1_norm_sq": self.kappa1_norm,
                "low_frequency_bound": self.low_bound, "ratio": self.ratio,
                "pass": self.ratio <= 1, "consistency": self.consistency,
                "K2": {str(k): v for k, v in self.K2.items()}}


def split_diagnostics(field: MicrolocalField, h: SpectralFunction, profile: SpectralProfile,
                      N_values=(0.125, 2.0)) -> SplitReport:
    """(a) ||kappa_1||^2 on the grid against (1/2pi) int_0^{eta r} h^2 s tanh;
    (b) K2(N) = sup_{|u| >= u_cut(N)} |kappa_2| |u| r^{1/4}."""
    cfg = field.cfg
    k1n = field.mass(field.kappa1)
    bound = low_frequency_mass(h, profile.s_split)
    cons = float(np.max(np.abs(field.kappa - (field.kappa1 + field.kappa2))))
    K2 = {}
    for N in N_values:
        sel = field.u >= cfg.u_cut(N)
        K2[float(N)] = float(np.max(np.abs(field.kappa2[sel]) * field.u[sel]) * cfg.r ** 0.25) if np.any(sel) else 0.0
    return SplitReport(profile.eta, k1n, bound, cons, K2)


# --------------------------------------------------------------------------
# non-stationary phase
# --------------------------------------------------------------------------

def _nsp_integral(t, u, s, m, N, n=4096):
    half = abs(u) * N ** -0.25
    th, w = gauss_legendre(-half, half, max(8, int(np.ceil(s * half * 4 / math.pi))), order=16)
    phi = phi_a_n_rot(t, u, th)
    return complex(np.sum(w * np.exp(1j * (s * phi + m * th) - 0.5 * phi)))


def nonstationary_phase_check(cfg: SpectralConfig, samples, N: float | None = None) -> dict:
    """|int_{|theta| <= |u| N^{-1/4}} e^{i(s phi + m theta)} e^{-phi/2} dtheta| <= K7 / (s |u|).

    ``samples`` holds (t, u, s, m). A sample is rejected (not asserted) unless
    s min|phi'| > 2|m| on its theta range; K7 is the largest s |u| |I| over the
    accepted samples.
    """
    N = cfg.N if N is None else N
    rows = []
    for t, u, s, m in samples:
        half = abs(u) * N ** -0.25
        th = np.linspace(-half, half, 201)
        rate = np.abs(phi_theta_derivative_tu(t, u, th))
        ok = bool(u != 0 and s * rate.min() > 2 * abs(m))
        row = {"t": t, "u": u, "s": s, "m": m, "accepted": ok}
        if ok:
            val = abs(_nsp_integral(t, u, s, m, N))
            row.update(integral=val, K7=val * s * abs(u))
        rows.append(row)
    acc = [r["K7"] for r in rows if r["accepted"]]
    return {"N": N, "rows": rows, "K7": max(acc) if acc else None,
            "accepted": len(acc), "rejected": len(rows) - len(acc)}


def nsp_scaling(cfg: SpectralConfig, t: float, u: float, s0: float, m: int = 0,
                N: float | None = None, band: float = 0.25, n: int = 64) -> dict:
    """RMS of the integral over s in [s0, (1+band) s0] versus [2 s0, 2 (1+band) s0].

    Two endpoint contributions interfere, so single-s values oscillate; the
    band RMS isolates the 1/s envelope. Returns the ratio (about 1/2).
    """
    N = cfg.N if N is None else N
    a = np.linspace(s0, (1 + band) * s0, n)
    rms1 = math.sqrt(np.mean([abs(_nsp_integral(t, u, s, m, N)) ** 2 for s in a]))
    rms2 = math.sqrt(np.mean([abs(_nsp_integral(t, u, 2 * s, m, N)) ** 2 for s in a]))
    return {"rms_s": rms1, "rms_2s": rms2, "ratio": rms2 / rms1 if rms1 else math.nan}
