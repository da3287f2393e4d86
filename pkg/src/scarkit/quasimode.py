"""Quasimodes concentrated at an extremal point of a spectral-window basis.

True eigenfunctions of a compact quotient are out of reach, so the default
basis is a surrogate: random superpositions of the plane waves

    (Im k_beta z)^{1/2 + i s} = (y / |z sin(beta) + cos(beta)|^2)^{1/2 + i s},

each an exact Laplace eigenfunction with eigenvalue 1/4 + s^2, restricted to
the square patch |x| <= tau, |y - 1| <= tau and orthonormalized in the patch
inner product dx dy / y^2. Orthonormalization mixes entries with different
s; the label s_l of the l-th entry is that of the l-th raw function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .config import SpectralConfig
from .errors import ConfigError, IngestionError, InterfaceError
from .quadrature import gauss_legendre

FORMAT_VERSION = 1


# --------------------------------------------------------------------------
# grid
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PatchGrid:
    x0: float
    y0: float
    dx: float
    dy: float
    nx: int
    ny: int

    @classmethod
    def square(cls, tau: float, n: int = 256) -> "PatchGrid":
        step = 2 * tau / (n - 1)
        return cls(-tau, 1 - tau, step, step, n, n)

    def validate(self) -> "PatchGrid":
        if not (self.nx >= 1 and self.ny >= 1):
            raise IngestionError("grid must have positive dimensions")
        if not (self.dx > 0 and self.dy > 0):
            raise IngestionError("grid spacing must be positive")
        if not self.y0 > 0:
            raise IngestionError("grid must lie in the upper half-plane (y0 > 0)")
        return self

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    def mesh(self):
        """(X, Y) of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights for dx dy / y^2, shape (ny, nx)."""
        wx = np.full(self.nx, self.dx)
        wy = np.full(self.ny, self.dy)
        if self.nx > 1:
            wx[[0, -1]] *= 0.5
        if self.ny > 1:
            wy[[0, -1]] *= 0.5
        return np.outer(wy / self.y ** 2, wx)

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def point(self, idx) -> complex:
        iy, ix = idx
        return complex(self.x0 + ix * self.dx, self.y0 + iy * self.dy)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "dx": self.dx, "dy": self.dy, "nx": self.nx, "ny": self.ny}


# --------------------------------------------------------------------------
# surrogate generator
# --------------------------------------------------------------------------

@dataclass
class PlaneWaveSurrogate:
    """Raw functions raw_k = sum_m a_km (Im k_{beta_km} z)^{1/2 + i s_k} and the
    mixing matrix M with phi_l = sum_k raw_k M[k, l]."""

    s: np.ndarray
    betas: np.ndarray
    amps: np.ndarray
    mix: np.ndarray

    def raw(self, x, y, k: int | None = None):
        """Raw functions at points (x, y); shape (d,) + x.shape, or x.shape for one k."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ks = range(len(self.s)) if k is None else [k]
        out = np.empty((len(ks),) + x.shape, dtype=complex)
        for j, kk in enumerate(ks):
            expo = 0.5 + 1j * self.s[kk]
            acc = np.zeros(x.shape, dtype=complex)
            for beta, a in zip(self.betas[kk], self.amps[kk]):
                sb, cb = math.sin(beta), math.cos(beta)
                im = y / ((x * sb + cb) ** 2 + (y * sb) ** 2)
                acc += a * np.exp(expo * np.log(im))
            out[j] = acc
        return out if k is None else out[0]

    def __call__(self, x, y):
        """Orthonormalized entries at (x, y); shape (d,) + x.shape."""
        raw = self.raw(x, y)
        return np.tensordot(self.mix.T, raw, axes=1)


@dataclass
class EigenBasis:
    s: np.ndarray
    values: np.ndarray            # (d, ny, nx) complex
    grid: PatchGrid
    r: float
    C: float
    source: str = "synthetic"
    generator: Optional[PlaneWaveSurrogate] = field(default=None, repr=False)
    attempts: int = 1
    condition: float = 1.0

    @property
    def count(self) -> int:
        return int(self.s.size)

    def gram(self) -> np.ndarray:
        w = self.grid.weights
        v = self.values.reshape(self.count, -1)
        return (v * w.ravel()) @ v.conj().T

    def density(self) -> np.ndarray:
        """sum_l |phi_l|^2 on the grid."""
        return np.sum(np.abs(self.values) ** 2, axis=0)

    def check_window(self) -> None:
        bad = np.nonzero((self.s < self.r - self.C) | (self.s > self.r + self.C))[0]
        if bad.size:
            raise IngestionError(
                f"entry {int(bad[0])} has s = {self.s[bad[0]]!r} outside [{self.r - self.C}, {self.r + self.C}]"
            )


def _weighted_qr(raw: np.ndarray, weights: np.ndarray):
    """Orthonormalize rows of ``raw`` in the weighted inner product (Gram-Schmidt order)."""
    sw = np.sqrt(weights.ravel())
    A = (raw.reshape(raw.shape[0], -1) * sw).T
    Q, R = np.linalg.qr(A)
    cond = float(np.linalg.cond(R))
    return Q, R, cond


def synth_basis(cfg: SpectralConfig, d: int | None = None, seed: int = 0, grid: PatchGrid | None = None,
                waves: int = 32, max_attempts: int = 8, cond_limit: float = 1e8) -> EigenBasis:
    """Random plane-wave superpositions with s uniform in [r - C, r + C],
    orthonormalized on the patch. A Gram factor with condition number above
    ``cond_limit`` triggers regeneration with the next seed."""
    if d is None:
        d = math.ceil(cfg.c * cfg.r)
    if d < 1:
        raise ConfigError("basis size must be at least 1")
    grid = grid or PatchGrid.square(cfg.tau)
    X, Y = grid.mesh()
    w = grid.weights
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        s = rng.uniform(cfg.r - cfg.C, cfg.r + cfg.C, d)
        betas = rng.uniform(0.0, 2 * math.pi, (d, waves))
        amps = np.exp(2j * math.pi * rng.uniform(0.0, 1.0, (d, waves)))
        gen = PlaneWaveSurrogate(s, betas, amps, np.eye(d))
        raw = gen.raw(X, Y)
        Q, R, cond = _weighted_qr(raw, w)
        if cond <= cond_limit:
            break
    else:
        raise ConfigError(f"no well-conditioned basis after {max_attempts} attempts")
    # make diag(R) positive so the map is deterministic
    sign = np.sign(np.diag(R).real)
    sign[sign == 0] = 1
    R = R * sign[:, None]
    Q = Q * sign[None, :]
    gen.mix = np.linalg.inv(R)
    values = (Q.T / np.sqrt(w.ravel())).reshape(d, grid.ny, grid.nx)
    return EigenBasis(s, values, grid, cfg.r, cfg.C, "synthetic", gen, attempt + 1, cond)


def residual_check(gen: PlaneWaveSurrogate, grid: PatchGrid, k: int, n_sample: int = 32,
                   h: float = 5e-4) -> float:
    """||(Delta + 1/4 + s^2) raw_k|| / ||raw_k|| on an n_sample^2 subgrid.

    Delta = y^2 (d_xx + d_yy) by a five-point stencil evaluated on the
    analytic surrogate at steps h and h/2 (Richardson).
    """
    xs = np.linspace(grid.x0, grid.x0 + grid.dx * (grid.nx - 1), n_sample)
    ys = np.linspace(grid.y0, grid.y0 + grid.dy * (grid.ny - 1), n_sample)
    X, Y = np.meshgrid(xs, ys)
    f = lambda x, y: gen.raw(x, y, k)
    centre = f(X, Y)

    def lap(hh):
        return Y * Y * (f(X + hh, Y) + f(X - hh, Y) + f(X, Y + hh) + f(X, Y - hh) - 4 * centre) / hh ** 2

    L = (4 * lap(h / 2) - lap(h)) / 3
    res = L + (0.25 + gen.s[k] ** 2) * centre
    wy = 1 / Y ** 2
    return float(math.sqrt(np.sum(np.abs(res) ** 2 * wy) / np.sum(np.abs(centre) ** 2 * wy)))


# --------------------------------------------------------------------------
# file format
# --------------------------------------------------------------------------

def save_basis(basis: EigenBasis, path) -> Path:
    """One JSON header line, then per entry: <f8 s_l and ny*nx (re, im) <f8 pairs, row-major."""
    path = Path(path)
    header = {"version": FORMAT_VERSION, "r": basis.r, "C": basis.C,
              "grid": basis.grid.to_dict(), "count": basis.count}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for s, v in zip(basis.s, basis.values):
            fh.write(np.asarray([s], dtype="<f8").tobytes())
            pairs = np.empty(v.shape + (2,), dtype="<f8")
            pairs[..., 0] = v.real
            pairs[..., 1] = v.imag
            fh.write(pairs.tobytes())
    return path


def load_basis(path, expect_grid: PatchGrid | None = None, cfg: SpectralConfig | None = None) -> EigenBasis:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise IngestionError("malformed header: no newline-terminated JSON line at byte offset 0")
    try:
        header = json.loads(data[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IngestionError(f"malformed header: {exc}") from None
    needed = {"version", "r", "C", "grid", "count"}
    if not isinstance(header, dict) or not needed <= set(header):
        raise IngestionError(f"malformed header: expected keys {sorted(needed)}")
    if header["version"] != FORMAT_VERSION:
        raise IngestionError(f"unsupported format version {header['version']!r}")
    try:
        grid = PatchGrid(**{k: header["grid"][k] for k in ("x0", "y0", "dx", "dy", "nx", "ny")})
        grid = PatchGrid(float(grid.x0), float(grid.y0), float(grid.dx), float(grid.dy), int(grid.nx), int(grid.ny))
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"malformed grid block: {exc}") from None
    grid.validate()
    if expect_grid is not None and grid != expect_grid:
        raise IngestionError(f"grid mismatch: file has {grid.to_dict()}, expected {expect_grid.to_dict()}")
    count = int(header["count"])
    r, C = float(header["r"]), float(header["C"])
    if cfg is not None and (not math.isclose(r, cfg.r) or not math.isclose(C, cfg.C)):
        raise IngestionError(f"file was written for r={r}, C={C}; config has r={cfg.r}, C={cfg.C}")
    npts = grid.nx * grid.ny
    entry = 8 + 16 * npts
    offset = nl + 1
    s = np.empty(count)
    values = np.empty((count, grid.ny, grid.nx), dtype=complex)
    for l in range(count):
        end = offset + entry
        if end > len(data):
            raise IngestionError(
                f"truncated file: entry {l} needs bytes {offset}..{end - 1} but data ends at byte offset {len(data)}"
            )
        s[l] = np.frombuffer(data, dtype="<f8", count=1, offset=offset)[0]
        pairs = np.frombuffer(data, dtype="<f8", count=2 * npts, offset=offset + 8).reshape(grid.ny, grid.nx, 2)
        values[l] = pairs[..., 0] + 1j * pairs[..., 1]
        offset = end
    if offset != len(data):
        raise IngestionError(f"{len(data) - offset} trailing bytes after the last entry at byte offset {offset}")
    basis = EigenBasis(s, values, grid, r, C, "file")
    basis.check_window()
    return basis


# --------------------------------------------------------------------------
# extremal point and quasimode
# --------------------------------------------------------------------------

def extremal_point(basis: EigenBasis):
    """(grid index (iy, ix), point z, peak) maximizing sum_l |phi_l|^2."""
    if basis.count == 0:
        raise InterfaceError("empty basis")
    dens = basis.density()
    idx = np.unravel_index(int(np.argmax(dens)), dens.shape)
    return (int(idx[0]), int(idx[1])), basis.grid.point(idx), float(dens[idx])


def mean_density(basis: EigenBasis) -> float:
    """Patch average of sum_l |phi_l|^2 (equals count / area for an orthonormal basis)."""
    return float(np.sum(basis.density() * basis.grid.weights) / basis.grid.area)


@dataclass
class Quasimode:
    index: tuple
    point: complex
    coeffs: np.ndarray
    values: np.ndarray

    @property
    def peak_value(self) -> complex:
        return complex(self.values[self.index])

    @property
    def coeff_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


def build_quasimode(basis: EigenBasis, index) -> Quasimode:
    """psi = sum_l conj(phi_l(p)) phi_l, so psi(p) = sum_l |phi_l(p)|^2 = ||psi||^2."""
    iy, ix = index
    coeffs = np.conj(basis.values[:, iy, ix])
    values = np.tensordot(coeffs, basis.values, axes=1)
    return Quasimode((iy, ix), basis.grid.point(index), coeffs, values)


def spectral_correlation(basis: EigenBasis, index, h: Callable) -> float:
    """sum_l h(s_l) |phi_l(p)|^2."""
    iy, ix = index
    return float(np.sum(np.asarray(h(basis.s), dtype=float) * np.abs(basis.values[:, iy, ix]) ** 2))


def exact_correlation(basis: EigenBasis, qm: Quasimode, h: Callable) -> complex:
    """<psi, k_p> from the raw expansion: every raw function is an exact
    eigenfunction, so (k * raw_k)(p) = h(s_k) raw_k(p)."""
    gen = basis.generator
    if gen is None:
        raise InterfaceError("exact correlation needs the synthetic generator")
    alpha = gen.mix @ qm.coeffs
    raw_p = gen.raw(np.array(qm.point.real), np.array(qm.point.imag))
    return complex(np.sum(alpha * np.asarray(h(gen.s), dtype=float) * raw_p))


# --------------------------------------------------------------------------
# lift of the quasimode (consistency check)
# --------------------------------------------------------------------------

def _tube_nodes(cfg: SpectralConfig, N: float, n_t: int, n_u: int):
    from .microlocal import row_half_width

    tn, tw = gauss_legendre(-cfg.tau, cfg.tau, max(1, n_t // 16))
    T, U, W = [], [], []
    for t, wt in zip(tn, tw):
        half = min(float(row_half_width(t, cfg.tau)), cfg.u_cut(N))
        if half <= 0:
            continue
        un, uw = gauss_legendre(-half, half, max(1, n_u // 16))
        T.append(np.full(un.size, t))
        U.append(un)
        W.append(uw * wt * math.exp(t))
    return np.concatenate(T), np.concatenate(U), np.concatenate(W)


def lift_tube_fraction(basis: EigenBasis, qm: Quasimode, cfg: SpectralConfig, N: float,
                       n_alpha: int = 128, n_t: int = 64, n_u: int = 32) -> float:
    """Mass of |Psi|^2 over the tube at p divided by ||psi||^2 (coefficient level).

    Uses the exact lift of each plane wave: the weight-2n translate of
    y^{1/2+is} is y^{1/2+is} e^{2 i n theta} in g = n_x a_y k_theta, so the
    Fejer sum collapses to w0 y^{1/2+is} F_L(2 theta).
    """
    from .microlocal import fejer

    gen = basis.generator
    if gen is None:
        raise InterfaceError("the lift needs the synthetic generator")
    t, u, w = _tube_nodes(cfg, N, n_t, n_u)
    alpha = 2 * math.pi * np.arange(n_alpha) / n_alpha
    # g = p n_u-free factorization: p k_alpha a_t n_u, entries as flat arrays
    x0, y0 = qm.point.real, qm.point.imag
    sy = math.sqrt(y0)
    P = np.array([[sy, x0 / sy], [0.0, 1 / sy]])
    ca, sa = np.cos(alpha)[:, None], np.sin(alpha)[:, None]
    e = np.exp(t / 2)[None, :]
    # k_alpha = rot(alpha) (KAN convention), a_t n_u = [[e, e u], [0, 1/e]]
    m00 = ca * e
    m01 = ca * e * u[None, :] - sa / e
    m10 = sa * e
    m11 = sa * e * u[None, :] + ca / e
    g00 = P[0, 0] * m00 + P[0, 1] * m10
    g01 = P[0, 0] * m01 + P[0, 1] * m11
    g10 = P[1, 1] * m10
    g11 = P[1, 1] * m11
    coef = gen.mix @ qm.coeffs
    psi = np.zeros(g00.shape, dtype=complex)
    for k in range(len(gen.s)):
        if coef[k] == 0:
            continue
        expo = 0.5 + 1j * gen.s[k]
        for beta, a in zip(gen.betas[k], gen.amps[k]):
            cb, sb = math.cos(beta), math.sin(beta)
            # bottom row of k_beta g with k_beta = rot(beta)
            c = sb * g00 + cb * g10
            d = sb * g01 + cb * g11
            y = 1.0 / (c * c + d * d)
            theta = np.arctan2(-c, d)
            psi += coef[k] * a * np.exp(expo * np.log(y)) * fejer(cfg.L, 2 * theta)
    psi *= cfg.prefactor
    mass = float(np.sum(np.mean(np.abs(psi) ** 2, axis=0) * w))
    return mass / qm.coeff_norm_sq


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

@dataclass
class QuasimodeReport:
    p_star: complex
    index: tuple
    peak: float
    mean_density: float
    norm_sq: float
    psi_at_p: float
    correlation: float
    correlation_exact: Optional[float]
    N: float
    outside_mass: float
    eps_out: float
    kappa_tube_norm_sq: float
    lower_fraction: float
    liouville_fraction: float
    enhancement_ratio: float
    lift_tube_fraction: Optional[float] = None

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items()}
        out["p_star"] = [self.p_star.real, self.p_star.imag]
        out["index"] = list(self.index)
        return out


def mass_report(basis: EigenBasis, cfg: SpectralConfig, field, h: Callable, N: float,
                correlation: float | None = None, lift: bool = False) -> QuasimodeReport:
    """The Cauchy-Schwarz chain for the tube mass of the lifted quasimode.

    lower = (corr / ||psi|| - sqrt(outside mass))_+^2 / ||kappa||^2_tube is a
    lower bound for the tube share of ||Psi||^2; the enhancement ratio divides
    it by the tube's share of Haar volume.
    """
    from .microlocal import liouville_fraction, outside_mass

    if field.cfg != cfg:
        raise InterfaceError("microlocal field was built for a different configuration")
    if not (math.isclose(basis.r, cfg.r) and math.isclose(basis.C, cfg.C)):
        raise InterfaceError("basis was built for a different spectral window")
    idx, p, peak = extremal_point(basis)
    qm = build_quasimode(basis, idx)
    norm_sq = qm.coeff_norm_sq
    corr = spectral_correlation(basis, idx, h) if correlation is None else correlation
    exact = None
    if basis.generator is not None:
        exact = abs(exact_correlation(basis, qm, h))
    split = outside_mass(field, N)
    eps = math.sqrt(split.outside)
    lower = max(corr / math.sqrt(norm_sq) - eps, 0.0) ** 2 / split.inside if norm_sq > 0 and split.inside > 0 else 0.0
    liou = liouville_fraction(field, N)
    lift_frac = lift_tube_fraction(basis, qm, cfg, N) if lift and basis.generator is not None else None
    return QuasimodeReport(
        p_star=p, index=idx, peak=peak, mean_density=mean_density(basis), norm_sq=norm_sq,
        psi_at_p=float(qm.peak_value.real), correlation=corr, correlation_exact=exact, N=float(N),
        outside_mass=split.outside, eps_out=eps, kappa_tube_norm_sq=split.inside,
        lower_fraction=lower, liouville_fraction=liou,
        enhancement_ratio=lower / liou if liou > 0 else math.inf,
        lift_tube_fraction=lift_frac,
    )
