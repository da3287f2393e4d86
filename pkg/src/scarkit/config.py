"""Parameter bundles shared by every module."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class SpectralConfig:
    """Spectral parameter r, window half-width C, density c, support radius tau,
    tube constant N and low-frequency fraction eta.

    Derived quantities (L, the Fejer prefactor, b(r), the tube width) are
    properties so there is exactly one place they are computed.
    """

    r: float = 100.0
    C: float = 4.0
    c: float = 0.5
    tau: float = 0.5
    N: float = 1.0
    eta: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        # C <= 1 is accepted on purpose: verify_bounds reports the window check
        # as failing instead of refusing to run. See `strict`.
        if not (0 < self.tau < 1):
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if not (0 < self.eta < 1):
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.C > 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        if not self.r > self.C:
            raise ConfigError(f"need r > C, got r={self.r}, C={self.C}")
        if not self.r >= 1:
            raise ConfigError(f"need r >= 1, got {self.r}")
        if not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if not self.N > 0:
            raise ConfigError(f"N must be positive, got {self.N}")

    @property
    def strict(self) -> bool:
        """True when C > 1, the regime where the window lower bound is derived."""
        return self.C > 1

    @property
    def L(self) -> int:
        return max(1, math.floor(math.sqrt(self.r)))

    @property
    def prefactor(self) -> float:
        """sqrt(3L / (2L^2 + 1)): L2 normalization of the Fejer coefficients."""
        L = self.L
        return math.sqrt(3 * L / (2 * L * L + 1))

    @property
    def b(self) -> float:
        """b(r) = r^{1/4} * prefactor, tends to sqrt(3/2)."""
        return self.r ** 0.25 * self.prefactor

    def u_cut(self, N: float | None = None) -> float:
        """Tube half-width N c^{-1} r^{-1/2} in the u coordinate."""
        N = self.N if N is None else N
        return N / (self.c * math.sqrt(self.r))

    @property
    def s_max(self) -> float:
        """Spectral truncation point r + 40 C."""
        return self.r + 40 * self.C

    def replace(self, **changes) -> "SpectralConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class GridConfig:
    """Resolutions for the microlocal mass grid and the basis patch."""

    n_t: int = 64
    n_u: int = 512
    theta_oversample: float = 16.0
    patch_n: int = 256
    plane_waves: int = 32


@dataclass(frozen=True)
class RunConfig:
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    N_sweep: tuple = (0.0625, 0.125, 0.25, 0.5, 1.0, 2.0)
    eta_candidates: tuple = (0.5, 0.6, 0.7, 0.8)
    eta_budget: float = 1e-3
    target_fraction: float = 0.05
    k3_max: float = 1e4
    lift_check: bool = False
    basis_count: int | None = None
    basis_path: str | None = None
    seed: int = 0
    out: str = "scarkit-out"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["N_sweep"] = list(self.N_sweep)
        d["eta_candidates"] = list(self.eta_candidates)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            spectral = SpectralConfig(**data.pop("spectral", {}))
            grid = GridConfig(**data.pop("grid", {}))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        for key in ("N_sweep", "eta_candidates"):
            if key in data:
                data[key] = tuple(float(v) for v in data[key])
        cfg = cls(spectral=spectral, grid=grid, **data)
        if not 0 < cfg.target_fraction < 1:
            raise ConfigError("target_fraction must lie in (0, 1)")
        if not cfg.k3_max > 0:
            raise ConfigError("k3_max must be positive")
        if not cfg.N_sweep or any(n <= 0 for n in cfg.N_sweep):
            raise ConfigError("N_sweep must be a non-empty list of positive values")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)
