"""Command-line driver: build-kernel, verify-bounds, localize, quasimode, report.

Exit codes: 0 success, 1 computation or ingestion error, 2 configuration error.
Errors are printed to stdout as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from functools import cached_property
from pathlib import Path

import numpy as np

from . import __version__, svg
from .config import RunConfig
from .errors import ConfigError, ResolutionError, ScarkitError
from .kernel import build_cutoff, build_h, build_k, kernel_norms, verify_bounds
from .microlocal import (build_field, build_profile, calibrate_N, choose_eta,
                         split_diagnostics)
from .quasimode import (PatchGrid, build_quasimode, load_basis, mass_report,
                        synth_basis)
from .transforms import write_table


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def dump_json(path, payload: dict, run: RunConfig) -> Path:
    doc = dict(payload)
    doc["config"] = run.to_dict()
    doc["version"] = __version__
    path = Path(path)
    path.write_text(json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n")
    return path


class Pipeline:
    """Lazily built stages shared by the subcommands of one invocation."""

    def __init__(self, run: RunConfig):
        self.run = run
        self.out = Path(run.out)
        self.out.mkdir(parents=True, exist_ok=True)

    @cached_property
    def cutoff(self):
        return build_cutoff(self.run.spectral.tau)

    @cached_property
    def bundle(self):
        return build_h(self.run.spectral, self.cutoff)

    @cached_property
    def bounds(self):
        return verify_bounds(self.bundle.h, self.run.spectral, self.cutoff, K3_max=self.run.k3_max)

    @cached_property
    def k(self):
        return build_k(self.run.spectral, self.cutoff)

    @cached_property
    def eta_choice(self):
        return choose_eta(self.bundle.h, self.run.spectral, self.run.eta_candidates, self.run.eta_budget)

    @cached_property
    def cfg(self):
        """Spectral config with the selected eta (smallest candidate if none meets the budget)."""
        eta = self.eta_choice["eta"]
        if eta is None:
            eta = min(self.run.eta_candidates)
        return self.run.spectral.replace(eta=eta)

    @cached_property
    def profile(self):
        return build_profile(self.bundle.h, self.cfg)

    @cached_property
    def field(self):
        cuts = [self.cfg.u_cut(N) for N in self.run.N_sweep]
        return build_field(self.profile, self.cfg, self.run.grid, cut_points=cuts)

    @cached_property
    def calibration(self):
        return calibrate_N(self.field, self.run.N_sweep, self.run.target_fraction)

    @property
    def N_star(self) -> float:
        n = self.calibration["N_star"]
        return float(n if n is not None else max(self.run.N_sweep))

    @cached_property
    def basis(self):
        run = self.run
        if run.basis_path:
            return load_basis(run.basis_path, cfg=run.spectral)
        grid = PatchGrid.square(run.spectral.tau, run.grid.patch_n)
        return synth_basis(run.spectral, run.basis_count, run.seed, grid, run.grid.plane_waves)

    # ------------------------------------------------------------------ stages

    def build_kernel(self) -> dict:
        h = self.bundle.h
        write_table(self.out / "h.csv", {"s": h.s, "h": h.values})
        write_table(self.out / "k.csv", {"d": self.k.d, "t": self.k.t, "k": self.k.values})
        payload = self.bounds.to_dict()
        payload["path_difference"] = self.bundle.path_difference
        payload["kernel_norms"] = kernel_norms(self.bundle, self.k)
        dump_json(self.out / "bounds.json", payload, self.run)
        return payload

    def verify_bounds(self) -> dict:
        h = self.bundle.h
        write_table(self.out / "h.csv", {"s": h.s, "h": h.values})
        payload = self.bounds.to_dict()
        dump_json(self.out / "bounds.json", payload, self.run)
        return payload

    def localize(self) -> dict:
        f = self.field
        write_table(self.out / "kappa_heatmap.csv", {
            "t": f.t, "u": f.u, "weight": f.weight, "kappa_abs2": np.abs(f.kappa) ** 2,
            "kappa1_abs2": np.abs(f.kappa1) ** 2, "kappa2_abs2": np.abs(f.kappa2) ** 2,
        })
        split = split_diagnostics(f, self.bundle.h, self.profile)
        payload = {
            "calibration": self.calibration,
            "eta_selection": self.eta_choice,
            "eta": self.cfg.eta,
            "split": split.to_dict(),
            "total_mass": f.total_mass,
            "kernel_norm_sq": kernel_norms(self.bundle, self.k)["spectral"],
            "nodes": int(f.t.size),
            "n_theta": f.n_theta,
            "profile": {"interp_error": self.profile.interp_error,
                        "resolution_change": self.profile.resolution_change},
        }
        dump_json(self.out / "sweep.json", payload, self.run)
        self._localization_svg()
        return payload

    def _localization_svg(self):
        f, tau = self.field, self.cfg.tau
        top = math.sinh(tau)
        extent = (-tau, tau, -top, top)
        # mirror the stored half u >= 0
        t = np.concatenate([f.t, f.t])
        u = np.concatenate([f.u, -f.u])
        v = np.concatenate([np.abs(f.kappa) ** 2] * 2)
        w = np.concatenate([f.weight] * 2)
        raster = svg.bin_scattered(t, u, v, w, extent, 64, 96)
        lines = [(self.cfg.u_cut(N), f"N={N:g}") for N in self.run.N_sweep]
        text = svg.heatmap(raster, extent, "|kappa|^2 over (t, u) with tube boundaries", "t", "u",
                           hlines=lines)
        svg.write(self.out / "localization.svg", text)

    def quasimode(self) -> dict:
        basis = self.basis
        N = self.N_star
        rep = mass_report(basis, self.cfg, self.field, self.bundle.h, N, lift=self.run.lift_check)
        payload = rep.to_dict()
        payload["basis"] = {"count": basis.count, "source": basis.source, "attempts": basis.attempts,
                            "condition": basis.condition}
        payload["calibration_N_star"] = self.calibration["N_star"]
        payload["correlation_threshold"] = 0.01 / math.sqrt(self.cfg.r) * rep.peak
        dump_json(self.out / "quasimode_report.json", payload, self.run)
        X, Y = basis.grid.mesh()
        write_table(self.out / "density.csv", {"x": X.ravel(), "y": Y.ravel(), "density": basis.density().ravel()})
        qm = build_quasimode(basis, rep.index)
        g = basis.grid
        step = max(1, g.nx // 96)
        raster = np.abs(qm.values[::step, ::step]) ** 2
        ext = (g.x0, g.x0 + g.dx * (g.nx - 1), g.y0, g.y0 + g.dy * (g.ny - 1))
        text = svg.heatmap(raster, ext, "|psi|^2 on the patch", "x", "y", log=False,
                           markers=[(rep.p_star.real, rep.p_star.imag, "p*")])
        svg.write(self.out / "psi_peak.svg", text)
        return payload

    def report(self) -> dict:
        kern = self.build_kernel()
        loc = self.localize()
        qm = self.quasimode()
        payload = {
            "bounds_passed": all(c["pass"] for c in kern["checks"]),
            "kernel_norms": kern["kernel_norms"],
            "N_star": loc["calibration"]["N_star"],
            "sweep_slope": loc["calibration"]["slope"],
            "sweep_monotone": loc["calibration"]["monotone"],
            "kappa1_ratio": loc["split"]["ratio"],
            "enhancement_ratio": qm["enhancement_ratio"],
            "lower_fraction": qm["lower_fraction"],
            "liouville_fraction": qm["liouville_fraction"],
        }
        dump_json(self.out / "report.json", payload, self.run)
        return payload


COMMANDS = {
    "build-kernel": Pipeline.build_kernel,
    "verify-bounds": Pipeline.verify_bounds,
    "localize": Pipeline.localize,
    "quasimode": Pipeline.quasimode,
    "report": Pipeline.report,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--r", type=float)
    common.add_argument("--C", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--tau", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory (created if missing)")
    common.add_argument("--N-sweep", dest="N_sweep", type=float, nargs="+")
    common.add_argument("--target", type=float, help="outside-mass target fraction")
    common.add_argument("--count", type=int, help="basis size (default ceil(c r))")
    common.add_argument("--basis", help="basis file (.qmb) instead of the synthetic surrogate")
    common.add_argument("--lift", action="store_true", help="also measure the lifted tube mass")
    p = argparse.ArgumentParser(prog="scarkit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def resolve_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    spectral = dict(data.get("spectral", {}))
    for key in ("r", "C", "c", "tau"):
        if getattr(args, key) is not None:
            spectral[key] = getattr(args, key)
    data["spectral"] = spectral
    overrides = {"seed": args.seed, "out": args.out, "N_sweep": args.N_sweep,
                 "target_fraction": args.target, "basis_count": args.count, "basis_path": args.basis}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.lift:
        data["lift_check"] = True
    return RunConfig.from_dict(data)


def _error(exc: Exception, code: int) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ResolutionError):
        doc["hint"] = "increase the grid resolution (grid.n_t, grid.n_u, grid.theta_oversample)"
    print(json.dumps(doc, sort_keys=True))
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        run = resolve_config(args)
        pipe = Pipeline(run)
        COMMANDS[args.command](pipe)
    except ConfigError as exc:
        return _error(exc, 2)
    except ScarkitError as exc:
        return _error(exc, 1)
    except (ArithmeticError, ValueError, OSError) as exc:
        return _error(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
