"""Session fixtures: the r=100 pipeline is built once and shared."""

import numpy as np
import pytest

from scarkit.config import GridConfig, RunConfig, SpectralConfig
from scarkit.kernel import build_cutoff, build_h, build_k, verify_bounds
from scarkit.microlocal import build_field, build_profile, choose_eta
from scarkit.quasimode import synth_basis

SWEEP = RunConfig().N_sweep


@pytest.fixture(scope="session")
def cfg():
    return SpectralConfig()


@pytest.fixture(scope="session")
def cutoff():
    return build_cutoff(0.5)


@pytest.fixture(scope="session")
def bundle(cfg, cutoff):
    return build_h(cfg, cutoff)


@pytest.fixture(scope="session")
def kprofile(cfg, cutoff):
    return build_k(cfg, cutoff)


@pytest.fixture(scope="session")
def eta_choice(bundle, cfg):
    return choose_eta(bundle.h, cfg)


@pytest.fixture(scope="session")
def lcfg(cfg, eta_choice):
    """Default config with the calibrated eta."""
    return cfg.replace(eta=eta_choice["eta"])


@pytest.fixture(scope="session")
def profile(bundle, lcfg):
    return build_profile(bundle.h, lcfg)


@pytest.fixture(scope="session")
def field(profile, lcfg):
    return build_field(profile, lcfg, GridConfig(), cut_points=[lcfg.u_cut(N) for N in SWEEP])


@pytest.fixture(scope="session")
def basis(lcfg):
    return synth_basis(lcfg, seed=0)


@pytest.fixture(scope="session")
def cfg50():
    return SpectralConfig(r=50.0)


@pytest.fixture(scope="session")
def bundle50(cfg50, cutoff):
    return build_h(cfg50, cutoff)


@pytest.fixture(scope="session")
def profile50(bundle50, cfg50):
    return build_profile(bundle50.h, cfg50)


@pytest.fixture(scope="session")
def bound_reports(cutoff, bundle, cfg, bundle50, cfg50):
    """verify_bounds at r = 50, 100, 200."""
    cfg200 = SpectralConfig(r=200.0)
    pairs = {50.0: (bundle50, cfg50), 100.0: (bundle, cfg), 200.0: (build_h(cfg200, cutoff), cfg200)}
    return {r: verify_bounds(b.h, c, cutoff) for r, (b, c) in pairs.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
