import math

import numpy as np
import pytest
from scipy import integrate

from conftest import SWEEP
from scarkit.config import GridConfig
from scarkit.errors import ConfigError, ResolutionError
from scarkit.geometry import GroupElement, u_extent
from scarkit.kernel import kernel_norms
from scarkit.microlocal import (KappaEvaluator, calibrate_N, eval_kappa, fejer, fejer_tail,
                                build_field, liouville_fraction, low_frequency_mass,
                                nonstationary_phase_check, nsp_scaling, outside_mass,
                                split_diagnostics)


def test_fejer_examples():
    assert float(fejer(10, 0.0)) == 10.0
    assert float(fejer(10, 2 * math.pi)) == 10.0
    th = 2 * math.pi * np.arange(4096) / 4096
    vals = fejer(10, th)
    assert vals.min() >= 0
    assert vals.mean() == pytest.approx(1.0, rel=1e-13)
    with pytest.raises(ConfigError):
        fejer(0, 0.1)


def test_fejer_tail():
    assert fejer_tail(10, 0.0) == pytest.approx(2 * math.pi, rel=1e-12)
    tails = [fejer_tail(10, a) for a in (0.2, 0.5, 1.0, 2.0)]
    assert all(b < a for a, b in zip(tails, tails[1:]))
    # F_L(theta) <= pi^2 / (L theta^2) on |theta| <= pi gives the 2 pi^2 / (L a) envelope
    assert fejer_tail(10, 0.5) <= 2 * math.pi ** 2 / (10 * 0.5)


def test_profile_at_zero(profile, bundle, lcfg):
    s_hi = profile.s_hi
    f = lambda s: float(bundle.h.evaluate(np.array([s]))[0]) * s * math.tanh(math.pi * s)
    pts = [lcfg.r - 8 * lcfg.C, lcfg.r, lcfg.r + 8 * lcfg.C]
    ref = integrate.quad(f, 0, s_hi, points=pts, limit=400, epsabs=1e-12, epsrel=1e-11)[0]
    g0 = complex(profile.G(np.array([0.0]))[0])
    assert g0.real > 0
    assert abs(g0.imag) <= 1e-9 * g0.real
    assert g0.real == pytest.approx(ref, rel=1e-6)


def test_profile_resolution(profile):
    assert profile.resolution_change <= 1e-6
    x = np.linspace(-0.4, 0.4, 33)
    assert np.allclose(profile.G(x), profile.G_direct(x), rtol=0, atol=1e-5 * np.abs(profile.G(x)).max())


def test_profile_parts_add_up(profile):
    x = np.linspace(-0.3, 0.3, 17)
    lo, hi = profile.G_parts(x)
    assert np.max(np.abs(lo + hi - profile.G(x))) <= 1e-12 * np.abs(profile.G(x)).max()


def test_kappa_left_K_invariance(profile, lcfg, rng):
    for _ in range(10):
        g = GroupElement.random(rng, 0.15)
        alpha = rng.uniform(-math.pi, math.pi)
        a = eval_kappa(g, profile, lcfg)
        b = eval_kappa(GroupElement.rot(alpha) @ g, profile, lcfg)
        assert abs(a - b) <= 1e-10 * max(abs(a), 1e-300)


def test_kappa_theta_doubling(profile, lcfg, rng):
    ev1 = KappaEvaluator(profile, lcfg)
    ev2 = KappaEvaluator(profile, lcfg, n_theta=2 * ev1.n_theta)
    t = rng.uniform(-0.3, 0.3, 20)
    u = rng.uniform(-0.2, 0.2, 20)
    a, b = ev1(t, u), ev2(t, u)
    assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-5


def test_kappa_check_flag_raises_on_coarse_theta(profile, lcfg):
    g = GroupElement.a_t(0.1) @ GroupElement.n_u(0.2)
    with pytest.raises(ResolutionError):
        eval_kappa(g, profile, lcfg, n_theta=64, check=True)


def test_kappa_parity(field, profile, lcfg, rng):
    ev = KappaEvaluator(profile, lcfg)
    t = rng.uniform(-0.3, 0.3, 12)
    u = rng.uniform(0.0, 0.2, 12)
    a, b = ev(t, u), ev(t, -u)
    assert np.max(np.abs(np.abs(a) - np.abs(b))) <= 1e-8 * np.abs(a).max()


def test_grid_norm_matches_kernel_norm(field, bundle, kprofile):
    spectral = kernel_norms(bundle, kprofile)["spectral"]
    assert field.total_mass == pytest.approx(spectral, rel=0.02)


def test_mass_conservation(field):
    for N in SWEEP:
        m = outside_mass(field, N)
        assert abs(m.inside + m.outside - m.total) <= 1e-10 * m.total


def test_outside_mass_monotone_and_decaying(field):
    rows = [outside_mass(field, N) for N in SWEEP]
    fr = [r.fraction for r in rows]
    assert all(b <= a for a, b in zip(fr, fr[1:]))
    cal = calibrate_N(field, SWEEP, 0.05)
    assert cal["monotone"]
    assert cal["slope"] <= -0.4


def test_outside_mass_vanishes_beyond_extent(field, lcfg):
    N = 1.01 * u_extent(lcfg.tau) * lcfg.c * math.sqrt(lcfg.r)
    m = outside_mass(field, N)
    assert m.outside == 0.0 and m.inside == pytest.approx(m.total, rel=1e-15)


def test_outside_mass_resolution_guard(profile, lcfg):
    coarse = build_field(profile, lcfg, GridConfig(n_t=16, n_u=8), n_theta=256)
    with pytest.raises(ResolutionError):
        outside_mass(coarse, 1.0)
    assert outside_mass(coarse, 1.0, check=False).total > 0


def test_liouville_fraction(field):
    fr = [liouville_fraction(field, N) for N in SWEEP]
    assert all(0 < f < 1 for f in fr)
    assert all(b > a for a, b in zip(fr, fr[1:]))


def test_calibrate_N_examples(field):
    assert calibrate_N(field, SWEEP, 1.0)["N_star"] == min(SWEEP)
    stars = []
    for target in (0.01, 0.05, 0.2, 0.5):
        n = calibrate_N(field, SWEEP, target)["N_star"]
        stars.append(math.inf if n is None else n)
    assert all(b <= a for a, b in zip(stars, stars[1:]))
    assert calibrate_N(field, SWEEP, 0.05)["calibrated"]
    with pytest.raises(ConfigError):
        calibrate_N(field, SWEEP, 0.0)


def test_calibrate_N_unreachable_is_reported(field):
    res = calibrate_N(field, [0.0625, 0.125], 1e-12)
    assert res["N_star"] is None and not res["calibrated"]
    assert len(res["sweep"]) == 2


def test_split_diagnostics(field, bundle, profile, lcfg):
    rep = split_diagnostics(field, bundle.h, profile)
    assert rep.consistency <= 1e-10
    assert rep.ratio <= 1.0
    assert rep.low_bound == pytest.approx(low_frequency_mass(bundle.h, lcfg.eta * lcfg.r), rel=1e-14)
    # |kappa_2| |u| r^{1/4} grows no faster than N^{1/4} (within a factor 3)
    k2 = rep.K2
    lo, hi = min(k2), max(k2)
    assert k2[hi] <= 3 * (hi / lo) ** 0.25 * k2[lo]


def test_nsp_precondition():
    from scarkit.config import SpectralConfig

    cfg = SpectralConfig()
    res = nonstationary_phase_check(cfg, [(0.1, 0.0, 100.0, 0), (0.1, 0.2, 100.0, 0),
                                          (0.0, 0.05, 10.0, 10), (-0.2, -0.15, 200.0, 3)])
    acc = [r["accepted"] for r in res["rows"]]
    assert acc == [False, True, False, True]
    assert res["K7"] is not None and res["K7"] < 10


def test_nsp_scaling():
    from scarkit.config import SpectralConfig

    cfg = SpectralConfig()
    for t, u in ((0.1, 0.2), (-0.1, 0.3)):
        ratio = nsp_scaling(cfg, t, u, 60.0)["ratio"]
        assert 0.3 <= ratio <= 0.8
