import math

import numpy as np
import pytest

from scarkit.config import SpectralConfig
from scarkit.errors import ConfigError
from scarkit.kernel import (build_cutoff, build_gtilde, build_h, build_htilde, build_k,
                            convolve_h, gtilde, htilde, htilde_sup, kernel_norms, verify_bounds)
from scarkit.transforms import SpectralFunction, h_from_g
from scarkit.quadrature import gauss_legendre


def htilde_naive(s, r, C):
    s = np.asarray(s, dtype=float)
    return r ** -0.5 * np.cosh(s / C) * np.cosh(r / C) / (np.cosh(2 * s / C) + np.cosh(2 * r / C))


def test_htilde_at_r(cfg):
    r, C = cfg.r, cfg.C
    exact = r ** -0.5 * (math.cosh(2 * r / C) + 1) / (4 * math.cosh(2 * r / C))
    assert float(htilde(r, cfg)) == pytest.approx(exact, rel=1e-14)
    assert exact == pytest.approx(r ** -0.5 / 4, rel=1e-10)


def test_htilde_matches_naive_form_and_is_even():
    cfg = SpectralConfig(r=20.0, C=4.0)
    s = np.linspace(-60, 60, 241)
    assert np.allclose(htilde(s, cfg), htilde_naive(s, 20.0, 4.0), rtol=1e-13, atol=0)
    assert np.array_equal(htilde(s, cfg), htilde(-s, cfg))


def test_htilde_no_overflow_far_out(cfg):
    big = SpectralConfig(r=5000.0, C=4.0)
    v = htilde(np.array([0.0, 5000.0, 1e5]), big)
    assert np.all(np.isfinite(v)) and np.all(v >= 0)
    assert v[1] == pytest.approx(5000 ** -0.5 / 4, rel=1e-12)


def test_htilde_sup_below_r_scale(cfg):
    s = np.linspace(0, 5 * cfg.r, 200001)
    assert htilde(s, cfg).max() <= cfg.r ** -0.5
    assert htilde_sup(cfg) >= htilde(s, cfg).max() * (1 - 1e-12)
    h = build_htilde(cfg)
    assert np.all(h.values > 0)


def test_gtilde_examples(cfg):
    assert float(gtilde(0.0, cfg)) == pytest.approx(cfg.C / 4 / math.sqrt(cfg.r), rel=1e-15)
    xi = np.linspace(-0.3, 0.3, 31)
    env = np.cosh(cfg.C * math.pi * xi / 2)
    period = 2 * math.pi / cfg.r
    a = gtilde(xi, cfg) * env
    b = gtilde(xi + period, cfg) * np.cosh(cfg.C * math.pi * (xi + period) / 2)
    assert np.allclose(a, b, atol=1e-15, rtol=0)
    assert np.array_equal(gtilde(xi, cfg), gtilde(-xi, cfg))


def test_gtilde_fourier_matches_htilde(cfg):
    s = cfg.r + np.linspace(-4 * cfg.C, 4 * cfg.C, 41)
    h = h_from_g(build_gtilde(cfg, support=14.0), s)
    assert np.max(np.abs(h.values - htilde(s, cfg))) <= 1e-6 / math.sqrt(cfg.r)


def test_cutoff_normalization(cutoff):
    sig = np.linspace(-1, 1, 401)
    vals = cutoff.chi_hat(sig)
    assert vals.min() >= 1 - 1e-12
    assert cutoff.chi_hat(0.0)[0] >= 1
    assert cutoff.chi_hat(1.0)[0] == pytest.approx(1.0, rel=1e-9)
    assert cutoff.chi_hat(-1.0)[0] == pytest.approx(1.0, rel=1e-9)


def test_cutoff_support_symmetry_and_sign(cutoff):
    u = np.linspace(-0.8, 0.8, 801)
    chi = cutoff.chi(u)
    assert np.all(chi >= 0)
    assert np.all(chi[np.abs(u) >= cutoff.tau] == 0)
    assert np.array_equal(chi, cutoff.chi(-u))
    assert np.all(cutoff.chi_hat(np.linspace(0, 500, 5001)) >= 0)


def test_cutoff_transform_convention(cutoff):
    """chi^(s) = (1/2 pi) int chi(u) e^{isu} du, checked by direct quadrature."""
    u, w = gauss_legendre(-cutoff.tau, cutoff.tau, 64)
    s = np.array([0.0, 0.7, 3.0, 25.0])
    direct = np.cos(np.outer(s, u)) @ (w * cutoff.chi(u)) / (2 * math.pi)
    assert np.allclose(cutoff.chi_hat(s), direct, rtol=1e-9, atol=1e-12)


def test_cutoff_polynomial_decay(cutoff):
    u = np.linspace(1, 1e3, 20001)
    scaled = cutoff.chi_hat(u) * u ** 4
    assert np.all(np.isfinite(scaled))
    assert scaled.max() <= 1e4 * cutoff.chi_hat(0.0)[0]


def test_cutoff_rejects_bad_tau():
    with pytest.raises(ConfigError):
        build_cutoff(1.2)
    with pytest.raises(ConfigError):
        build_cutoff(0.0)


def test_build_h_paths_agree_and_h_is_even(bundle, cfg, cutoff):
    assert bundle.path_difference <= 1e-6 / math.sqrt(cfg.r)
    s = np.array([95.0, 100.0, 103.5])
    assert np.allclose(bundle.h.evaluate(s), bundle.h.evaluate(-s), rtol=0, atol=1e-15)
    assert np.allclose(convolve_h(s, cfg, cutoff), bundle.h.evaluate(s), rtol=0,
                       atol=1e-6 / math.sqrt(cfg.r))


def test_h_positive_in_window(bundle, cfg):
    s = np.linspace(cfg.r - cfg.C, cfg.r + cfg.C, 801)
    assert bundle.h.evaluate(s).min() > 0
    # h = h~ * chi^ with both factors nonnegative
    assert bundle.h.values.min() >= -1e-12 / math.sqrt(cfg.r)


def test_build_h_rejects_foreign_cutoff(cfg):
    with pytest.raises(ConfigError):
        build_h(cfg, build_cutoff(0.3), check_paths=False)


def test_verify_bounds_default(bound_reports):
    rep = bound_reports[100.0]
    assert [c.name for c in rep.checks] == ["h_small", "big_h", "decay", "h_integral",
                                            "sh_integral", "sh2_integral"]
    assert rep["big_h"].lhs >= 0.001
    assert rep.all_passed
    for c in rep.to_dict()["checks"]:
        assert set(c) >= {"check_name", "lhs", "rhs", "ratio", "pass"}


def test_verify_bounds_zero_h(cfg, cutoff):
    s = np.linspace(0, cfg.s_max, 101)
    zero = SpectralFunction(s, np.zeros_like(s), tail_exponent=3.0, tail_amplitude=0.0)
    rep = verify_bounds(zero, cfg, cutoff)
    for name in ("h_integral", "sh_integral", "sh2_integral"):
        assert rep[name].lhs == 0 and rep[name].passed
    assert not rep["big_h"].passed


def test_verify_bounds_small_C_reports_instead_of_failing(cutoff):
    cfg = SpectralConfig(C=1.0)
    b = build_h(cfg, cutoff)
    rep = verify_bounds(b.h, cfg, cutoff)
    assert not rep["big_h"].passed
    assert "C > 1" in rep["big_h"].note


def test_bound_constants_stable_in_r(bound_reports):
    reps = list(bound_reports.values())
    assert all(r.all_passed for r in reps)
    for key in ("K3", "K4", "K5", "K6"):
        vals = [r.constants[key] for r in reps]
        assert max(vals) / min(vals) <= 2.0, (key, vals)


def test_build_k_support_and_norm(kprofile, bundle, cfg):
    t_edge = 2 * math.sinh(cfg.tau / 2) ** 2
    d_out = math.acosh(1 + 1.05 * t_edge)
    assert abs(float(kprofile.evaluate(np.array([d_out]))[0])) <= 1e-8 * np.max(np.abs(kprofile.values))
    norms = kernel_norms(bundle, kprofile)
    assert norms["rel_diff"] <= 0.02


def test_build_k_linearity(cfg, cutoff, kprofile):
    from scarkit.kernel import kernel_g
    from scarkit.transforms import FourierSide, k_from_q, q_from_g

    g = kernel_g(cfg, cutoff)
    doubled = FourierSide(lambda u: 2 * g(u), g.support, lambda u: 2 * g.deriv(u))
    k2 = k_from_q(q_from_g(doubled), n=kprofile.d.size, panels=64, tol=1e-6)
    assert np.allclose(k2.values, 2 * kprofile.values, rtol=1e-12, atol=1e-15 * np.abs(kprofile.values).max())
