import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scarkit.errors import TailModelRequired
from scarkit.kernel import build_gtilde, build_htilde, htilde
from scarkit.transforms import (SPECTRAL_DENSITY, FourierSide, QFunction, SpectralFunction,
                                g_from_h, gaussian_g, gaussian_h, h_from_g, h_from_k_forward,
                                k_at_omega, k_from_q, plancherel_norm, q_from_g, write_table)


def zero_g(support=1.0):
    return FourierSide(lambda u: np.zeros(np.shape(u)), support, lambda u: np.zeros(np.shape(u)))


def test_gaussian_h_from_g():
    s = np.linspace(0, 8, 161)
    h = h_from_g(gaussian_g(), s)
    exact = np.exp(-s * s / 2)
    # relative to sup h; pointwise relative error is meaningless once h underflows
    assert np.max(np.abs(h.values - exact)) <= 1e-8
    mid = s <= 5
    assert np.max(np.abs(h.values[mid] / exact[mid] - 1)) <= 1e-8


def test_h_from_zero_g_is_zero():
    h = h_from_g(zero_g(), np.linspace(0, 10, 11))
    assert np.all(h.values == 0)


def test_h_is_even_and_real():
    g = gaussian_g()
    h = h_from_g(g, np.linspace(0, 5, 21))
    s = np.array([0.3, 1.1, 4.2])
    assert np.allclose(h(s), h(-s), atol=1e-15, rtol=0)
    assert np.allclose(h.evaluate(-s), h.evaluate(s), atol=1e-15, rtol=0)


def test_gtilde_transforms_to_htilde(cfg):
    s = cfg.r + np.linspace(-4 * cfg.C, 4 * cfg.C, 65)
    g = build_gtilde(cfg, support=14.0)
    h = h_from_g(g, s)
    assert np.max(np.abs(h.values - htilde(s, cfg))) <= 1e-6 / math.sqrt(cfg.r)


def test_gaussian_g_from_h():
    g = g_from_h(gaussian_h())
    u = np.linspace(0, 6, 61)
    exact = np.exp(-u * u / 2) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(g(u) - exact)) <= 1e-8 * exact.max()
    assert 7 < g.support < 10


def test_g_from_zero_h_is_zero():
    h = SpectralFunction(np.linspace(0, 5, 11), np.zeros(11))
    g = g_from_h(h)
    assert np.all(g(np.linspace(-1, 1, 5)) == 0)


def test_g_from_h_requires_tail_model():
    s = np.linspace(0, 10, 101)
    h = SpectralFunction(s, 1 / (1 + s * s))
    with pytest.raises(TailModelRequired):
        g_from_h(h)
    h.tail_exponent = 1.0
    with pytest.raises(TailModelRequired):
        g_from_h(h)


def test_htilde_roundtrip(cfg):
    h = build_htilde(cfg)
    g = g_from_h(h, u_limit=12.0)
    window = cfg.r + np.linspace(-4 * cfg.C, 4 * cfg.C, 33)
    back = h_from_g(g, window)
    ref = htilde(window, cfg)
    assert np.max(np.abs(back.values / ref - 1)) <= 1e-6


def test_q_from_g_basics():
    g = gaussian_g(cut=2.0)
    q = q_from_g(g)
    assert q(np.array(0.0)) == pytest.approx(g(np.array(0.0)) / 2, rel=1e-15)
    edge = math.sinh(1.0) ** 2
    assert q(np.array(edge + 1e-9)) == 0.0
    u = np.linspace(-1.9, 1.9, 41)
    assert np.max(np.abs(g(u) - 2 * q(np.sinh(u / 2) ** 2))) <= 1e-10


def abel_pair():
    return QFunction(lambda w: (1 - w) ** 2, lambda w: -2 * (1 - w), 1.0)


def test_abel_closed_form():
    w = np.linspace(0, 0.9, 46)
    k = k_at_omega(abel_pair(), w)
    exact = 8 / (3 * math.pi) * (1 - w) ** 1.5
    assert np.max(np.abs(k / exact - 1)) <= 1e-6


def test_abel_zero_and_support():
    zero = QFunction(lambda w: 0 * w, lambda w: 0 * w, 0.3)
    assert np.all(k_at_omega(zero, np.linspace(0, 0.5, 6)) == 0)
    assert np.all(k_at_omega(abel_pair(), np.array([1.0, 1.2])) == 0)


def test_kernel_support_propagation(kprofile, cfg):
    beyond = np.linspace(cfg.tau * 1.0001, cfg.tau * 1.5, 20)
    assert np.max(np.abs(kprofile.evaluate(beyond))) <= 1e-10 * np.max(np.abs(kprofile.values))
    t_edge = 2 * math.sinh(cfg.tau / 2) ** 2
    assert kprofile.t_max == pytest.approx(t_edge, rel=1e-12)


def test_k_from_q_warns_on_rough_q():
    rough = QFunction(lambda w: np.ones_like(w), lambda w: np.where(w < 0.5, 0.0, 1 / np.maximum(1 - w, 1e-3)), 1.0)
    with pytest.warns(RuntimeWarning):
        k_from_q(rough, n=21, panels=4)


def test_helgason_b_independence_and_zero(kprofile):
    s = np.linspace(90, 110, 11)
    h0 = h_from_k_forward(kprofile, s, 0.0)
    h1 = h_from_k_forward(kprofile, s, 2.1)
    assert np.max(np.abs(h0.values - h1.values)) <= 1e-6 * np.max(np.abs(h0.values))
    zero = type(kprofile)(kprofile.d, 0 * kprofile.values, kprofile.d_max,
                          direct=lambda d: np.zeros(np.shape(d)))
    assert np.all(h_from_k_forward(zero, s).values == 0)


def test_helgason_recovers_kernel_h(kprofile, bundle):
    s = np.linspace(96, 104, 5)
    back = h_from_k_forward(kprofile, s)
    ref = bundle.h.evaluate(s)
    assert np.max(np.abs(back.values - ref)) <= 1e-6 * np.max(ref)


def test_plancherel_zero():
    assert plancherel_norm(SpectralFunction(np.linspace(0, 5, 6), np.zeros(6))) == 0.0


def test_plancherel_gaussian_spatial():
    k = k_from_q(q_from_g(gaussian_g()), n=161, panels=48)
    spatial = k.norm_sq(panels=96)
    spectral = plancherel_norm(gaussian_h())
    assert spatial == pytest.approx(spectral, rel=1e-3)
    # the calibrated density constant
    ratio = spatial / (spectral / SPECTRAL_DENSITY)
    assert ratio == pytest.approx(1 / (2 * math.pi), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.5, 3.0))
def test_h_from_g_linearity(a, b, width):
    support = 9.0 * max(1.0, width)
    g1 = gaussian_g(cut=support)
    g2 = FourierSide(lambda u: np.exp(-(u / width) ** 2), support)
    comb = FourierSide(lambda u: a * g1(u) + b * g2(u), support)
    s = np.linspace(0, 6, 13)
    lhs = h_from_g(comb, s).values
    rhs = a * h_from_g(g1, s).values + b * h_from_g(g2, s).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(abs(a) + abs(b) * width, 1.0)


def test_write_table(tmp_path):
    path = tmp_path / "t.csv"
    write_table(path, {"s": [0.0, 1.5], "h": [1.0, 0.25]})
    rows = list(csv.reader(open(path)))
    assert rows == [["s", "h"], ["0.0", "1.0"], ["1.5", "0.25"]]
