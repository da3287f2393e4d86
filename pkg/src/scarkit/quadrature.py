"""Composite Gauss-Legendre rules and small quadrature helpers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, panels: int = 1, order: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def gauss_legendre_breaks(breaks, order: int = 16):
    """Composite rule over consecutive intervals given by ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(order)
    half = 0.5 * np.diff(breaks)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def periodic_nodes(n: int, period: float = 2 * np.pi):
    """Equispaced trapezoid nodes on one period; weights sum to ``period``."""
    theta = period * np.arange(n) / n
    return theta, np.full(n, period / n)


def oscillation_panels(length: float, max_freq: float, per_panel: float = 2.0, minimum: int = 4) -> int:
    """Panel count so each 16-point panel sees at most ``per_panel`` radians/pi of phase."""
    phase = abs(length) * abs(max_freq)
    return max(minimum, int(np.ceil(phase / (np.pi * per_panel))))
