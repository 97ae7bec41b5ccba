"""Composite Gauss-Legendre helpers used by the integrators."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]; cached and read-only."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(lo, hi, n_panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule with ``n_panels`` equal panels on ``[lo, hi]``.

    ``lo`` and ``hi`` may be arrays of matching shape; the returned nodes and
    weights then carry an extra trailing axis of length ``n_panels * order``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x, w = gauss_legendre(order)
    width = (hi - lo) / n_panels
    starts = lo[..., None] + width[..., None] * np.arange(n_panels)
    half = 0.5 * width[..., None, None]
    nodes = starts[..., None] + half * (x + 1.0)
    weights = half * w * np.ones_like(nodes)
    shape = nodes.shape[:-2] + (n_panels * order,)
    return nodes.reshape(shape), weights.reshape(shape)


def breakpoint_rule(breaks, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on each interval between consecutive ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    weights = half * w
    return nodes.ravel(), weights.ravel()
