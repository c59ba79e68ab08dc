"""Gauss-Legendre quadrature over knot spans.

Integrals of piecewise polynomials are computed span by span with just
enough nodes to be exact, so quadrature never contributes visible error
to Gram assembly or spline-against-spline pairings.  Non-polynomial
integrands get a fixed high-order composite rule whose panels split at
declared breakpoints.
"""

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    """m-point Gauss-Legendre rule on [-1, 1] (cached)."""
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


def nodes_for_degree(p: int) -> int:
    """Node count whose Gauss-Legendre rule is exact for degree p."""
    return max(1, math.ceil((p + 1) / 2))


def panel_rule(a: float, b: float, m: int):
    """Nodes and weights for integration over [a, b]."""
    x, w = gauss_legendre(m)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_rule(breaks, m: int, depth: int = 1):
    """Composite rule over consecutive pieces of a sorted break array.

    Each positive-length piece is split into `depth` equal panels with m
    Gauss-Legendre nodes per panel.  Zero-length pieces are skipped.
    Returns flat (nodes, weights) arrays.
    """
    breaks = np.asarray(breaks, dtype=float)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        edges = np.linspace(a, b, depth + 1) if depth > 1 else (a, b)
        for c, d in zip(edges[:-1], edges[1:]):
            x, w = panel_rule(c, d, m)
            nodes.append(x)
            weights.append(w)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def merge_breaks(primary, extra, lo: float, hi: float) -> np.ndarray:
    """Sorted unique breakpoints covering [lo, hi], keeping only interior
    extras.  `primary` must already contain lo and hi."""
    pts = [np.asarray(primary, dtype=float)]
    extra = np.asarray(extra, dtype=float)
    if extra.size:
        inside = extra[(extra > lo) & (extra < hi)]
        if inside.size:
            pts.append(inside)
    merged = np.unique(np.concatenate(pts))
    return merged[(merged >= lo) & (merged <= hi)]
