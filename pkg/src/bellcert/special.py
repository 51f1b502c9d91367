"""Special functions and quadrature rules used by the closed forms and the oracle."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import NumericFailure


def ellip_e(k: float, tol: float = 1e-15) -> float:
    """Complete elliptic integral of the second kind, E(k) = ∫₀^{π/2} √(1 − k² sin²φ) dφ.

    Uses the arithmetic-geometric mean.  ``k`` is the modulus, not the parameter.
    """
    k = abs(float(k))
    if k > 1.0:
        raise ValueError("modulus must satisfy |k| <= 1")
    if k == 1.0:
        return 1.0
    a, b = 1.0, math.sqrt(1.0 - k * k)
    acc = 0.5 * k * k
    power = 0.5
    for _ in range(64):
        if abs(a - b) <= tol * a:
            return math.pi / (2.0 * a) * (1.0 - acc)
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        acc += power * c * c
    raise NumericFailure("AGM iteration did not converge", best=math.pi / (2.0 * a) * (1.0 - acc))


@lru_cache(maxsize=8)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, order: int = 32):
    """Nodes and weights of an ``order``-point Gauss–Legendre rule on [a, b]."""
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return (a + b) * 0.5 + half * x, half * w


def graded_rule(a: float, b: float, focus: float, scale: float, order: int = 24):
    """Composite Gauss–Legendre rule on [a, b] refined geometrically toward ``focus``.

    Intended for integrands that are smooth except for a near-singularity of width
    ``scale`` at ``focus`` (for example √(c² + x²) near x = 0).  ``focus`` is always a
    panel boundary, so an exact kink at ``focus`` is integrated to full precision.
    """
    if not a < b:
        raise ValueError("need a < b")
    focus = min(max(focus, a), b)
    scale = max(float(scale), 1e-300)
    breaks = {a, b, focus}
    for side, end in ((-1.0, a), (1.0, b)):
        span = abs(end - focus)
        if span == 0.0:
            continue
        h = min(scale / 16.0, span)
        while h < span:
            breaks.add(focus + side * h)
            h *= 2.0
    pts = np.array(sorted(breaks))
    xs, ws = [], []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo:
            x, w = gauss_legendre(lo, hi, order)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` near-uniform unit vectors on a golden-angle spiral."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(n)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
