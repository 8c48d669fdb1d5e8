"""Adaptive quadrature on half-lines with divergence detection.

The integrals here are exponential moments of kernel densities.  They are
evaluated on a growing sequence of truncation windows; each new slab is
integrated with QUADPACK's Gauss-Kronrod rule.  An integral is declared
divergent when two successive window doublings each grow it by more than
a factor of ten.
"""

import math
import warnings

import numpy as np
from scipy import integrate

EPSABS = 1e-14
EPSREL = 1e-10
MAX_DOUBLINGS = 60


class Divergent(Exception):
    """Raised internally when a half-line integral blows up."""


def _slab(fn, a, b, breakpoints=()):
    pts = [p for p in breakpoints if a < p < b]
    with warnings.catch_warnings():
        # slabs far past a convergence abscissa legitimately stall; the
        # window-doubling logic above them decides divergence
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fn, a, b, epsabs=EPSABS, epsrel=EPSREL,
                                limit=200, points=pts or None)
    return val


def half_line(fn, start, direction=1, scale=1.0, breakpoints=()):
    """Integrate ``fn`` over ``[start, inf)`` (direction=1) or ``(-inf, start]``.

    ``scale`` is the initial window width.  Raises :class:`Divergent` when the
    partial integrals blow up.
    """
    width = float(scale)
    lo, hi = (start, start + width) if direction > 0 else (start - width, start)
    try:
        total = _slab(fn, lo, hi, breakpoints)
    except OverflowError as exc:
        raise Divergent(str(exc)) from exc
    growth_hits = 0
    for _ in range(MAX_DOUBLINGS):
        if direction > 0:
            a, b = start + width, start + 2 * width
        else:
            a, b = start - 2 * width, start - width
        try:
            inc = _slab(fn, a, b, breakpoints)
        except OverflowError as exc:
            raise Divergent(str(exc)) from exc
        if not math.isfinite(inc):
            raise Divergent("non-finite slab")
        new_total = total + inc
        if total > 0 and new_total > 10.0 * total:
            growth_hits += 1
            if growth_hits >= 2:
                raise Divergent("window doubling growth")
        else:
            growth_hits = 0
        width *= 2
        if abs(inc) <= max(EPSABS, 1e-15 * abs(new_total)):
            return new_total
        total = new_total
    raise Divergent("no convergence after window doublings")


def whole_line(fn, center=0.0, scale=1.0, breakpoints=()):
    """Integrate ``fn`` over the real line, split at ``center``."""
    return (half_line(fn, center, -1, scale, breakpoints)
            + half_line(fn, center, 1, scale, breakpoints))


def locate_divergence(is_finite, start=1.0, z_max=1e6, rtol=1e-6):
    """Supremum of ``z >= 0`` where the predicate ``is_finite(z)`` holds.

    Doubling from ``start`` brackets the transition, bisection refines it.
    Returns ``math.inf`` when no transition is found below ``z_max``.
    """
    lo, hi = 0.0, float(start)
    while is_finite(hi):
        lo, hi = hi, 2 * hi
        if hi > z_max:
            return math.inf
    while hi - lo > rtol * max(hi, 1e-12):
        mid = 0.5 * (lo + hi)
        if is_finite(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gauss_legendre(n):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
