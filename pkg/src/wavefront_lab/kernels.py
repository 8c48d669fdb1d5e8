"""Normalized spatio-temporal kernels K(s, w) and their integral queries.

A kernel is a probability density (or measure) on ``[0, inf) x R`` where
``s`` is the delay and ``w`` the spatial offset.  Every family here admits
closed forms for its exponential moment

    M(z, c) = int int K(s, w) exp(-z (c s + w)) dw ds,

which is finite for ``0 <= z < gamma_sharp(c)``.  The quadrature route
(:func:`laplace_moment_quadrature`) evaluates the same integral numerically
and is kept independent of the closed forms so the two can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import quadrature
from .errors import AbscissaBoundary, IllFormedKernel

INF = math.inf
BOUNDARY_TOL = 1e-9
# tail mass dropped when a density is truncated for discretization
TAIL_EPS = 1e-16
_LOG_TAIL = -math.log(TAIL_EPS)


def _require_positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise IllFormedKernel(f"{name} must be positive and finite, got {value!r}")


# ---------------------------------------------------------------------------
# spatial kernels on R
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    variance: float
    mean: float = 0.0

    family = "gaussian"

    def __post_init__(self):
        _require_positive("variance", self.variance)

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        return np.exp(-0.5 * (w - self.mean) ** 2 / self.variance) / math.sqrt(2 * math.pi * self.variance)

    def mgf(self, z):
        return math.exp(-z * self.mean + 0.5 * z * z * self.variance)

    def dmgf(self, z):
        return (-self.mean + z * self.variance) * self.mgf(z)

    @property
    def abscissa(self):
        return INF

    @property
    def first_moment(self):
        return self.mean

    def atoms(self):
        return ()

    def support(self):
        half = math.sqrt(2 * self.variance * (_LOG_TAIL + 2))
        return self.mean - half, self.mean + half

    @property
    def breakpoints(self):
        return ()

    def to_dict(self):
        return {"family": self.family, "variance": self.variance, "mean": self.mean}


@dataclass(frozen=True)
class TwoSidedExponential:
    """Laplace density ``(rate/2) exp(-rate |w|)``."""

    rate: float

    family = "two_sided_exponential"

    def __post_init__(self):
        _require_positive("rate", self.rate)

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        return 0.5 * self.rate * np.exp(-self.rate * np.abs(w))

    def mgf(self, z):
        if z >= self.rate:
            return INF
        return self.rate ** 2 / (self.rate ** 2 - z * z)

    def dmgf(self, z):
        if z >= self.rate:
            return INF
        return 2 * z * self.rate ** 2 / (self.rate ** 2 - z * z) ** 2

    @property
    def abscissa(self):
        return self.rate

    @property
    def first_moment(self):
        return 0.0

    def atoms(self):
        return ()

    def support(self):
        half = (_LOG_TAIL + 1) / self.rate
        return -half, half

    @property
    def breakpoints(self):
        return (0.0,)

    def to_dict(self):
        return {"family": self.family, "rate": self.rate}


@dataclass(frozen=True)
class OneSidedExponential:
    """Exponential density on ``w >= 0`` (side='right') or ``w <= 0`` (side='left')."""

    rate: float
    side: str = "right"

    family = "one_sided_exponential"

    def __post_init__(self):
        _require_positive("rate", self.rate)
        if self.side not in ("left", "right"):
            raise IllFormedKernel(f"side must be 'left' or 'right', got {self.side!r}")

    @property
    def _sign(self):
        return 1.0 if self.side == "right" else -1.0

    def pdf(self, w):
        w = np.asarray(w, dtype=float) * self._sign
        return np.where(w >= 0, self.rate * np.exp(-self.rate * np.abs(w)), 0.0)

    def mgf(self, z):
        x = self._sign * z
        if x <= -self.rate:
            return INF
        return self.rate / (self.rate + x)

    def dmgf(self, z):
        x = self._sign * z
        if x <= -self.rate:
            return INF
        return -self._sign * self.rate / (self.rate + x) ** 2

    @property
    def abscissa(self):
        return INF if self.side == "right" else self.rate

    @property
    def first_moment(self):
        return self._sign / self.rate

    def atoms(self):
        return ()

    def support(self):
        far = (_LOG_TAIL + 1) / self.rate
        return (0.0, far) if self.side == "right" else (-far, 0.0)

    @property
    def breakpoints(self):
        return (0.0,)

    def to_dict(self):
        return {"family": self.family, "rate": self.rate, "side": self.side}


@dataclass(frozen=True)
class SpatialPointMass:
    a: float = 0.0

    family = "point_mass"

    pdf = None

    def mgf(self, z):
        return math.exp(-z * self.a)

    def dmgf(self, z):
        return -self.a * math.exp(-z * self.a)

    @property
    def abscissa(self):
        return INF

    @property
    def first_moment(self):
        return self.a

    def atoms(self):
        return ((self.a, 1.0),)

    def support(self):
        return self.a, self.a

    @property
    def breakpoints(self):
        return ()

    def to_dict(self):
        return {"family": self.family, "a": self.a}


SPATIAL_FAMILIES = {
    "gaussian": Gaussian,
    "two_sided_exponential": TwoSidedExponential,
    "one_sided_exponential": OneSidedExponential,
    "point_mass": SpatialPointMass,
}


# ---------------------------------------------------------------------------
# temporal kernels on [0, inf)
#
# mgf(a) = int rho(s) exp(-a s) ds for real a; finite for a > lower_abscissa.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TemporalPointMass:
    h: float = 0.0

    family = "point_mass"

    pdf = None

    def __post_init__(self):
        if not (self.h >= 0 and math.isfinite(self.h)):
            raise IllFormedKernel(f"delay h must be >= 0, got {self.h!r}")

    def mgf(self, a):
        return math.exp(-a * self.h)

    def dmgf(self, a):
        return -self.h * math.exp(-a * self.h)

    @property
    def lower_abscissa(self):
        return -INF

    @property
    def mean(self):
        return self.h

    def atoms(self):
        return ((self.h, 1.0),)

    def to_dict(self):
        return {"family": self.family, "h": self.h}


@dataclass(frozen=True)
class Exponential:
    """Exponential delay with ``rate``, shifted by ``delay``."""

    rate: float
    delay: float = 0.0

    family = "exponential"

    def __post_init__(self):
        _require_positive("rate", self.rate)
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            raise IllFormedKernel(f"delay must be >= 0, got {self.delay!r}")

    def pdf(self, s):
        x = np.asarray(s, dtype=float) - self.delay
        with np.errstate(over="ignore"):
            return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def mgf(self, a):
        if a <= -self.rate:
            return INF
        return math.exp(-a * self.delay) * self.rate / (self.rate + a)

    def dmgf(self, a):
        if a <= -self.rate:
            return INF
        m = self.mgf(a)
        return m * (-self.delay - 1.0 / (self.rate + a))

    @property
    def lower_abscissa(self):
        return -self.rate

    @property
    def mean(self):
        return self.delay + 1.0 / self.rate

    def atoms(self):
        return ()

    def support(self):
        return self.delay, self.delay + (_LOG_TAIL + 1) / self.rate

    @property
    def breakpoints(self):
        return (self.delay,)

    def to_dict(self):
        return {"family": self.family, "rate": self.rate, "delay": self.delay}


@dataclass(frozen=True)
class Hypoexponential:
    """Sum of two independent exponential delays (rates may coincide), shifted by ``delay``."""

    rate1: float
    rate2: float
    delay: float = 0.0

    family = "hypoexponential"

    def __post_init__(self):
        _require_positive("rate1", self.rate1)
        _require_positive("rate2", self.rate2)
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            raise IllFormedKernel(f"delay must be >= 0, got {self.delay!r}")

    def pdf(self, s):
        x = np.maximum(np.asarray(s, dtype=float) - self.delay, 0.0)
        a, b = self.rate1, self.rate2
        if abs(a - b) <= 1e-12 * max(a, b):
            val = a * a * x * np.exp(-a * x)
        else:
            val = a * b / (b - a) * (np.exp(-a * x) - np.exp(-b * x))
        return np.where(np.asarray(s, dtype=float) >= self.delay, val, 0.0)

    def mgf(self, a):
        if a <= self.lower_abscissa:
            return INF
        return math.exp(-a * self.delay) * self.rate1 * self.rate2 / ((self.rate1 + a) * (self.rate2 + a))

    def dmgf(self, a):
        if a <= self.lower_abscissa:
            return INF
        return self.mgf(a) * (-self.delay - 1.0 / (self.rate1 + a) - 1.0 / (self.rate2 + a))

    @property
    def lower_abscissa(self):
        return -min(self.rate1, self.rate2)

    @property
    def mean(self):
        return self.delay + 1.0 / self.rate1 + 1.0 / self.rate2

    def atoms(self):
        return ()

    def support(self):
        slow = min(self.rate1, self.rate2)
        return self.delay, self.delay + (_LOG_TAIL + 6) / slow

    @property
    def breakpoints(self):
        return (self.delay,)

    def to_dict(self):
        return {"family": self.family, "rate1": self.rate1, "rate2": self.rate2, "delay": self.delay}


@dataclass(frozen=True)
class TemporalMixture:
    components: tuple

    family = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple((float(w), k) for w, k in self.components))
        _check_weights([w for w, _ in self.components])

    def mgf(self, a):
        return sum(w * k.mgf(a) for w, k in self.components)

    def dmgf(self, a):
        return sum(w * k.dmgf(a) for w, k in self.components)

    @property
    def lower_abscissa(self):
        return max(k.lower_abscissa for _, k in self.components)

    @property
    def mean(self):
        return sum(w * k.mean for w, k in self.components)

    def to_dict(self):
        return {"family": self.family,
                "components": [{"weight": w, "kernel": k.to_dict()} for w, k in self.components]}


TEMPORAL_FAMILIES = {
    "point_mass": TemporalPointMass,
    "exponential": Exponential,
    "hypoexponential": Hypoexponential,
    "mixture": TemporalMixture,
}


def _check_weights(weights):
    if not weights:
        raise IllFormedKernel("mixture needs at least one component")
    if any(w < 0 or not math.isfinite(w) for w in weights):
        raise IllFormedKernel(f"mixture weights must be nonnegative, got {weights}")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise IllFormedKernel(f"mixture weights must sum to 1, got sum {sum(weights)!r}")


def _temporal_abscissa(lower, c):
    """Largest z with z*c > lower (the temporal transform's domain in z)."""
    if lower == -INF or c >= 0:
        return INF
    return lower / c


# ---------------------------------------------------------------------------
# the projected line kernel k2(r) = int K(s, r - c s) ds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityPiece:
    """``weight * pdf(r)`` where pdf has unit mass.

    ``lo, hi`` bound the region holding all but ``TAIL_EPS`` of the mass;
    ``full`` is the true support used for transforms.
    """

    weight: float
    pdf: Callable
    lo: float
    hi: float
    full: tuple
    breakpoints: tuple = ()


@dataclass(frozen=True)
class LineKernel:
    atoms: tuple = ()
    pieces: tuple = ()

    @property
    def mass(self):
        return sum(w for _, w in self.atoms) + sum(p.weight for p in self.pieces)

    def scaled(self, factor):
        return LineKernel(
            tuple((r, w * factor) for r, w in self.atoms),
            tuple(DensityPiece(p.weight * factor, p.pdf, p.lo, p.hi, p.full, p.breakpoints)
                  for p in self.pieces))

    def __add__(self, other):
        return LineKernel(self.atoms + other.atoms, self.pieces + other.pieces)

    def quadrature_mass(self):
        """Mass with each density integrated directly over its support."""
        total = sum(w for _, w in self.atoms)
        for p in self.pieces:
            if isinstance(p.pdf, _ProjectedPdf):
                a, b = p.pdf.factors()
                total += p.weight * a.quadrature_mass() * b.quadrature_mass()
                continue
            f = lambda r, p=p: float(p.pdf(r))
            total += p.weight * _finite(f, p.lo, p.hi, p.breakpoints)
        return total

    def transform(self, z):
        """Bilateral transform ``int k(r) exp(-z r) dr`` by quadrature."""
        total = sum(w * math.exp(-z * r) for r, w in self.atoms)
        for p in self.pieces:
            if isinstance(p.pdf, _ProjectedPdf):
                q = p.pdf
                try:
                    total += p.weight * (_temporal_moment_quad(q.temporal, z * q.c)
                                         * _spatial_moment_quad(q.spatial, z))
                except quadrature.Divergent:
                    return INF
                continue
            f = _weighted(p.pdf, z)
            lo, hi = p.full
            center = 0.5 * (p.lo + p.hi)
            scale = max((p.hi - p.lo) / 8, 1e-3)
            center = min(max(center, lo), hi)
            val = 0.0
            try:
                val += self._density_transform(f, lo, hi, center, scale, p.breakpoints)
            except quadrature.Divergent:
                return INF
            total += p.weight * val
        return total

    @staticmethod
    def _density_transform(f, lo, hi, center, scale, breakpoints):
        val = 0.0
        if lo == -INF:
            val += quadrature.half_line(f, center, -1, scale, breakpoints)
        else:
            val += _finite(f, lo, center, breakpoints)
        if hi == INF:
            val += quadrature.half_line(f, center, 1, scale, breakpoints)
        else:
            val += _finite(f, center, hi, breakpoints)
        return val

    def discretize(self, h, n_gauss=8):
        """Weights ``w_j`` at offsets ``r_j = j h`` so that
        ``sum_j w_j G(t - r_j)`` equals ``int k(r) G(t - r) dr`` for the
        piecewise-linear interpolant of G on the grid.

        Returns ``(jmin, w)``.  Density mass is renormalized so that
        ``w.sum()`` reproduces the exact kernel mass.
        """
        entries = {}

        def add(j, val):
            entries[j] = entries.get(j, 0.0) + val

        for r, wt in self.atoms:
            x = r / h
            j0 = math.floor(x)
            theta = x - j0
            if theta > 1 - 1e-13:
                j0, theta = j0 + 1, 0.0
            add(j0, wt * (1 - theta))
            if theta > 0:
                add(j0 + 1, wt * theta)
        nodes, gw = quadrature.gauss_legendre(n_gauss)
        for p in self.pieces:
            if isinstance(p.pdf, _ProjectedPdf):
                # k2 is the convolution of the ray-scaled delay law with the
                # spatial law; discretize each factor and convolve the weights
                ja, wa = p.pdf.factors()[0].discretize(h, n_gauss)
                jb, wb = p.pdf.factors()[1].discretize(h, n_gauss)
                wc = np.convolve(wa, wb)
                wc *= p.weight / wc.sum()
                for k, v in enumerate(wc.tolist()):
                    add(ja + jb + k, v)
                continue
            j_lo = math.floor(p.lo / h)
            j_hi = math.ceil(p.hi / h)
            edges = np.arange(j_lo, j_hi + 1) * h
            # the support ends matter when the piece is narrower than a cell
            inner = {b for b in p.breakpoints if p.lo < b < p.hi} | {p.lo, p.hi}
            cuts = sorted(set(edges.tolist()) | inner)
            cuts = np.array(cuts)
            a, b = cuts[:-1], cuts[1:]
            cell = np.floor((0.5 * (a + b)) / h).astype(int)
            width = b - a
            x = a[:, None] + width[:, None] * nodes[None, :]
            vals = p.pdf(x) * (width[:, None] * gw[None, :])
            u = x / h - cell[:, None]
            left = (vals * (1 - u)).sum(axis=1)
            right = (vals * u).sum(axis=1)
            piece = {}
            for j, lv, rv in zip(cell.tolist(), left.tolist(), right.tolist()):
                piece[j] = piece.get(j, 0.0) + lv
                piece[j + 1] = piece.get(j + 1, 0.0) + rv
            got = sum(piece.values())
            if got <= 0:
                raise IllFormedKernel("density piece has no mass on its support")
            norm = p.weight / got
            for j, v in piece.items():
                add(j, v * norm)
        jmin, jmax = min(entries), max(entries)
        w = np.zeros(jmax - jmin + 1)
        for j, v in entries.items():
            w[j - jmin] += v
        return jmin, w


def _weighted(pdf, z):
    """Scalar integrand ``pdf(x) * exp(-z x)``; zero where the density underflows."""
    def fn(x):
        d = float(pdf(x))
        if d <= 0.0:
            return 0.0
        e = math.log(d) - z * x
        return math.exp(e) if e < 709.0 else math.inf
    return fn


def _scalar(fn):
    def wrapped(x):
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                return fn(x)
            except OverflowError:
                return math.inf
    return wrapped


def _finite(fn, a, b, breakpoints):
    if b <= a:
        return 0.0
    pts = [q for q in breakpoints if a < q < b]
    val, _ = integrate.quad(fn, a, b, epsabs=quadrature.EPSABS, epsrel=1e-12,
                            limit=200, points=pts or None)
    return val


def _shifted_spatial(spatial, shift, weight=1.0):
    atoms = tuple((a + shift, weight * m) for a, m in spatial.atoms())
    if spatial.pdf is None:
        return LineKernel(atoms)
    lo, hi = spatial.support()
    full = _spatial_full_support(spatial)
    piece = DensityPiece(weight, lambda r, s=spatial, d=shift: s.pdf(np.asarray(r) - d),
                         lo + shift, hi + shift, (full[0] + shift, full[1] + shift),
                         tuple(b + shift for b in spatial.breakpoints))
    return LineKernel(atoms, (piece,))


def _spatial_full_support(spatial):
    if isinstance(spatial, OneSidedExponential):
        return (0.0, INF) if spatial.side == "right" else (-INF, 0.0)
    return (-INF, INF)


class _ProjectedPdf:
    """``r -> int rho(s) K0(r - c s) ds`` evaluated by vector quadrature."""

    def __init__(self, temporal, spatial, c):
        self.temporal, self.spatial, self.c = temporal, spatial, c

    def factors(self):
        """The two line kernels whose convolution is this density."""
        return (_project_product(self.temporal, SpatialPointMass(0.0), self.c),
                _shifted_spatial(self.spatial, 0.0))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        s_lo, s_hi = self.temporal.support()
        pts = tuple(self.temporal.breakpoints)

        def integrand(s):
            return float(self.temporal.pdf(s)) * self.spatial.pdf(flat - self.c * s)

        val, _ = integrate.quad_vec(integrand, s_lo, s_hi, epsabs=1e-15, epsrel=1e-11,
                                    points=[p for p in pts if s_lo < p < s_hi] or None)
        return np.asarray(val).reshape(r.shape)


def _project_product(temporal, spatial, c, weight=1.0):
    if isinstance(temporal, TemporalMixture):
        out = LineKernel()
        for w, comp in temporal.components:
            out = out + _project_product(comp, spatial, c, weight * w)
        return out
    if temporal.pdf is None:
        return _shifted_spatial(spatial, c * temporal.h, weight)
    s_lo, s_hi = temporal.support()
    if abs(c) * (s_hi - s_lo) < 1e-12:
        # the delay law collapses to (nearly) a point on the ray
        return _shifted_spatial(spatial, c * temporal.mean, weight)
    if spatial.pdf is None:
        a = spatial.a
        ends = sorted((a + c * s_lo, a + c * s_hi))
        s_full = (temporal.breakpoints[0], INF)
        full = tuple(sorted((a + c * s_full[0], math.copysign(INF, c))))
        pdf = lambda r, t=temporal, a=a, c=c: t.pdf((np.asarray(r) - a) / c) / abs(c)
        return LineKernel((), (DensityPiece(weight, pdf, ends[0], ends[1], full,
                                            tuple(a + c * b for b in temporal.breakpoints)),))
    w_lo, w_hi = spatial.support()
    ends = sorted((c * s_lo, c * s_hi))
    lo, hi = ends[0] + w_lo, ends[1] + w_hi
    return LineKernel((), (DensityPiece(weight, _ProjectedPdf(temporal, spatial, c), lo, hi,
                                        (-INF, INF), ()),))


# ---------------------------------------------------------------------------
# spatio-temporal kernels
# ---------------------------------------------------------------------------

class SpatioTemporalKernel:
    """Common interface; concrete families are frozen dataclasses below."""

    def laplace_moment(self, z, c):  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(SpatioTemporalKernel):
    """Delta at delay ``h`` and spatial offset ``a``."""

    h: float = 0.0
    a: float = 0.0

    family = "point_mass"

    def __post_init__(self):
        TemporalPointMass(self.h)

    def _closed(self, z, c):
        return math.exp(-z * (c * self.h + self.a))

    def _dclosed(self, z, c):
        x = c * self.h + self.a
        return -x * math.exp(-z * x)

    def abscissa(self, c):
        return INF

    def moments(self):
        return 1.0, self.h, self.a

    def project(self, c):
        return LineKernel(((c * self.h + self.a, 1.0),))

    def separable_parts(self):
        return [(1.0, TemporalPointMass(self.h), SpatialPointMass(self.a))]

    def to_dict(self):
        return {"family": self.family, "h": self.h, "a": self.a}


@dataclass(frozen=True)
class SeparableDeltaTime(SpatioTemporalKernel):
    """``delta(s - h) * spatial(w)``."""

    h: float
    spatial: object

    family = "delta_time"

    def __post_init__(self):
        TemporalPointMass(self.h)

    def _closed(self, z, c):
        m = self.spatial.mgf(z)
        return math.exp(-z * c * self.h) * m if m != INF else INF

    def _dclosed(self, z, c):
        e = math.exp(-z * c * self.h)
        return e * (self.spatial.dmgf(z) - c * self.h * self.spatial.mgf(z))

    def abscissa(self, c):
        return self.spatial.abscissa

    def moments(self):
        return 1.0, self.h, self.spatial.first_moment

    def project(self, c):
        return _shifted_spatial(self.spatial, c * self.h)

    def separable_parts(self):
        return [(1.0, TemporalPointMass(self.h), self.spatial)]

    def to_dict(self):
        return {"family": self.family, "h": self.h, "spatial": self.spatial.to_dict()}


@dataclass(frozen=True)
class SeparableProduct(SpatioTemporalKernel):
    """``temporal(s) * spatial(w)``."""

    temporal: object
    spatial: object

    family = "product"

    def _closed(self, z, c):
        t = self.temporal.mgf(z * c)
        s = self.spatial.mgf(z)
        if t == INF or s == INF:
            return INF
        return t * s

    def _dclosed(self, z, c):
        return (c * self.temporal.dmgf(z * c) * self.spatial.mgf(z)
                + self.temporal.mgf(z * c) * self.spatial.dmgf(z))

    def abscissa(self, c):
        return min(self.spatial.abscissa, _temporal_abscissa(self.temporal.lower_abscissa, c))

    def moments(self):
        return 1.0, self.temporal.mean, self.spatial.first_moment

    def project(self, c):
        return _project_product(self.temporal, self.spatial, c)

    def separable_parts(self):
        if isinstance(self.temporal, TemporalMixture):
            return [(w, t, self.spatial) for w, t in self.temporal.components]
        return [(1.0, self.temporal, self.spatial)]

    def to_dict(self):
        return {"family": self.family, "temporal": self.temporal.to_dict(),
                "spatial": self.spatial.to_dict()}


@dataclass(frozen=True)
class Mixture(SpatioTemporalKernel):
    components: tuple

    family = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple((float(w), k) for w, k in self.components))
        _check_weights([w for w, _ in self.components])

    def _closed(self, z, c):
        total = 0.0
        for w, k in self.components:
            v = k._closed(z, c)
            if v == INF and w > 0:
                return INF
            total += w * v
        return total

    def _dclosed(self, z, c):
        return sum(w * k._dclosed(z, c) for w, k in self.components)

    def abscissa(self, c):
        return min(k.abscissa(c) for w, k in self.components if w > 0)

    def moments(self):
        mass = mt = ms = 0.0
        for w, k in self.components:
            m0, m1, m2 = k.moments()
            mass += w * m0
            mt += w * m1
            ms += w * m2
        return mass, mt, ms

    def project(self, c):
        out = LineKernel()
        for w, k in self.components:
            if w > 0:
                out = out + k.project(c).scaled(w)
        return out

    def separable_parts(self):
        return [(w * wi, t, s) for w, k in self.components for wi, t, s in k.separable_parts()]

    def to_dict(self):
        return {"family": self.family,
                "components": [{"weight": w, "kernel": k.to_dict()} for w, k in self.components]}


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentReport:
    mass: float
    mean_time: float
    mean_space: float


def kernel_mass(K):
    """Total mass of K (exactly 1 for well-formed kernels)."""
    if isinstance(K, Mixture):
        return sum(w * kernel_mass(k) for w, k in K.components)
    return 1.0


def convergence_abscissa(K, c):
    """gamma_sharp(c): supremum of z >= 0 with a finite exponential moment."""
    return K.abscissa(c)


def laplace_moment(K, z, c):
    """Exponential moment ``M(z, c)``; ``inf`` beyond the abscissa."""
    if z < 0:
        raise ValueError(f"z must be >= 0, got {z}")
    g = K.abscissa(c)
    if g != INF and abs(z - g) <= BOUNDARY_TOL * max(1.0, g):
        raise AbscissaBoundary(f"z={z} is at the convergence abscissa {g}", abscissa=g)
    if z > g:
        return INF
    return K._closed(z, c)


def laplace_moment_dz(K, z, c):
    """Derivative of :func:`laplace_moment` in z (inside the abscissa)."""
    g = K.abscissa(c)
    if z >= g:
        return INF
    return K._dclosed(z, c)


def first_moments(K):
    return MomentReport(*K.moments())


def build_k2(K, c):
    """Project K along rays ``r = c s + w``: ``k2(r) = int K(s, r - c s) ds``."""
    return K.project(c)


# -- quadrature route --------------------------------------------------------

def _spatial_moment_quad(spatial, z):
    if spatial.pdf is None:
        return sum(m * math.exp(-z * a) for a, m in spatial.atoms())
    f = _weighted(spatial.pdf, z)
    lo, hi = _spatial_full_support(spatial)
    center = spatial.first_moment if lo == -INF and hi == INF else (0.0)
    scale = 1.0 / getattr(spatial, "rate", 1.0 / math.sqrt(getattr(spatial, "variance", 1.0)))
    total = 0.0
    if lo == -INF:
        total += quadrature.half_line(f, center, -1, scale, spatial.breakpoints)
    if hi == INF:
        total += quadrature.half_line(f, center, 1, scale, spatial.breakpoints)
    return total


def _temporal_moment_quad(temporal, a):
    if isinstance(temporal, TemporalMixture):
        return sum(w * _temporal_moment_quad(t, a) for w, t in temporal.components)
    if temporal.pdf is None:
        return math.exp(-a * temporal.h)
    f = _weighted(temporal.pdf, a)
    d = temporal.breakpoints[0]
    scale = temporal.mean - d
    return quadrature.half_line(f, d, 1, scale)


def laplace_moment_quadrature(K, z, c):
    """Exponential moment by adaptive quadrature; ``inf`` when divergent.

    Separable parts factor into a temporal and a spatial integral, each
    evaluated on half-lines with window doubling.
    """
    total = 0.0
    for w, temporal, spatial in K.separable_parts():
        if w == 0:
            continue
        try:
            t = _temporal_moment_quad(temporal, z * c)
            s = _spatial_moment_quad(spatial, z)
        except quadrature.Divergent:
            return INF
        total += w * t * s
    return total


def numeric_abscissa(K, c, rtol=1e-6):
    """gamma_sharp(c) located by doubling and bisection on the quadrature route."""
    def finite(z):
        return math.isfinite(laplace_moment_quadrature(K, z, c))
    return quadrature.locate_divergence(finite, rtol=rtol)


# -- (de)serialization -------------------------------------------------------

def _num(d, key, default=None, path=""):
    from .errors import ConfigError
    if key not in d:
        if default is None:
            raise ConfigError(f"missing field '{key}'", f"{path}.{key}" if path else key)
        return default
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}", f"{path}.{key}")
    return float(v)


def spatial_from_dict(d, path="spatial"):
    from .errors import ConfigError
    if not isinstance(d, dict) or "family" not in d:
        raise ConfigError("expected an object with a 'family' field", path)
    fam = d["family"]
    try:
        if fam == "gaussian":
            return Gaussian(_num(d, "variance", path=path), _num(d, "mean", 0.0, path))
        if fam == "two_sided_exponential":
            return TwoSidedExponential(_num(d, "rate", path=path))
        if fam == "one_sided_exponential":
            return OneSidedExponential(_num(d, "rate", path=path), d.get("side", "right"))
        if fam == "point_mass":
            return SpatialPointMass(_num(d, "a", 0.0, path))
    except IllFormedKernel as exc:
        raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown spatial family {fam!r}", f"{path}.family")


def temporal_from_dict(d, path="temporal"):
    from .errors import ConfigError
    if not isinstance(d, dict) or "family" not in d:
        raise ConfigError("expected an object with a 'family' field", path)
    fam = d["family"]
    try:
        if fam == "point_mass":
            return TemporalPointMass(_num(d, "h", 0.0, path))
        if fam == "exponential":
            return Exponential(_num(d, "rate", path=path), _num(d, "delay", 0.0, path))
        if fam == "hypoexponential":
            return Hypoexponential(_num(d, "rate1", path=path), _num(d, "rate2", path=path),
                                   _num(d, "delay", 0.0, path))
        if fam == "mixture":
            comps = _components(d, path, temporal_from_dict)
            return TemporalMixture(comps)
    except IllFormedKernel as exc:
        raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown temporal family {fam!r}", f"{path}.family")


def _components(d, path, parse):
    from .errors import ConfigError
    comps = d.get("components")
    if not isinstance(comps, list):
        raise ConfigError("expected a list", f"{path}.components")
    out = []
    for i, item in enumerate(comps):
        p = f"{path}.components[{i}]"
        if not isinstance(item, dict) or "kernel" not in item:
            raise ConfigError("expected {'weight': .., 'kernel': {..}}", p)
        out.append((_num(item, "weight", path=p), parse(item["kernel"], f"{p}.kernel")))
    return out


def kernel_from_dict(d, path="kernel"):
    """Parse a spatio-temporal kernel from its JSON form (``family`` discriminator)."""
    from .errors import ConfigError
    if not isinstance(d, dict) or "family" not in d:
        raise ConfigError("expected an object with a 'family' field", path)
    fam = d["family"]
    try:
        if fam == "point_mass":
            return PointMass(_num(d, "h", 0.0, path), _num(d, "a", 0.0, path))
        if fam == "delta_time":
            if "spatial" not in d:
                raise ConfigError("missing field 'spatial'", f"{path}.spatial")
            return SeparableDeltaTime(_num(d, "h", 0.0, path), spatial_from_dict(d["spatial"], f"{path}.spatial"))
        if fam == "product":
            for key in ("temporal", "spatial"):
                if key not in d:
                    raise ConfigError(f"missing field '{key}'", f"{path}.{key}")
            return SeparableProduct(temporal_from_dict(d["temporal"], f"{path}.temporal"),
                                    spatial_from_dict(d["spatial"], f"{path}.spatial"))
        if fam == "mixture":
            return Mixture(_components(d, path, kernel_from_dict))
    except IllFormedKernel as exc:
        raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown kernel family {fam!r}", f"{path}.family")
