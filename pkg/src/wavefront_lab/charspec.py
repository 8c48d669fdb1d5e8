"""Characteristic functions, their positive roots and the minimal speeds.

The generalized characteristic function is

    R(z, c) = z^2 - c z - q + p M(z, c),   M = exponential moment of K,

strictly convex in z, strictly decreasing in c for z > 0, with
``R(0, c) = p - q > 0``.  ``chi0`` uses ``(p, q) = (g'(0), f'(0))`` and
``chiL`` uses ``(L, inf f')``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

from scipy import optimize

from . import kernels
from .errors import AbscissaBoundary, BracketFailure, DenominatorNearZero
from .green import build_k1
from .parallel import pmap

ROOT_TOL_R = 1e-10
ROOT_TOL_Z = 1e-12
SPEED_TOL = 1e-9
C_LIMIT = 1e6

NON_EXISTENT = "NonExistent"
UNIQUE_IF_EXISTS = "UniqueIfExists"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class CharParams:
    p: float
    q: float
    kernel: object

    def __post_init__(self):
        if not (self.q >= 0 and self.p > self.q):
            raise ValueError(f"need p > q >= 0, got p={self.p}, q={self.q}")


@dataclass(frozen=True)
class RootPair:
    lambda1: float
    lambda2: float | None
    mu_q: float
    multiplicity_two: bool = False


def mu_q(c, q):
    """Positive root of ``z^2 - c z - q``."""
    return 0.5 * (c + math.sqrt(c * c + 4 * q))


def mu_of(c, beta):
    return mu_q(c, beta)


def eval_R(params, z, c):
    m = kernels.laplace_moment(params.kernel, z, c)
    if m == math.inf:
        return math.inf
    return z * z - c * z - params.q + params.p * m


def eval_R_dz(params, z, c):
    dm = kernels.laplace_moment_dz(params.kernel, z, c)
    if dm == math.inf:
        return math.inf
    return 2 * z - c + params.p * dm


def _minimizer(params, c, bound):
    """Convex minimizer of R on [0, bound] by bisection on the derivative."""
    if eval_R_dz(params, 0.0, c) >= 0:
        return 0.0
    if eval_R_dz(params, bound, c) <= 0:
        return bound
    lo, hi = 0.0, bound
    while hi - lo > ROOT_TOL_Z * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if eval_R_dz(params, mid, c) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _safe_R(params, z, c):
    try:
        return eval_R(params, z, c)
    except AbscissaBoundary:
        return math.inf


def _upper_bound(params, c):
    return min(kernels.convergence_abscissa(params.kernel, c), mu_q(c, params.q))


def find_positive_roots(params, c):
    """Positive roots of R(., c), or ``None`` when there are none.

    Raises :class:`AbscissaBoundary` when the minimizer runs into a finite
    abscissa, with the one-sided limit of R attached.
    """
    gamma = kernels.convergence_abscissa(params.kernel, c)
    mq = mu_q(c, params.q)
    bound = min(gamma, mq)
    if bound <= 0:
        return None
    zmin = _minimizer(params, c, bound)
    if zmin == 0.0:
        return None
    if gamma < mq and gamma - zmin <= kernels.BOUNDARY_TOL * max(1.0, gamma):
        lim, _ = boundary_limit(params, c)
        raise AbscissaBoundary(f"minimizer of R reaches the abscissa {gamma}", abscissa=gamma, limit=lim)
    rmin = _safe_R(params, zmin, c)
    if rmin > ROOT_TOL_R:
        return None
    if abs(rmin) <= ROOT_TOL_R:
        return RootPair(zmin, zmin, mq, True)
    f = lambda z: eval_R(params, z, c)
    lam1 = optimize.brentq(f, 0.0, zmin, xtol=ROOT_TOL_Z, rtol=1e-15, maxiter=500)
    # approach the bound from below until R is finite and positive
    hi = bound
    r_hi = _safe_R(params, hi, c)
    k = 0
    while not (math.isfinite(r_hi) and r_hi > 0) and k < 60:
        k += 1
        hi = bound - (bound - zmin) * 0.5 ** k
        r_hi = _safe_R(params, hi, c)
    if not (math.isfinite(r_hi) and r_hi > 0):
        raise AbscissaBoundary(f"lambda2 lies within the boundary band of the abscissa {gamma}",
                               abscissa=gamma, limit=math.inf)
    lam2 = optimize.brentq(f, zmin, hi, xtol=ROOT_TOL_Z, rtol=1e-15, maxiter=500)
    return RootPair(lam1, lam2, mq, False)


def min_R(params, c):
    """``min_z R(z, c)`` over ``[0, min(gamma_sharp, mu_q)]``."""
    bound = _upper_bound(params, c)
    if bound <= 0:
        return params.p - params.q
    zmin = _minimizer(params, c, bound)
    r = _safe_R(params, zmin, c)
    if not math.isfinite(r):
        lim, _ = boundary_limit(params, c)
        return lim
    return r


@lru_cache(maxsize=256)
def minimal_speed(params):
    """``c#``: the smallest speed at which R(., c) has a positive zero.

    Returns ``(c_sharp, RootPair)`` where the pair holds the double root at
    ``c_sharp``.
    """
    m = lambda c: min_R(params, c)
    if m(0.0) <= 0:
        hi, lo = 0.0, -1.0
        while m(lo) <= 0:
            hi, lo = lo, 2 * lo
            if abs(lo) > C_LIMIT:
                raise BracketFailure("no speed without roots found above -1e6")
    else:
        lo, hi = 0.0, 1.0
        while m(hi) > 0:
            lo, hi = hi, 2 * hi
            if hi > C_LIMIT:
                raise BracketFailure("no speed with roots found below 1e6")
    c_sharp = optimize.brentq(m, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=500)
    zc = _minimizer(params, c_sharp, _upper_bound(params, c_sharp))
    return c_sharp, RootPair(zc, zc, mu_q(c_sharp, params.q), True)


def speed_lower_bound(g_prime0, K):
    """Lower bound ``-g'(0) E[w] / (1 + g'(0) E[s])`` for admissible speeds."""
    mom = kernels.first_moments(K)
    return 0.0 - g_prime0 * mom.mean_space / (1.0 + g_prime0 * mom.mean_time)


def gamma_K(c, beta, K):
    return min(mu_of(c, beta), kernels.convergence_abscissa(K, c))


def boundary_limit(params, c, nodes=4, rel_step=1e-2):
    """One-sided limit ``R(gamma_sharp-, c)`` by Richardson extrapolation.

    Returns ``(value, error_estimate)``.  A pole is reported as ``(inf, 0)``;
    an infinite abscissa gives ``(inf, 0)`` as well since R grows without bound.
    """
    g = kernels.convergence_abscissa(params.kernel, c)
    if not math.isfinite(g):
        return math.inf, 0.0
    d = rel_step * g
    hs = [d / 2 ** k for k in range(nodes)]
    vals = [eval_R(params, g - hk, c) for hk in hs]
    # a pole ~ 1/(gamma - z): increments grow at every halving
    growth = [vals[k + 1] - vals[k] for k in range(nodes - 1)]
    if all(math.isfinite(v) for v in vals) and all(
            growth[k + 1] > 1.5 * growth[k] > 0 for k in range(len(growth) - 1)):
        return math.inf, 0.0
    # Neville table in h with extrapolation to h = 0
    table = list(vals)
    prev = None
    for level in range(1, nodes):
        prev = table[-1]
        table = [(hs[i] * table[i + 1] - hs[i + level] * table[i]) / (hs[i] - hs[i + level])
                 for i in range(len(table) - 1)]
    value = table[0]
    err = abs(value - prev) if prev is not None else 0.0
    return value, err


def char_identity_residual(model, beta, c, z):
    """|decomposed chi(z) + chi0(z, c) / (beta + c z - z^2)|.

    The decomposed route multiplies quadrature transforms of k1 and of the
    projected kernel k2; the direct route uses the closed-form moment.
    """
    return abs(chi_decomposed(model, beta, c, z) - chi_direct(model, beta, c, z))


def _denominator(beta, c, z):
    d = beta + c * z - z * z
    if abs(d) < 1e-12:
        raise DenominatorNearZero(f"beta + c z - z^2 = {d:.3e} at z={z}, c={c}")
    return d


def chi_direct(model, beta, c, z):
    d = _denominator(beta, c, z)
    return -eval_R(model.chi0_params(), z, c) / d


def chi_decomposed(model, beta, c, z, k2=None):
    _denominator(beta, c, z)
    k1 = build_k1(c, beta)
    if k2 is None:
        k2 = kernels.build_k2(model.kernel, c)
    t1 = k1.transform_quadrature(z)
    t2 = k2.transform(z)
    return 1.0 - (model.g0 * t1 * t2 + (beta - model.f0) * t1)


def chi_roots(model, beta, c, n_scan=200):
    """Zeros of the decomposed chi in ``(0, gamma_K(c))`` located by scan and brentq."""
    top = gamma_K(c, beta, model.kernel)
    k2 = kernels.build_k2(model.kernel, c)
    eps = 1e-7 * top
    zs = [eps + (top - 2 * eps) * i / n_scan for i in range(n_scan + 1)]
    f = lambda z: chi_decomposed(model, beta, c, z, k2)
    vals = [f(z) for z in zs]
    roots = []
    for a, b, fa, fb in zip(zs, zs[1:], vals, vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(optimize.brentq(f, a, b, xtol=1e-14, rtol=1e-15))
    return roots


def _speeds(model):
    c_star, _ = minimal_speed(model.chi0_params())
    c_ss, _ = minimal_speed(model.chiL_params())
    return c_star, c_ss


def boundary_flag(model):
    """``chi_L(gamma_sharp(c_ss)-, c_ss)`` with its error estimate, or None when the abscissa is infinite."""
    _, c_ss = _speeds(model)
    if not math.isfinite(kernels.convergence_abscissa(model.kernel, c_ss)):
        return None
    return boundary_limit(model.chiL_params(), c_ss)


def classify_speed(model, c):
    c_star, c_ss = _speeds(model)
    if c < c_star - SPEED_TOL:
        return NON_EXISTENT
    if c > c_ss + SPEED_TOL:
        return UNIQUE_IF_EXISTS
    if abs(c - c_ss) <= SPEED_TOL:
        flag = boundary_flag(model)
        if flag is None:
            return UNIQUE_IF_EXISTS
        value, err = flag
        return UNIQUE_IF_EXISTS if abs(value) > err else INDETERMINATE
    return INDETERMINATE


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class CharRow:
    c: float
    gamma_sharp: float
    gamma_K: float
    roots: RootPair | None
    roots_L: RootPair | None
    verdict: str


@dataclass
class CharReport:
    c_star: float
    c_starstar: float
    beta: float
    lower_bound: float
    boundary_flag: tuple | None
    rows: list = field(default_factory=list)

    CSV_COLUMNS = ("c", "gamma_sharp", "gamma_K", "lambda1", "lambda2", "lambda1_L", "lambda2_L", "verdict")

    def to_dict(self):
        def pair(r):
            if r is None:
                return None
            return {"lambda1": r.lambda1, "lambda2": r.lambda2, "mu_q": r.mu_q,
                    "multiplicity_two": r.multiplicity_two}

        flag = None
        if self.boundary_flag is not None:
            flag = {"value": _jnum(self.boundary_flag[0]), "error": self.boundary_flag[1]}
        return {
            "c_star": self.c_star,
            "c_starstar": self.c_starstar,
            "beta": self.beta,
            "lower_bound": self.lower_bound,
            "boundary_flag": flag,
            "rows": [{"c": r.c, "gamma_sharp": _jnum(r.gamma_sharp), "gamma_K": _jnum(r.gamma_K),
                      "roots": pair(r.roots), "roots_L": pair(r.roots_L), "verdict": r.verdict}
                     for r in self.rows],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            a = r.roots or RootPair(math.nan, None, math.nan)
            b = r.roots_L or RootPair(math.nan, None, math.nan)
            w.writerow([_fmt(r.c), _fmt(r.gamma_sharp), _fmt(r.gamma_K), _fmt(a.lambda1), _fmt(a.lambda2),
                        _fmt(b.lambda1), _fmt(b.lambda2), r.verdict])
        return buf.getvalue()


def _jnum(x):
    """JSON has no infinity; encode it as the string 'inf'."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return "%.17g" % x


def char_report(model, speeds, beta):
    """CharReport over ``speeds`` using one shift ``beta`` for every row."""
    c_star, c_ss = _speeds(model)
    p0, pL = model.chi0_params(), model.chiL_params()

    def row(c):
        def roots(params):
            try:
                return find_positive_roots(params, c)
            except AbscissaBoundary:
                return None
        return CharRow(c, kernels.convergence_abscissa(model.kernel, c), gamma_K(c, beta, model.kernel),
                       roots(p0), roots(pL), classify_speed(model, c))

    rows = pmap(row, sorted(speeds))
    return CharReport(c_star, c_ss, beta, speed_lower_bound(model.g0, model.kernel),
                      boundary_flag(model), rows)
