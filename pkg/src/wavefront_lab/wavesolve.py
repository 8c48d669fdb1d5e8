"""Wave profiles from the convolution fixed-point equation.

With ``f_beta(s) = beta s - f(s)`` the profile equation

    phi'' - c phi' - f(phi) + (k2 * g(phi)) = 0

is equivalent to ``phi = k1 * (k2 * g(phi) + f_beta(phi))``, where k1 is the
Green kernel of ``d^2/dt^2 - c d/dt - beta`` (see :mod:`wavefront_lab.green`)
and k2 the kernel projected along the rays ``r = c s + w``.  The solver
iterates that map on a truncated grid and re-anchors the translation after
every sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import charspec, kernels
from .errors import GridTooCoarse, NonFiniteDerivative, TailTooShort, WindowTooSmall
from .green import K1Kernel, build_k1, k1_convolve  # noqa: F401  (re-exported)
from .kernels import build_k2  # noqa: F401  (re-exported)

LEFT_EXTENSIONS = ("tail", "zero", "hold")
PRESETS = ("step", "tanh", "small")
STEP_FOOT = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    """Grid and stopping parameters.

    ``left_extension`` fixes how phi continues past ``-T``: ``"tail"`` uses
    ``phi(t0) exp(lambda1 (t - t0))`` with the minimal characteristic root
    (falling back to ``"zero"`` when no root exists), ``"zero"`` uses 0 and
    ``"hold"`` the constant ``phi(t0)``.  ``drift_tol`` bounds the speed at
    which a converged shape may still be translating.
    """

    T: float = 60.0
    h: float = 0.05
    tol: float = 1e-8
    max_iter: int = 5000
    theta: float = 0.5
    collapse_tol: float = 1e-6
    window_tol: float = 1e-4
    left_extension: str = "tail"
    drift_tol: float = 1e-2
    beta: float | None = None

    def __post_init__(self):
        if self.left_extension not in LEFT_EXTENSIONS:
            raise ValueError(f"left_extension must be one of {LEFT_EXTENSIONS}")
        if not (self.T > 0 and self.h > 0 and self.h < self.T):
            raise ValueError("need 0 < h < T")

    def grid(self):
        n = int(round(2 * self.T / self.h))
        return -self.T + self.h * np.arange(n + 1)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r2: float
    npoints: int


@dataclass
class Profile:
    t: np.ndarray
    phi: np.ndarray
    c: float
    beta: float | None = None
    anchor: dict = field(default_factory=dict)
    decay_fit: DecayFit | None = None
    iterations: int = 0
    residual: float | None = None
    left_rate: float = math.inf
    status: str = "Converged"
    meta: dict = field(default_factory=dict)

    @property
    def h(self):
        return float(self.t[1] - self.t[0])

    @property
    def sup(self):
        return float(np.max(self.phi))

    def __call__(self, x):
        """Evaluate with the boundary extensions (left tail/zero/hold, right constant)."""
        return _extend(self.t, self.phi, np.asarray(x, dtype=float), self.left_rate)


@dataclass(frozen=True)
class Collapsed:
    iterations: int
    sup: float


@dataclass
class NotConverged:
    reason: str
    iterations: int
    profile: Profile
    last_change: float
    drift_speed: float = 0.0


@dataclass(frozen=True)
class KernelDecomposition:
    """The two atoms of the fixed-point map: ``(k1*k2, g)`` and ``(k1, f_beta)``."""

    k1: K1Kernel
    k2: kernels.LineKernel

    def atom_masses(self):
        return self.k2.mass / self.k1.beta, 1.0 / self.k1.beta


def decompose(K, c, beta):
    return KernelDecomposition(build_k1(c, beta), build_k2(K, c))


# ---------------------------------------------------------------------------
# beta selection
# ---------------------------------------------------------------------------

def select_beta(f, M):
    """``max(f'(0), sup_[0,M] f') + 1``; makes ``f_beta`` nonnegative and Lipschitz on [0, M]."""
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    s = np.linspace(0.0, M, 10_000)
    with np.errstate(over="raise", invalid="raise"):
        try:
            d = f.deriv(s)
        except FloatingPointError as exc:
            raise NonFiniteDerivative(f"f' overflows on [0, {M}]") from exc
    if not np.all(np.isfinite(d)):
        raise NonFiniteDerivative(f"f' is not finite on [0, {M}]")
    # endpoint refinement: f' on the last cell may peak between samples
    sup = max(float(d.max()), float(f.deriv(M)), f.sup_deriv(M))
    return max(f.deriv0, sup) + 1.0


def _beta_for(model, c, M, override=None):
    beta = override if override is not None else select_beta(model.f, M)
    gamma = kernels.convergence_abscissa(model.kernel, c)
    if math.isfinite(gamma):
        # mu(c) >= 1.25 gamma  <=>  beta >= (1.25 gamma)^2 - 1.25 c gamma
        need = (1.25 * gamma) ** 2 - 1.25 * c * gamma
        beta = max(beta, need)
    return beta


# ---------------------------------------------------------------------------
# the map
# ---------------------------------------------------------------------------

def _extend(t, phi, x, left_rate):
    out = np.interp(x, t, phi)
    left = x < t[0]
    if np.any(left):
        if math.isinf(left_rate):
            out[left] = 0.0
        else:
            out[left] = phi[0] * np.exp(left_rate * (x[left] - t[0]))
    right = x > t[-1]
    out[right] = phi[-1]
    return out


def _left_rate(model, c, mode):
    if mode == "zero":
        return math.inf
    if mode == "hold":
        return 0.0
    roots = _roots0(model, c)
    return roots.lambda1 if roots is not None else math.inf


def _roots0(model, c):
    try:
        return charspec.find_positive_roots(model.chi0_params(), c)
    except Exception:  # noqa: BLE001 - boundary cases simply give no tail rate
        return None


def nonlocal_term(g_vals, h, weights, t0, phi, g, left_rate):
    """``(k2 * g(phi))`` on the grid using discretized k2 weights ``(jmin, w)``."""
    jmin, w = weights
    jmax = jmin + len(w) - 1
    n = len(g_vals)
    pad_left = max(jmax, 0)
    pad_right = max(-jmin, 0)
    parts = []
    if pad_left:
        x = t0 - h * np.arange(pad_left, 0, -1)
        if math.isinf(left_rate):
            parts.append(np.zeros(pad_left))
        else:
            parts.append(g(phi[0] * np.exp(left_rate * (x - t0))))
    parts.append(g_vals)
    if pad_right:
        parts.append(np.full(pad_right, g_vals[-1]))
    ext = np.concatenate(parts)
    # ext[k] holds grid index k - pad_left; trim so ext starts at index -jmax
    start = pad_left - jmax
    stop = pad_left + (n - 1 - jmin) + 1
    ext = ext[start:stop]
    return np.convolve(ext, w, mode="valid")


def iteration_map(model, c, beta, t, phi, k2_weights=None, left_rate=math.inf):
    """One sweep ``phi -> k1 * (k2 * g(phi) + f_beta(phi))`` without re-anchoring."""
    h = float(t[1] - t[0])
    if k2_weights is None:
        k2_weights = build_k2(model.kernel, c).discretize(h)
    gv = model.g(phi)
    conv = nonlocal_term(gv, h, k2_weights, t[0], phi, model.g, left_rate)
    H = conv + beta * phi - model.f(phi)
    return k1_convolve(build_k1(c, beta), H, h, left_rate=left_rate, right_value=H[-1])


def _anchor(t, phi, theta, left_rate):
    """Shift so the first crossing of ``theta * sup`` sits at t = 0."""
    level = theta * phi.max()
    idx = int(np.argmax(phi >= level))
    if idx == 0:
        return phi, 0.0
    x0 = t[idx - 1] + (level - phi[idx - 1]) / (phi[idx] - phi[idx - 1]) * (t[idx] - t[idx - 1])
    return _extend(t, phi, t + x0, left_rate), x0


def initial_profile(preset, t, kappa=1.0, tail_rate=None):
    """Seed shapes: ``step`` (ramp over [-1, 1]), ``tanh`` and ``small`` (1e-2 tanh).

    With ``tail_rate`` the step ramp is floored by ``1e-3 kappa exp(tail_rate (t + 1))``
    on the left.  A compactly supported seed otherwise relaxes to the
    slowest front and can take very long to pick up the tail of speed c.
    """
    if preset == "step":
        ramp = kappa * np.clip(0.5 * (t + 1.0), 0.0, 1.0)
        if tail_rate is not None and math.isfinite(tail_rate):
            foot = STEP_FOOT * kappa * np.exp(tail_rate * np.minimum(t + 1.0, 0.0))
            ramp = np.maximum(ramp, foot)
        return ramp
    if preset == "tanh":
        return kappa * 0.5 * (1.0 + np.tanh(t / 4.0))
    if preset == "small":
        return 1e-2 * 0.5 * (1.0 + np.tanh(t / 4.0))
    raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")


def fixed_point_solve(model, c, init="tanh", cfg=SolverConfig()):
    """Iterate the fixed-point map to a profile.

    Returns a :class:`Profile`, :class:`Collapsed` or :class:`NotConverged`.
    """
    t = cfg.grid()
    h = cfg.h
    roots = _roots0(model, c)
    if roots is not None and 1.0 / roots.lambda1 < 4 * h:
        raise GridTooCoarse(f"decay scale 1/lambda1 = {1 / roots.lambda1:.4g} < 4h = {4 * h}")
    kappa = model.equilibrium() or 1.0
    left_rate = _left_rate(model, c, cfg.left_extension)
    if isinstance(init, Profile):
        phi = _extend(init.t, init.phi, t, init.left_rate)
    elif isinstance(init, str):
        phi = initial_profile(init, t, kappa, left_rate if left_rate > 0 else None)
    else:
        phi = np.asarray(init, dtype=float).copy()
        if phi.shape != t.shape:
            raise ValueError(f"init has {phi.size} points, grid has {t.size}")
    if np.any(phi < 0) or not np.all(np.isfinite(phi)):
        raise ValueError("init must be finite and nonnegative")
    if phi.max() < cfg.collapse_tol:
        return Collapsed(0, float(phi.max()))

    weights = build_k2(model.kernel, c).discretize(h)
    M = 1.5 * max(phi.max(), kappa)
    beta = _beta_for(model, c, M, cfg.beta)
    status = "Converged" if model.g.monotone else "Experimental"

    change = math.inf
    x0 = 0.0
    for n in range(1, cfg.max_iter + 1):
        new = iteration_map(model, c, beta, t, phi, weights, left_rate)
        sup = new.max()
        if sup < cfg.collapse_tol:
            return Collapsed(n, float(sup))
        if sup > M:
            M = 1.5 * sup
            beta = _beta_for(model, c, M, cfg.beta)
        new, x0 = _anchor(t, new, cfg.theta, left_rate)
        change = float(np.max(np.abs(new - phi)))
        phi = new
        if change < cfg.tol:
            break
    else:
        prof = Profile(t, phi, c, beta, {"theta": cfg.theta, "shift": x0}, iterations=cfg.max_iter,
                       left_rate=left_rate, status="NotConverged")
        return NotConverged("max_iter", cfg.max_iter, prof, change, x0 * beta)

    prof = Profile(t, phi, c, beta, {"theta": cfg.theta, "level": cfg.theta * phi.max(), "shift": x0},
                   iterations=n, left_rate=left_rate, status=status)
    # one sweep is a pseudo-time step 1/beta, so x0 per sweep is a speed x0*beta
    if abs(x0) * beta > cfg.drift_tol:
        prof.status = "NotConverged"
        return NotConverged("drift", n, prof, change, x0 * beta)
    if phi[0] > cfg.window_tol * phi.max():
        raise WindowTooSmall(f"phi(-T) = {phi[0]:.3e} exceeds {cfg.window_tol} * sup")
    try:
        prof.decay_fit = decay_rate(prof)
    except TailTooShort:
        prof.decay_fit = None
    prof.residual = residual(model, c, prof)
    return prof


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def residual(model, c, prof, k2_weights=None):
    """Sup-norm of ``phi'' - c phi' - f(phi) + k2 * g(phi)`` away from the window edges."""
    t, phi, h = prof.t, prof.phi, prof.h
    if k2_weights is None:
        k2_weights = build_k2(model.kernel, c).discretize(h)
    roots = _roots0(model, c)
    margin = max(5 * h, 1.0 / roots.lambda1 if roots is not None else 0.0)
    nl = nonlocal_term(model.g(phi), h, k2_weights, t[0], phi, model.g, prof.left_rate)
    d2 = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / (h * h)
    d1 = (phi[2:] - phi[:-2]) / (2 * h)
    r = d2 - c * d1 - model.f(phi[1:-1]) + nl[1:-1]
    tt = t[1:-1]
    inner = (tt >= t[0] + margin) & (tt <= t[-1] - margin)
    if not np.any(inner):
        return math.nan
    return float(np.max(np.abs(r[inner])))


def decay_rate(prof, lo=1e-12, hi=1e-3, min_points=20):
    """Log-linear fit of the left tail on values in ``(lo sup, hi sup)``."""
    phi, t = prof.phi, prof.t
    sup = phi.max()
    # restrict to the part left of the first crossing of hi*sup
    end = int(np.argmax(phi >= hi * sup))
    mask = np.zeros(phi.shape, dtype=bool)
    mask[:end] = True
    mask &= (phi > lo * sup) & (phi < hi * sup)
    if mask.sum() < min_points:
        raise TailTooShort(f"only {int(mask.sum())} tail points in ({lo}, {hi}) * sup")
    fit = stats.linregress(t[mask], np.log(phi[mask]))
    return DecayFit(float(fit.slope), float(fit.rvalue ** 2), int(mask.sum()))


def align_translate(p1, p2):
    """Shift s minimizing ``sup |p1(t) - p2(t + s)|`` over the overlap of the windows.

    Returns ``(shift, distance)``.
    """
    t = p1.t
    T = 0.5 * (t[-1] - t[0])
    h = p1.h

    def dist(s):
        ok = (t + s >= p2.t[0]) & (t + s <= p2.t[-1])
        if not np.any(ok):
            return math.inf
        return float(np.max(np.abs(p1.phi[ok] - np.interp(t[ok] + s, p2.t, p2.phi))))

    coarse = np.arange(-T, T + h / 2, h)
    vals = np.array([dist(s) for s in coarse])
    k = int(np.argmin(vals))
    lo, hi = coarse[max(k - 1, 0)], coarse[min(k + 1, len(coarse) - 1)]
    res = optimize.minimize_scalar(dist, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    best_s, best_d = (res.x, res.fun) if res.fun <= vals[k] else (coarse[k], vals[k])
    return float(best_s), float(best_d)


def check_lipschitz(g, L, M, n_pairs=10_000, seed=0):
    """Sampled check of ``|g(a) - g(b)| <= L |a - b|`` on ``[0, M]^2``.

    Returns ``(ok, max_slope, violations)``.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, M, n_pairs)
    b = rng.uniform(0.0, M, n_pairs)
    keep = np.abs(a - b) > 1e-12
    slope = np.abs(g(a[keep]) - g(b[keep])) / np.abs(a[keep] - b[keep])
    bad = int(np.sum(slope > L * (1 + 1e-12)))
    return bad == 0, float(slope.max()), bad


@dataclass
class HypothesisReport:
    lipschitz_ok: bool
    max_slope: float
    lipschitz_violations: int
    g_bound_ok: bool
    fbeta_bound_ok: bool
    chiL_min: float
    chiL_argmin: float
    chiL_ok: bool
    chi_at_zero: float
    chi_at_zero_ok: bool
    beta: float

    @property
    def all_ok(self):
        return (self.lipschitz_ok and self.g_bound_ok and self.fbeta_bound_ok
                and self.chiL_ok and self.chi_at_zero_ok)

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["all_ok"] = self.all_ok
        return d


def verify_hypotheses(model, M, c, beta=None, seed=0, n_pairs=10_000):
    """Sampled checks of the hypotheses behind uniqueness at speed ``c``.

    Violations are reported, never raised.
    """
    if beta is None:
        beta = _beta_for(model, c, M)
    lip_ok, slope, bad = check_lipschitz(model.g, model.L, M, n_pairs, seed)
    s = np.linspace(0.0, M, 10_001)
    tol = 1e-12 * (1 + s)
    g_ok = bool(np.all(model.g(s) <= model.L * s + tol))
    fb = beta * s - model.f(s)
    fb_ok = bool(np.all(fb <= (beta - model.inf_f) * s + tol))
    pL = model.chiL_params()
    top = charspec.gamma_K(c, beta, model.kernel)
    zmin = charspec._minimizer(pL, c, top)
    vmin = charspec._safe_R(pL, zmin, c) if zmin > 0 else pL.p - pL.q
    chi0 = (model.f0 - model.g0) / beta
    return HypothesisReport(lip_ok, slope, bad, g_ok, fb_ok, float(vmin), float(zmin),
                            bool(zmin > 0 and vmin <= 0), chi0, chi0 < 0, beta)
