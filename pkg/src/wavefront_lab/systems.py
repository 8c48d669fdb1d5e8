"""Two applied systems reduced to the scalar machinery.

Epidemic model: infective humans ``v`` and an infectious agent ``u``, with
``v`` driven by ``g(u)`` delayed by a law P and removed at rate alpha.  The
induced delay density is ``K2(w) = int_0^w exp(-alpha (w - r)) P(dr)`` with
mass ``1/alpha``, so the scalar equation for the agent uses the normalized
kernel ``alpha K2(s) K(w)`` and the birth term ``g / alpha``.

Population model: mature ``u`` and immature ``v`` with diffusivity D and
death rate gamma.  The mature equation is solved on its own and the immature
profile is recovered through the Green kernel of ``D d^2 - c d - gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DenominatorNonPositive, ModelError
from .green import K1Kernel, exp_tail_conv, k1_convolve
from .nonlinear import Nonlinearity, WaveModel
from .wavesolve import Profile, SolverConfig, fixed_point_solve, nonlocal_term

NEGATIVE_CLAMP = 1e-9


# ---------------------------------------------------------------------------
# epidemic
# ---------------------------------------------------------------------------

def _check_P(P):
    if isinstance(P, kernels.TemporalMixture):
        for _, comp in P.components:
            _check_P(comp)
    elif not isinstance(P, (kernels.TemporalPointMass, kernels.Exponential)):
        raise ModelError(f"unsupported delay law {type(P).__name__}; use point masses, "
                         "exponentials or mixtures of them")


@dataclass(frozen=True)
class EpidemicKernel2:
    """``K2`` together with its normalized form ``alpha K2`` (a temporal kernel)."""

    alpha: float
    normalized: object

    def __call__(self, w):
        return _temporal_pdf(self.normalized, np.asarray(w, dtype=float)) / self.alpha

    @property
    def integral(self):
        return 1.0 / self.alpha


def _temporal_pdf(k, w):
    if isinstance(k, kernels.TemporalMixture):
        return sum(a * _temporal_pdf(c, w) for a, c in k.components)
    return k.pdf(w)


def epidemic_K2(P, alpha):
    """``K2(w) = int_0^w exp(-alpha (w - r)) P(dr)`` in closed form.

    A point mass at tau gives an exponential of rate alpha delayed by tau;
    an exponential law of rate rho gives the (rho, alpha) hypoexponential.
    """
    if not alpha > 0:
        raise ModelError(f"alpha must be positive, got {alpha}")
    _check_P(P)

    def norm(p):
        if isinstance(p, kernels.TemporalMixture):
            return kernels.TemporalMixture([(w, norm(c)) for w, c in p.components])
        if isinstance(p, kernels.TemporalPointMass):
            return kernels.Exponential(alpha, p.h)
        return kernels.Hypoexponential(p.rate, alpha, p.delay)

    return EpidemicKernel2(alpha, norm(P))


@dataclass(frozen=True)
class EpidemicModel:
    alpha: float
    P: object
    K_space: object
    f: Nonlinearity
    g: Nonlinearity
    L: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ModelError(f"alpha must be positive, got {self.alpha}")
        _check_P(self.P)

    @property
    def induced_kernel(self):
        """Normalized spatio-temporal kernel ``alpha K2(s) K(w)``."""
        return kernels.SeparableProduct(epidemic_K2(self.P, self.alpha).normalized, self.K_space)

    def scalar_model(self):
        """The agent equation as a scalar model with birth term ``g / alpha``."""
        L = None if self.L is None else self.L / self.alpha
        return WaveModel(self.f, self.g.scaled(1.0 / self.alpha), self.induced_kernel, L)


def epidemic_charfun(model, z, c, variant="chi0"):
    """``z^2 - c z - q + p P^(zc) K^(z) / (c z + alpha)`` with (p, q) per variant."""
    denom = c * z + model.alpha
    if denom <= 0:
        raise DenominatorNonPositive(f"c z + alpha = {denom} <= 0 at z={z}, c={c}")
    if variant == "chi0":
        p, q = model.g.deriv0, model.f.deriv0
    elif variant == "chiL":
        L = model.L if model.L is not None else model.g.lipschitz()
        p, q = L, model.f.inf_deriv()
    else:
        raise ValueError(f"variant must be 'chi0' or 'chiL', got {variant!r}")
    a = z * c
    if a <= model.P.lower_abscissa:
        return math.inf
    tp = model.P.mgf(a)
    ts = model.K_space.mgf(z)
    if math.isinf(tp) or math.isinf(ts):
        return math.inf
    return z * z - c * z - q + p / denom * tp * ts


def _shift_eval(t, y, shift, left_rate):
    """``y(t - shift)`` with the tail/constant extensions."""
    x = t - shift
    out = np.interp(x, t, y)
    left = x < t[0]
    if np.any(left):
        out[left] = 0.0 if math.isinf(left_rate) else y[0] * np.exp(left_rate * (x[left] - t[0]))
    out[x > t[-1]] = y[-1]
    return out


def _tail_init(v0, rate, left_rate):
    """``int_0^inf exp(-rate x) v0 exp(-left_rate x) dx``."""
    if math.isinf(left_rate):
        return 0.0
    return v0 / (rate + left_rate)


def _delay_average(P, t, y, c, left_rate):
    """``int y(t - c r) P(dr)`` on the grid."""
    h = float(t[1] - t[0])
    if isinstance(P, kernels.TemporalMixture):
        return sum(w * _delay_average(comp, t, y, c, left_rate) for w, comp in P.components)
    if isinstance(P, kernels.TemporalPointMass):
        return _shift_eval(t, y, c * P.h, left_rate)
    # exponential law: (rho/c) int_0^inf exp(-(rho/c) x) y(t - c d - x) dx
    rate = P.rate / c
    conv = rate * exp_tail_conv(y, h, rate, 1, _tail_init(y[0], rate, left_rate))
    return _shift_eval(t, conv, c * P.delay, left_rate)


def epidemic_psi(model, phi, c):
    """Infective profile ``psi(t) = int_0^inf g(phi(t - c w)) K2(w) dw``.

    ``c = 0`` uses the algebraic relation ``alpha psi = g(phi)``.
    """
    if c < 0:
        raise ValueError("epidemic reconstruction needs c >= 0")
    t = phi.t
    G = model.g(phi.phi)
    if c == 0:
        psi = G / model.alpha
    else:
        h = phi.h
        rate = model.alpha / c
        # S(t) = int_0^inf exp(-alpha v) G(t - c v) dv solves c S' + alpha S = G
        S = exp_tail_conv(G, h, rate, 1, _tail_init(G[0], rate, phi.left_rate)) / c
        psi = _delay_average(model.P, t, S, c, phi.left_rate)
    return Profile(t, psi, c, phi.beta, dict(phi.anchor), iterations=phi.iterations,
                   left_rate=phi.left_rate, status=phi.status, meta={"component": "psi"})


def epidemic_residual(model, phi, psi, c, margin=None):
    """Sup of ``c psi' + alpha psi - int g(phi(t - c s)) P(ds)`` away from the edges."""
    t, h = phi.t, phi.h
    forcing = _delay_average(model.P, t, model.g(phi.phi), c, phi.left_rate)
    y = psi.phi
    d1 = (y[2:] - y[:-2]) / (2 * h)
    r = c * d1 + model.alpha * y[1:-1] - forcing[1:-1]
    if margin is None:
        margin = _margin(model.scalar_model(), c, h)
    tt = t[1:-1]
    inner = (tt >= t[0] + margin) & (tt <= t[-1] - margin)
    return float(np.max(np.abs(r[inner])))


def _margin(scalar, c, h):
    from .wavesolve import _roots0
    roots = _roots0(scalar, c)
    return max(5 * h, 1.0 / roots.lambda1 if roots is not None else 0.0)


def epidemic_solve(model, c, cfg=SolverConfig(), init="tanh"):
    """Solve the agent profile and reconstruct the infective one.

    Returns ``(phi, psi)`` on success, otherwise the scalar solver's outcome
    (Collapsed or NotConverged) in place of ``phi`` and ``None`` for psi.
    """
    scalar = model.scalar_model()
    out = fixed_point_solve(scalar, c, init, cfg)
    if not isinstance(out, Profile):
        return out, None
    psi = epidemic_psi(model, out, c)
    if c != 0:
        psi.residual = epidemic_residual(model, out, psi, c)
    else:
        psi.residual = float(np.max(np.abs(model.alpha * psi.phi - model.g(out.phi))))
    return out, psi


# ---------------------------------------------------------------------------
# population
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PopulationModel:
    D: float
    gamma: float
    K: object
    f: Nonlinearity
    g: Nonlinearity
    L: float | None = None

    def __post_init__(self):
        if not (self.D > 0 and self.gamma > 0):
            raise ModelError("need D > 0 and gamma > 0")

    def scalar_model(self):
        return WaveModel(self.f, self.g, self.K, self.L)


def immature_kernel(D, gamma, c):
    """Green kernel of ``D y'' - c y' - gamma y = -G`` as a :class:`K1Kernel`."""
    sigma = math.sqrt(c * c + 4 * D * gamma)
    mu = (c + sigma) / (2 * D) if c >= 0 else 2 * gamma / (sigma - c)
    nu = -gamma / (D * mu)
    return K1Kernel(c, gamma, nu, mu, sigma)


def H_operator(model, phi, c, weights=None):
    """``g(phi) - int int K g(phi(t - c s - w))``."""
    h = phi.h
    if weights is None:
        weights = kernels.build_k2(model.K, c).discretize(h)
    G = model.g(phi.phi)
    return G - nonlocal_term(G, h, weights, phi.t[0], phi.phi, model.g, phi.left_rate)


def population_reconstruct(model, phi, c):
    """Immature profile ``psi = k1~ * H phi``.

    Values in ``(-1e-9, 0)`` are clamped to 0; the count and minimum of larger
    negative values are reported in ``meta``.
    """
    Hphi = H_operator(model, phi, c)
    k = immature_kernel(model.D, model.gamma, c)
    psi = k1_convolve(k, Hphi, phi.h, left_rate=phi.left_rate, right_value=Hphi[-1])
    small = (psi < 0) & (psi > -NEGATIVE_CLAMP)
    psi = np.where(small, 0.0, psi)
    neg = psi < 0
    meta = {"component": "psi", "negative_count": int(neg.sum()),
            "min_value": float(psi.min()) if psi.size else 0.0}
    return Profile(phi.t, psi, c, phi.beta, dict(phi.anchor), iterations=phi.iterations,
                   left_rate=phi.left_rate, status=phi.status, meta=meta)


def population_residual(model, phi, psi, c, margin=None):
    """Sup of ``D psi'' - c psi' - gamma psi + H phi`` away from the edges."""
    t, h, y = phi.t, phi.h, psi.phi
    Hphi = H_operator(model, phi, c)
    d2 = (y[2:] - 2 * y[1:-1] + y[:-2]) / (h * h)
    d1 = (y[2:] - y[:-2]) / (2 * h)
    r = model.D * d2 - c * d1 - model.gamma * y[1:-1] + Hphi[1:-1]
    if margin is None:
        margin = _margin(model.scalar_model(), c, h)
    tt = t[1:-1]
    inner = (tt >= t[0] + margin) & (tt <= t[-1] - margin)
    return float(np.max(np.abs(r[inner])))


def population_solve(model, c, cfg=SolverConfig(), init="tanh"):
    out = fixed_point_solve(model.scalar_model(), c, init, cfg)
    if not isinstance(out, Profile):
        return out, None
    psi = population_reconstruct(model, out, c)
    psi.residual = population_residual(model, out, psi, c)
    return out, psi
