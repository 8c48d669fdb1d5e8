"""Two-sided exponential Green kernel and its exact grid convolution.

``k1(s) = exp(nu s) / sigma`` for ``s >= 0`` and ``exp(mu s) / sigma`` for
``s < 0``, where ``nu < 0 < mu`` solve ``z^2 - c z - beta = 0``.  It inverts
``y'' - c y' - beta y`` up to sign: ``y = k1 * G`` solves
``y'' - c y' - beta y = -G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import quadrature


@dataclass(frozen=True)
class K1Kernel:
    c: float
    beta: float
    nu: float
    mu: float
    sigma: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore"):
            return np.where(s >= 0, np.exp(self.nu * np.maximum(s, 0)),
                            np.exp(self.mu * np.minimum(s, 0))) / self.sigma

    def transform(self, z):
        """Closed form ``1 / (beta + c z - z^2)``, valid for ``nu < z < mu``."""
        return 1.0 / (self.beta + self.c * z - z * z)

    def transform_quadrature(self, z):
        """Bilateral transform by adaptive quadrature on the two half-lines."""
        right = quadrature.half_line(lambda s: math.exp((self.nu - z) * s), 0.0, 1,
                                     1.0 / max(abs(self.nu - z), 1e-3))
        left = quadrature.half_line(lambda s: math.exp((self.mu - z) * s), 0.0, -1,
                                    1.0 / max(abs(self.mu - z), 1e-3))
        return (left + right) / self.sigma


def build_k1(c, beta):
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    sigma = math.sqrt(c * c + 4 * beta)
    # nu = (c - sigma)/2 suffers cancellation for c >> beta; use nu = -beta/mu
    mu = 0.5 * (c + sigma) if c >= 0 else 2 * beta / (sigma - c)
    nu = -beta / mu
    return K1Kernel(c, beta, nu, mu, sigma)


def _exp_weights(rate, h):
    """Weights of ``int_0^h exp(rate x) G(t - x) dx`` for linear G between two nodes.

    Returns ``(E, w_near, w_far)``: E = exp(rate h), ``w_near`` multiplies the
    node at distance 0 and ``w_far`` the node at distance h.
    """
    x = rate * h
    E = math.exp(x)
    if abs(x) < 1e-5:
        # series of I0 = (E-1)/rate and I1 = int_0^h x e^{rate x} dx
        I0 = h * (1 + x / 2 + x * x / 6 + x ** 3 / 24)
        I1 = h * h * (0.5 + x / 3 + x * x / 8 + x ** 3 / 30)
    else:
        I0 = (E - 1) / rate
        I1 = (h * E - I0) / rate
    w_far = I1 / h
    return E, I0 - w_far, w_far


def exp_tail_conv(G, h, rate, direction, init=0.0):
    """Exact one-sided exponential convolution of a piecewise-linear sequence.

    direction=+1 computes ``A(t_i) = int_0^inf exp(-rate x) G(t_i - x) dx`` (history
    to the left), direction=-1 computes ``B(t_i) = int_0^inf exp(-rate x) G(t_i + x) dx``.
    ``rate`` must be positive.  ``init`` is the value at the starting end
    (``A(t_0)`` or ``B(t_N)``), which carries everything outside the grid.
    """
    G = np.asarray(G, dtype=float)
    if direction < 0:
        return exp_tail_conv(G[::-1], h, rate, 1, init)[::-1]
    E, w_near, w_far = _exp_weights(-rate, h)
    # A_{i+1} = E A_i + w_near G_{i+1} + w_far G_i
    x = np.empty_like(G)
    x[0] = 0.0
    x[1:] = w_near * G[1:] + w_far * G[:-1]
    out, _ = lfilter([1.0], [1.0, -E], x, zi=[init])
    return out


def k1_convolve(k1, G, h, left_rate=math.inf, right_value=None):
    """``(k1 * G)(t_i)`` on a uniform grid, exact for piecewise-linear G.

    Outside the grid G is extended by ``G_0 exp(left_rate (t - t_0))`` on the
    left (``left_rate = inf`` is the zero extension, ``0`` holds the constant)
    and by the constant ``right_value`` (default ``G_N``) on the right.
    """
    G = np.asarray(G, dtype=float)
    if right_value is None:
        right_value = G[-1]
    # left history: int_{-inf}^{t} exp(nu (t - s)) G(s) ds, rate -nu > 0
    if math.isinf(left_rate):
        a0 = 0.0
    else:
        a0 = G[0] / (left_rate - k1.nu)
    A = exp_tail_conv(G, h, -k1.nu, 1, a0)
    # right part: int_t^inf exp(mu (t - s)) G(s) ds, rate mu > 0
    B = exp_tail_conv(G, h, k1.mu, -1, right_value / k1.mu)
    return (A + B) / k1.sigma
