"""Catalogue of birth (g) and death (f) functions and the scalar wave model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ConfigError, ModelError, NonFiniteDerivative

# default sampling range for sup/inf of derivatives over s >= 0
_SCAN_MAX = 1e3
_SCAN_POINTS = 10_000

_PARAMS = {
    "linear": ("a",),
    "quadratic": ("a", "b"),
    "polynomial": ("coefficients",),
    "ricker": ("p", "b"),
    "mackey_glass": ("p", "k"),
    "saturating": ("p", "b"),
}


@dataclass(frozen=True)
class Nonlinearity:
    """A named nonlinearity with closed-form derivative.

    kinds and formulas::

        linear        a u
        quadratic     a u + b u^2
        polynomial    sum_k coefficients[k] u^(k+1)
        ricker        p u exp(-b u)
        mackey_glass  p u / (1 + u^k)
        saturating    p u / (1 + b u)
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _PARAMS:
            raise ModelError(f"unknown nonlinearity kind {self.kind!r}")
        missing = [k for k in _PARAMS[self.kind] if k not in self.params]
        if missing:
            raise ModelError(f"{self.kind} needs parameters {missing}")
        if self.kind == "polynomial":
            coeffs = tuple(float(c) for c in self.params["coefficients"])
            object.__setattr__(self, "params", {"coefficients": coeffs})
        else:
            object.__setattr__(self, "params", {k: float(self.params[k]) for k in _PARAMS[self.kind]})
        if self.kind in ("ricker", "saturating") and self.params["b"] <= 0:
            raise ModelError(f"{self.kind} needs b > 0")
        if self.kind == "mackey_glass" and self.params["k"] <= 0:
            raise ModelError("mackey_glass needs k > 0")

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items()))))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        P = self.params
        k = self.kind
        if k == "linear":
            return P["a"] * u
        if k == "quadratic":
            return P["a"] * u + P["b"] * u * u
        if k == "polynomial":
            return u * np.polynomial.polynomial.polyval(u, P["coefficients"])
        if k == "ricker":
            return P["p"] * u * np.exp(-P["b"] * u)
        if k == "mackey_glass":
            return P["p"] * u / (1.0 + np.abs(u) ** P["k"])
        return P["p"] * u / (1.0 + P["b"] * u)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        P = self.params
        k = self.kind
        if k == "linear":
            return np.full_like(u, P["a"])
        if k == "quadratic":
            return P["a"] + 2 * P["b"] * u
        if k == "polynomial":
            c = np.asarray(P["coefficients"])
            dc = c * np.arange(1, len(c) + 1)
            return np.polynomial.polynomial.polyval(u, dc)
        if k == "ricker":
            b = P["b"]
            return P["p"] * np.exp(-b * u) * (1 - b * u)
        if k == "mackey_glass":
            kk = P["k"]
            uk = np.abs(u) ** kk
            return P["p"] * (1 + (1 - kk) * uk) / (1 + uk) ** 2
        return P["p"] / (1.0 + P["b"] * u) ** 2

    @property
    def deriv0(self):
        P = self.params
        if self.kind in ("linear", "quadratic"):
            return P["a"]
        if self.kind == "polynomial":
            return P["coefficients"][0] if P["coefficients"] else 0.0
        return P["p"]

    def _grid(self, M):
        upper = _SCAN_MAX if M is None else float(M)
        # dense near the origin, where most catalogue shapes bend
        lin = np.linspace(0.0, min(upper, 10.0), _SCAN_POINTS)
        if upper > 10.0:
            lin = np.concatenate([lin, np.geomspace(10.0, upper, _SCAN_POINTS // 4)])
        return lin

    def _sampled(self, M):
        s = self._grid(M)
        with np.errstate(over="raise", invalid="raise"):
            try:
                d = self.deriv(s)
            except FloatingPointError as exc:
                raise NonFiniteDerivative(f"derivative of {self.kind} overflows on [0, {M}]") from exc
        if not np.all(np.isfinite(d)):
            raise NonFiniteDerivative(f"derivative of {self.kind} is not finite on [0, {M}]")
        return s, d

    def _refine(self, s, d, i, sign):
        """Polish a sampled extremum of ``sign * deriv`` with a bounded search."""
        lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
        if hi <= lo:
            return sign * d[i]
        res = optimize.minimize_scalar(lambda x: -sign * float(self.deriv(x)), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        return max(sign * d[i], -res.fun)

    def sup_deriv(self, M=None):
        """sup of g' on [0, M] (on [0, inf) when M is None)."""
        if M is None:
            closed = self._closed_sup()
            if closed is not None:
                return closed
        s, d = self._sampled(M)
        i = int(np.argmax(d))
        return self._refine(s, d, i, 1.0)

    def inf_deriv(self, M=None):
        """inf of the derivative on [0, M] (on [0, inf) when M is None)."""
        if M is None:
            closed = self._closed_inf()
            if closed is not None:
                return closed
        s, d = self._sampled(M)
        i = int(np.argmin(d))
        return -self._refine(s, d, i, -1.0)

    def lipschitz(self, M=None):
        """Best Lipschitz constant on [0, M]; ``inf`` when unbounded on [0, inf)."""
        if M is None:
            up, lo = self.sup_deriv(), self.inf_deriv()
            return max(abs(up), abs(lo))
        s, d = self._sampled(M)
        i = int(np.argmax(np.abs(d)))
        sign = 1.0 if d[i] >= 0 else -1.0
        return abs(self._refine(s, d, i, sign))

    def _closed_sup(self):
        P = self.params
        if self.kind == "linear":
            return P["a"]
        if self.kind == "quadratic":
            return math.inf if P["b"] > 0 else P["a"]
        if self.kind == "polynomial":
            c = P["coefficients"]
            if len(c) > 1 and c[-1] > 0:
                return math.inf
            return None
        if self.kind in ("ricker", "saturating"):
            return P["p"] if P["p"] >= 0 else None
        if self.kind == "mackey_glass" and P["k"] >= 1:
            return P["p"] if P["p"] >= 0 else None
        return None

    def _closed_inf(self):
        P = self.params
        if self.kind == "linear":
            return P["a"]
        if self.kind == "quadratic":
            return -math.inf if P["b"] < 0 else P["a"]
        if self.kind == "polynomial":
            c = P["coefficients"]
            if len(c) > 1 and c[-1] < 0:
                return -math.inf
            if all(x >= 0 for x in c):
                return c[0] if c else 0.0
            return None
        if self.kind == "ricker":
            return -P["p"] * math.exp(-2.0) if P["p"] >= 0 else None
        if self.kind == "saturating":
            return 0.0 if P["p"] >= 0 else None
        return None

    @property
    def monotone(self):
        """True when the function is nondecreasing on [0, inf)."""
        try:
            return self.inf_deriv() >= 0
        except NonFiniteDerivative:
            return False

    def scaled(self, factor):
        """The nonlinearity ``factor * self``."""
        P = dict(self.params)
        if self.kind == "polynomial":
            P["coefficients"] = tuple(factor * x for x in P["coefficients"])
        elif self.kind == "quadratic":
            P["a"] *= factor
            P["b"] *= factor
        elif self.kind == "linear":
            P["a"] *= factor
        else:
            P["p"] *= factor
        return Nonlinearity(self.kind, P)

    def to_dict(self):
        out = {"kind": self.kind}
        for k, v in self.params.items():
            out[k] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d, path="g"):
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("expected an object with a 'kind' field", path)
        kind = d["kind"]
        if kind not in _PARAMS:
            raise ConfigError(f"unknown nonlinearity kind {kind!r}", f"{path}.kind")
        params = {}
        for key in _PARAMS[kind]:
            if key not in d:
                raise ConfigError(f"missing field '{key}'", f"{path}.{key}")
            v = d[key]
            if key == "coefficients":
                if not isinstance(v, list) or not all(isinstance(x, (int, float)) for x in v):
                    raise ConfigError("expected a list of numbers", f"{path}.{key}")
            elif not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ConfigError(f"expected a number, got {v!r}", f"{path}.{key}")
            params[key] = v
        try:
            return cls(kind, params)
        except ModelError as exc:
            raise ConfigError(str(exc), path) from exc


def linear(a):
    return Nonlinearity("linear", {"a": a})


def saturating(p, b=1.0):
    return Nonlinearity("saturating", {"p": p, "b": b})


def ricker(p, b=1.0):
    return Nonlinearity("ricker", {"p": p, "b": b})


def mackey_glass(p, k):
    return Nonlinearity("mackey_glass", {"p": p, "k": k})


def quadratic(a, b):
    return Nonlinearity("quadratic", {"a": a, "b": b})


def polynomial(*coefficients):
    """``sum_k coefficients[k] * u**(k+1)``."""
    return Nonlinearity("polynomial", {"coefficients": coefficients})


def positive_equilibrium(f, g, upper=1e3):
    """Smallest kappa > 0 with g(kappa) = f(kappa), or None."""
    s = np.concatenate([np.linspace(1e-6, 10.0, 20_000), np.geomspace(10.0, upper, 2_000)])
    d = g(s) - f(s)
    idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[0]
    if len(idx) == 0:
        return None
    i = idx[0]
    if d[i] == 0:
        return float(s[i])
    return optimize.brentq(lambda x: float(g(x) - f(x)), s[i], s[i + 1], xtol=1e-15, rtol=1e-15)


@dataclass(frozen=True)
class WaveModel:
    """Scalar model ``u_t = u_xx - f(u) + int int K(s, w) g(u(t - s, x - w)) dw ds``.

    ``L`` defaults to the Lipschitz constant of g on [0, inf).  With
    ``strict=False`` the structural checks are skipped, which is how
    deliberately ill-posed instances are built for hypothesis checks.
    """

    f: Nonlinearity
    g: Nonlinearity
    kernel: object
    L: float | None = None
    strict: bool = True

    def __post_init__(self):
        if self.L is None:
            L = self.g.lipschitz()
            if not math.isfinite(L):
                raise ModelError("g has no global Lipschitz constant; pass L explicitly")
            object.__setattr__(self, "L", float(L))
        if self.strict:
            if not self.f.deriv0 < self.g.deriv0:
                raise ModelError(f"need f'(0) < g'(0), got {self.f.deriv0} >= {self.g.deriv0}")
            if self.g.deriv0 <= 0:
                raise ModelError("need g'(0) > 0")
            if self.L < self.g.deriv0:
                raise ModelError(f"need L >= g'(0), got L={self.L} < {self.g.deriv0}")
            if self.inf_f < 0:
                raise ModelError(f"need inf f' >= 0, got {self.inf_f}")

    @property
    def g0(self):
        return self.g.deriv0

    @property
    def f0(self):
        return self.f.deriv0

    @property
    def inf_f(self):
        return self.f.inf_deriv()

    def chi0_params(self):
        from .charspec import CharParams
        return CharParams(self.g0, self.f0, self.kernel)

    def chiL_params(self):
        from .charspec import CharParams
        return CharParams(self.L, self.inf_f, self.kernel)

    def equilibrium(self):
        return positive_equilibrium(self.f, self.g)
