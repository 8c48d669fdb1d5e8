"""Acceptance criteria 1-14, one test each.

Every test prints a ``[PASS]``/``[FAIL]`` line; the lines are repeated in the
pytest terminal summary.  Run alone with ``pytest tests/test_acceptance.py``
or ``python tests/test_acceptance.py``.
"""

import math
import sys
from contextlib import contextmanager
from functools import lru_cache

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE_LINES, kpp
from wavefront_lab import charspec, kernels
from wavefront_lab.charspec import CharParams
from wavefront_lab.nonlinear import linear, saturating
from wavefront_lab.systems import (
    EpidemicModel,
    PopulationModel,
    epidemic_K2,
    epidemic_charfun,
    epidemic_psi,
    epidemic_solve,
    population_solve,
)
from wavefront_lab.green import build_k1
from wavefront_lab.wavesolve import (
    Collapsed,
    NotConverged,
    Profile,
    SolverConfig,
    align_translate,
    iteration_map,
    residual,
    select_beta,
    fixed_point_solve,
)

RNG_SEED = 20240617
# stricter than the library default; see the residual-halving criterion
SOLVER_TOL = 1e-10

UNIQUENESS_KERNELS = {
    "local": kernels.PointMass(0.0, 0.0),
    "delay+gaussian": kernels.SeparableDeltaTime(1.0, kernels.Gaussian(1.0)),
    "delay+shift": kernels.SeparableDeltaTime(1.0, kernels.SpatialPointMass(-1.0)),
}


@contextmanager
def criterion(num, title):
    try:
        yield
    except BaseException as exc:
        line = f"[FAIL] {num} {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"[PASS] {num} {title}"
    ACCEPTANCE_LINES.append(line)
    print(line)


# ---------------------------------------------------------------------------
# shared instances
# ---------------------------------------------------------------------------

def random_spatial(rng):
    if rng.integers(2):
        return kernels.Gaussian(rng.uniform(0.2, 2.0), rng.uniform(-1.0, 1.0))
    return kernels.SpatialPointMass(rng.uniform(-1.0, 1.0))


def random_component(rng):
    kind = rng.integers(4)
    if kind == 0:
        return kernels.PointMass(rng.uniform(0.0, 1.5), rng.uniform(-1.0, 1.0))
    if kind == 1:
        return kernels.SeparableDeltaTime(rng.uniform(0.0, 1.5), random_spatial(rng))
    if kind == 2:
        # finite abscissa; no delay, so the pole keeps a residue large enough
        # for lambda2 to sit clear of the boundary band
        return kernels.SeparableDeltaTime(0.0, kernels.TwoSidedExponential(rng.uniform(3.0, 6.0)))
    return kernels.SeparableProduct(kernels.Exponential(rng.uniform(0.5, 3.0), rng.uniform(0.0, 0.5)),
                                    random_spatial(rng))


def random_mixture(rng):
    n = int(rng.integers(2, 4))
    w = rng.dirichlet(np.ones(n))
    w[-1] = 1.0 - w[:-1].sum()
    return kernels.Mixture([(float(wi), random_component(rng)) for wi in w])


def uniqueness_model(K):
    return kpp(L=2.0, kernel=K)


@lru_cache(maxsize=None)
def uniqueness_runs(name, h=0.05):
    """Both seeds at c = c_ss + 0.5 on the fixed grid T = 60."""
    model = uniqueness_model(UNIQUENESS_KERNELS[name])
    _, c_ss = charspec._speeds(model)
    c = c_ss + 0.5
    cfg = SolverConfig(T=60.0, h=h, tol=SOLVER_TOL)
    return c, {seed: fixed_point_solve(model, c, seed, cfg) for seed in ("step", "tanh")}


# ---------------------------------------------------------------------------
# 1-6: characteristic function
# ---------------------------------------------------------------------------

def test_01_kpp_closed_form():
    with criterion(1, "KPP closed form c# = 2 sqrt(p - q)"):
        rng = np.random.default_rng(RNG_SEED)
        worst = 0.0
        for _ in range(20):
            p = rng.uniform(0.01, 10.0)
            q = rng.uniform(0.0, p)
            if q <= 0 or q >= p:
                continue
            c, _ = charspec.minimal_speed(CharParams(p, q, kernels.PointMass(0.0, 0.0)))
            worst = max(worst, abs(c - 2 * math.sqrt(p - q)))
        assert worst <= 1e-6, worst


def test_02_root_values():
    with criterion(2, "roots 0.5, 2.0 at c=2.5; double root 1 at c=2"):
        params = CharParams(2.0, 1.0, kernels.PointMass(0.0, 0.0))
        r = charspec.find_positive_roots(params, 2.5)
        assert abs(r.lambda1 - 0.5) <= 1e-8 and abs(r.lambda2 - 2.0) <= 1e-8
        d = charspec.find_positive_roots(params, 2.0)
        assert d.multiplicity_two
        assert abs(d.lambda1 - 1.0) <= 1e-5


def test_03_convexity_and_structure():
    with criterion(3, "convexity, R(0)=p-q, root ordering, monotone lambda1 and gamma_K"):
        rng = np.random.default_rng(RNG_SEED + 3)
        beta = 4.0
        dz = 1e-4
        for _ in range(10):
            K = random_mixture(rng)
            p = rng.uniform(1.0, 5.0)
            q = rng.uniform(0.0, 0.8 * p)
            params = CharParams(p, q, K)
            c_sharp, _ = charspec.minimal_speed(params)
            speeds = c_sharp + np.linspace(0.1, 3.0, 10)
            lam1, gk, gs, mus = [], [], [], []
            for c in speeds:
                gamma = kernels.convergence_abscissa(K, c)
                assert charspec.eval_R(params, 0.0, c) == pytest.approx(p - q, abs=1e-12)
                top = min(gamma, 2 * charspec.mu_q(c, q) + 2.0)
                for z in np.linspace(0.02, 0.97, 15) * top:
                    vals = [charspec.eval_R(params, x, c) for x in (z - dz, z, z + dz)]
                    assert (vals[0] + vals[2] - 2 * vals[1]) / dz ** 2 >= 2 - 1e-3
                r = charspec.find_positive_roots(params, c)
                assert r is not None and r.lambda1 <= r.lambda2 < r.mu_q
                lam1.append(r.lambda1)
                gk.append(charspec.gamma_K(c, beta, K))
                gs.append(gamma)
                mus.append(charspec.mu_of(c, beta))
            assert np.all(np.diff(lam1) < 0)
            # gamma_K = min(mu(c), gamma_sharp(c)): strictly increasing wherever mu is the
            # active branch, constant where a finite abscissa caps it
            for k in range(9):
                assert gk[k + 1] >= gk[k]
                if mus[k + 1] < gs[k + 1]:
                    assert gk[k + 1] > gk[k]


def test_04_beta_invariance():
    with criterion(4, "identity residual < 1e-10 and beta-invariant chi roots"):
        rng = np.random.default_rng(RNG_SEED + 4)
        models = [kpp(kernel=K) for K in UNIQUENESS_KERNELS.values()]
        worst = 0.0
        for i in range(100):
            model = models[i % len(models)]
            beta = 4.0
            c = rng.uniform(0.5, 5.0)
            top = min(charspec.gamma_K(c, beta, model.kernel), 8.0)
            z = rng.uniform(0.02, 0.98) * top
            worst = max(worst, charspec.char_identity_residual(model, beta, c, z))
        assert worst < 1e-10, worst
        for model in models:
            c_star, _ = charspec._speeds(model)
            c = c_star + 0.7
            beta0 = select_beta(model.f, 1.5)
            base = charspec.chi_roots(model, beta0, c)
            assert len(base) == 2
            for beta in (2 * beta0, 5 * beta0):
                other = charspec.chi_roots(model, beta, c)
                assert len(other) == len(base)
                assert np.max(np.abs(np.subtract(other, base))) <= 1e-8


def test_05_speed_bound():
    with criterion(5, "c* strictly above the moment lower bound (mean_space <= 0)"):
        rng = np.random.default_rng(RNG_SEED + 5)
        for _ in range(10):
            a = -rng.uniform(0.0, 2.0)
            h = rng.uniform(0.0, 2.0)
            kind = rng.integers(3)
            if kind == 0:
                K = kernels.PointMass(h, a)
            elif kind == 1:
                K = kernels.SeparableDeltaTime(h, kernels.Gaussian(rng.uniform(0.2, 2.0), a))
            else:
                K = kernels.SeparableProduct(kernels.Exponential(rng.uniform(0.5, 3.0), h),
                                             kernels.Gaussian(rng.uniform(0.2, 2.0), a))
            assert kernels.first_moments(K).mean_space <= 0
            p = rng.uniform(0.5, 5.0)
            q = rng.uniform(0.0, 0.9 * p)
            c_star, _ = charspec.minimal_speed(CharParams(p, q, K))
            assert c_star > charspec.speed_lower_bound(p, K)


def test_06_mass_identities():
    with criterion(6, "masses: int k1 = 1/beta, int k2 = 1, alpha int K2 = 1"):
        for c, beta in [(0.0, 1.0), (2.0, 3.0), (-1.5, 0.5), (6.0, 20.0)]:
            k1 = build_k1(c, beta)
            left, _ = integrate.quad(lambda s: float(k1(s)), -np.inf, 0.0)
            right, _ = integrate.quad(lambda s: float(k1(s)), 0.0, np.inf)
            assert abs((left + right) - 1.0 / beta) <= 1e-8
        catalogue = [
            kernels.PointMass(0.5, -0.3),
            kernels.SeparableDeltaTime(1.0, kernels.Gaussian(1.0, 0.2)),
            kernels.SeparableDeltaTime(0.5, kernels.TwoSidedExponential(2.0)),
            kernels.SeparableDeltaTime(0.0, kernels.OneSidedExponential(1.5, "left")),
            kernels.SeparableProduct(kernels.Exponential(2.0, 0.3), kernels.Gaussian(0.5)),
            kernels.SeparableProduct(kernels.Hypoexponential(1.0, 3.0), kernels.SpatialPointMass(0.4)),
            kernels.SeparableProduct(kernels.TemporalMixture([(0.5, kernels.TemporalPointMass(1.0)),
                                                              (0.5, kernels.Exponential(1.0))]),
                                     kernels.TwoSidedExponential(4.0)),
        ]
        for K in catalogue:
            for c in (0.5, 2.0):
                assert abs(kernels.build_k2(K, c).quadrature_mass() - 1.0) <= 1e-8
        for P in (kernels.TemporalPointMass(1.0), kernels.Exponential(2.0, 0.5),
                  kernels.TemporalMixture([(0.3, kernels.TemporalPointMass(0.0)), (0.7, kernels.Exponential(1.0))])):
            for alpha in (0.5, 1.0, 3.0):
                K2 = epidemic_K2(P, alpha)
                total = sum(integrate.quad(lambda w: float(K2(w)), a, b, limit=200)[0]
                            for a, b in [(0.0, 0.5), (0.5, 1.0), (1.0, 100.0)])
                assert abs(alpha * total - 1.0) <= 1e-8


# ---------------------------------------------------------------------------
# 7-10: wave profiles
# ---------------------------------------------------------------------------

def test_07_uniqueness_experiment():
    with criterion(7, "two seeds converge and align within 1e-3 sup"):
        for name in UNIQUENESS_KERNELS:
            c, runs = uniqueness_runs(name)
            a, b = runs["step"], runs["tanh"]
            assert isinstance(a, Profile) and isinstance(b, Profile), (name, a, b)
            _, dist = align_translate(a, b)
            assert dist < 1e-3 * a.sup, (name, dist)


def _describe(out):
    if isinstance(out, NotConverged):
        return f"NotConverged({out.reason}) sup={out.profile.sup:.3g} drift={out.drift_speed:.3g}"
    if isinstance(out, Profile):
        return f"Profile sup={out.sup:.3g}"
    return repr(out)


def test_08_nonexistence_experiment():
    with criterion(8, "below c*: small data collapses within 5000 sweeps"):
        outcomes = {}
        for name, K in UNIQUENESS_KERNELS.items():
            model = uniqueness_model(K)
            c_star, _ = charspec._speeds(model)
            for c in (c_star - 0.5, c_star - 1.0):
                out = fixed_point_solve(model, c, "small", SolverConfig(T=60.0, h=0.05, max_iter=5000))
                outcomes[(name, round(c, 6))] = out
        bad = {k: _describe(v) for k, v in outcomes.items()
               if not (isinstance(v, Collapsed) and v.sup < 1e-6)}
        assert not bad, f"not collapsed: {bad}"


def test_09_decay_rate_law():
    with criterion(9, "left-tail rate within 2% of lambda1, r2 >= 0.999"):
        for name, K in UNIQUENESS_KERNELS.items():
            c, runs = uniqueness_runs(name)
            lam1 = charspec.find_positive_roots(uniqueness_model(K).chi0_params(), c).lambda1
            for prof in runs.values():
                assert isinstance(prof, Profile)
                fit = prof.decay_fit
                assert abs(fit.rate - lam1) <= 0.02 * lam1, (name, fit.rate, lam1)
                assert fit.r2 >= 0.999


def test_10_profile_residual():
    with criterion(10, "residual < 1e-3 at h=0.05 and >= 3x smaller at h=0.025"):
        for name, K in UNIQUENESS_KERNELS.items():
            model = uniqueness_model(K)
            c, coarse = uniqueness_runs(name, 0.05)
            _, fine = uniqueness_runs(name, 0.025)
            for seed in coarse:
                r1 = residual(model, c, coarse[seed])
                r2 = residual(model, c, fine[seed])
                assert r1 < 1e-3, (name, seed, r1)
                assert r1 / r2 >= 3.0, (name, seed, r1, r2)


# ---------------------------------------------------------------------------
# 11-14: systems and verdicts
# ---------------------------------------------------------------------------

def test_11_epidemic_consistency():
    with criterion(11, "epidemic charfun = induced R; psi residual; c = 0 algebraic"):
        rng = np.random.default_rng(RNG_SEED + 11)
        laws = [kernels.TemporalPointMass(1.0), kernels.Exponential(2.0, 0.5),
                kernels.TemporalMixture([(0.5, kernels.TemporalPointMass(0.5)), (0.5, kernels.Exponential(1.0))])]
        models = [EpidemicModel(1.5, P, kernels.Gaussian(1.0), linear(1.0), saturating(3.0), 3.0) for P in laws]
        for i in range(50):
            m = models[i % len(models)]
            z, c = rng.uniform(0.05, 3.0), rng.uniform(0.1, 5.0)
            direct = epidemic_charfun(m, z, c)
            induced = charspec.eval_R(m.scalar_model().chi0_params(), z, c)
            assert abs(direct - induced) <= 1e-8 * max(1.0, abs(induced))
        for m in models:
            phi, psi = epidemic_solve(m, 2.5, SolverConfig(T=100.0, tol=SOLVER_TOL))
            assert isinstance(phi, Profile)
            assert psi.residual < 1e-3, psi.residual
        psi0 = epidemic_psi(models[0], phi, 0.0)
        gap = np.max(np.abs(models[0].alpha * psi0.phi - models[0].g(phi.phi)))
        assert gap <= 4 * np.finfo(float).eps * np.max(np.abs(models[0].g(phi.phi)))


def test_12_population_reconstruction():
    with criterion(12, "population psi residual < 1e-3; psi = 0 for the local kernel"):
        K = kernels.SeparableDeltaTime(1.0, kernels.Gaussian(1.0))
        m = PopulationModel(1.0, 0.5, K, linear(1.0), saturating(2.0), 2.0)
        phi, psi = population_solve(m, 2.5, SolverConfig(T=100.0, tol=SOLVER_TOL))
        assert isinstance(phi, Profile)
        assert psi.residual < 1e-3
        m0 = PopulationModel(1.0, 0.5, kernels.PointMass(0.0, 0.0), linear(1.0), saturating(2.0), 2.0)
        _, psi0 = population_solve(m0, 3.0, SolverConfig(tol=SOLVER_TOL))
        assert np.max(np.abs(psi0.phi)) < 1e-12


def test_13_equilibrium_preservation():
    with criterion(13, "constant equilibria are fixed points of the map"):
        t = SolverConfig().grid()
        for K in list(UNIQUENESS_KERNELS.values()) + [
                kernels.SeparableProduct(kernels.Exponential(2.0), kernels.TwoSidedExponential(3.0))]:
            model = kpp(kernel=K)
            kappa = model.equilibrium()
            for c in (0.5, 2.5):
                out = iteration_map(model, c, 5.0, t, np.full_like(t, kappa), left_rate=0.0)
                assert np.max(np.abs(out - kappa)) <= 1e-10


def test_14_verdict_partition():
    with criterion(14, "NonExistent / Indeterminate / UniqueIfExists partition"):
        model = kpp(L=3.0)
        c_star, c_ss = charspec._speeds(model)
        assert c_ss > c_star
        for c in np.linspace(0.0, 5.0, 50):
            v = charspec.classify_speed(model, c)
            if c < c_star:
                assert v == charspec.NON_EXISTENT, (c, v)
            elif c < c_ss:
                assert v == charspec.INDETERMINATE, (c, v)
            else:
                assert v == charspec.UNIQUE_IF_EXISTS, (c, v)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
