import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from wavefront_lab import charspec, kernels
from wavefront_lab.errors import DenominatorNonPositive, ModelError
from wavefront_lab.nonlinear import linear, saturating
from wavefront_lab.systems import (
    EpidemicModel,
    PopulationModel,
    epidemic_K2,
    epidemic_charfun,
    epidemic_psi,
    epidemic_solve,
    immature_kernel,
    population_solve,
)
from wavefront_lab.wavesolve import Profile, SolverConfig

DELAYS = [
    kernels.TemporalPointMass(0.0),
    kernels.TemporalPointMass(1.0),
    kernels.Exponential(2.0),
    kernels.Exponential(1.0, 0.5),
    kernels.TemporalMixture([(0.4, kernels.TemporalPointMass(0.5)), (0.6, kernels.Exponential(3.0))]),
]


def epidemic(P=kernels.TemporalPointMass(1.0), alpha=1.0, p=3.0):
    return EpidemicModel(alpha, P, kernels.Gaussian(1.0), linear(1.0), saturating(p), p)


@pytest.mark.parametrize("P", DELAYS)
@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_K2_integrates_to_inverse_alpha(P, alpha):
    K2 = epidemic_K2(P, alpha)
    total, _ = integrate.quad(lambda w: float(K2(w)), 0.0, 80.0, points=[0.5, 1.0], limit=400)
    assert alpha * total == pytest.approx(1.0, abs=1e-8)
    assert K2.integral == 1.0 / alpha


def test_K2_point_delay_closed_form():
    K2 = epidemic_K2(kernels.TemporalPointMass(1.0), 2.0)
    w = np.array([0.5, 1.0, 2.0, 3.0])
    assert np.allclose(K2(w), np.where(w >= 1.0, np.exp(-2.0 * (w - 1.0)), 0.0))


@given(z=st.floats(0.05, 3.0), c=st.floats(0.1, 5.0), idx=st.integers(0, len(DELAYS) - 1))
def test_charfun_equals_induced_R(z, c, idx):
    model = epidemic(DELAYS[idx])
    direct = epidemic_charfun(model, z, c)
    scalar = model.scalar_model()
    assert direct == pytest.approx(charspec.eval_R(scalar.chi0_params(), z, c), rel=1e-10, abs=1e-10)


def test_charfun_denominator_guard():
    with pytest.raises(DenominatorNonPositive):
        epidemic_charfun(epidemic(), 2.0, -1.0)


def test_unsupported_delay_law():
    with pytest.raises(ModelError):
        EpidemicModel(1.0, kernels.Hypoexponential(1.0, 2.0), kernels.Gaussian(1.0),
                      linear(1.0), saturating(3.0), 3.0)


@pytest.mark.parametrize("P", [kernels.TemporalPointMass(1.0), kernels.Exponential(2.0)])
def test_epidemic_reconstruction_residual(P):
    model = epidemic(P)
    phi, psi = epidemic_solve(model, 2.5, SolverConfig(tol=1e-10))
    assert isinstance(phi, Profile)
    assert psi.residual < 1e-3
    assert phi.residual < 1e-3
    # psi tends to g(kappa)/alpha behind the front
    kappa = model.scalar_model().equilibrium()
    assert psi.phi[-1] == pytest.approx(float(model.g(kappa)) / model.alpha, rel=1e-3)


def test_epidemic_zero_speed_algebraic():
    model = epidemic(alpha=2.0)
    t = np.linspace(-20, 20, 801)
    phi = Profile(t, 0.5 * (1 + np.tanh(t)), 0.0)
    psi = epidemic_psi(model, phi, 0.0)
    assert np.max(np.abs(model.alpha * psi.phi - model.g(phi.phi))) <= 1e-15


def test_immature_kernel_mass():
    k = immature_kernel(0.7, 0.5, 1.5)
    assert k.beta == 0.5
    total, _ = integrate.quad(lambda s: float(k(s)), -60, 200, points=[0.0], limit=400)
    assert total == pytest.approx(1.0 / 0.5, rel=1e-9)
    # roots of D z^2 - c z - gamma
    for z in (k.nu, k.mu):
        assert 0.7 * z * z - 1.5 * z - 0.5 == pytest.approx(0.0, abs=1e-12)


def test_population_reconstruction():
    K = kernels.SeparableDeltaTime(1.0, kernels.Gaussian(1.0))
    model = PopulationModel(1.0, 0.5, K, linear(1.0), saturating(2.0), 2.0)
    phi, psi = population_solve(model, 2.5, SolverConfig(T=100.0, tol=1e-10))
    assert isinstance(phi, Profile)
    assert psi.residual < 1e-3
    assert psi.meta["negative_count"] == 0


def test_population_local_kernel_gives_zero_immature():
    model = PopulationModel(1.0, 0.5, kernels.PointMass(0.0, 0.0), linear(1.0), saturating(2.0), 2.0)
    phi, psi = population_solve(model, 3.0)
    assert np.max(np.abs(psi.phi)) < 1e-12


def test_population_rejects_bad_parameters():
    with pytest.raises(ModelError):
        PopulationModel(0.0, 0.5, kernels.PointMass(0.0, 0.0), linear(1.0), saturating(2.0), 2.0)
