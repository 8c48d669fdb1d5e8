import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from conftest import kpp
from wavefront_lab import kernels
from wavefront_lab.errors import GridTooCoarse, WindowTooSmall
from wavefront_lab.nonlinear import WaveModel, linear, quadratic, ricker, saturating
from wavefront_lab.wavesolve import (
    Collapsed,
    NotConverged,
    Profile,
    SolverConfig,
    align_translate,
    check_lipschitz,
    decompose,
    fixed_point_solve,
    initial_profile,
    iteration_map,
    select_beta,
    verify_hypotheses,
)


def shooting_profile(c, t_span=250.0, delta=1e-8):
    """Front of phi'' = c phi' + phi - 2 phi/(1+phi) traced back from the saddle at 1."""
    # linearization at 1: z^2 - c z - 1/2 = 0; take the decaying branch
    z = 0.5 * (c - math.sqrt(c * c + 2.0))

    def rhs(t, y):
        u, v = y
        return [v, c * v + u - 2 * u / (1 + u)]

    sol = solve_ivp(rhs, (0.0, -t_span), [1 - delta, -z * delta], rtol=1e-12, atol=1e-15,
                    dense_output=True)
    t = np.linspace(-t_span, 0.0, 40_001)
    return t, sol.sol(t)[0]


def test_profile_matches_ode_shooting(kpp_model):
    c = 3.0
    prof = fixed_point_solve(kpp_model, c, "tanh", SolverConfig(T=60, h=0.05, tol=1e-10))
    assert isinstance(prof, Profile)
    t, u = shooting_profile(c)
    ok = u > 1e-9
    t, u = t[ok], u[ok]
    ode = Profile(t - np.interp(0.5, u, t), u, c)
    _, dist = align_translate(prof, ode)
    assert dist < 1e-3


def test_decay_rate_matches_lambda1(kpp_model):
    prof = fixed_point_solve(kpp_model, 3.0, "step", SolverConfig(tol=1e-10))
    lam1 = 0.5 * (3.0 - math.sqrt(5.0))
    assert prof.decay_fit.rate == pytest.approx(lam1, rel=1e-3)
    assert prof.decay_fit.r2 > 0.9999
    assert prof.residual < 1e-4


def test_seeds_agree_after_translation():
    K = kernels.SeparableDeltaTime(1.0, kernels.Gaussian(1.0))
    model = kpp(kernel=K)
    cfg = SolverConfig(tol=1e-10)
    a = fixed_point_solve(model, 2.0, "step", cfg)
    b = fixed_point_solve(model, 2.0, "tanh", cfg)
    _, dist = align_translate(a, b)
    assert dist < 1e-4 * a.sup


@pytest.mark.parametrize("K", [kernels.PointMass(0.0, 0.0),
                               kernels.SeparableDeltaTime(1.0, kernels.Gaussian(1.0)),
                               kernels.SeparableProduct(kernels.Exponential(2.0), kernels.TwoSidedExponential(3.0))])
def test_equilibrium_is_fixed(K):
    model = kpp(kernel=K)
    t = SolverConfig().grid()
    kappa = model.equilibrium()
    assert kappa == pytest.approx(1.0)
    phi = np.full_like(t, kappa)
    out = iteration_map(model, 2.5, 5.0, t, phi, left_rate=0.0)
    assert np.max(np.abs(out - kappa)) < 1e-10


def test_below_minimal_speed_has_no_profile(kpp_model):
    out = fixed_point_solve(kpp_model, 1.0, "small", SolverConfig())
    assert not isinstance(out, Profile)
    if isinstance(out, NotConverged):
        # the front keeps translating relative to the moving frame
        assert out.drift_speed < 0


def test_subcritical_model_collapses():
    model = WaveModel(linear(2.0), saturating(1.0), kernels.PointMass(0.0, 0.0), strict=False)
    out = fixed_point_solve(model, 2.0, "tanh", SolverConfig(T=30))
    assert isinstance(out, Collapsed)
    assert out.sup < 1e-6


def test_tiny_seed_is_collapsed_immediately(kpp_model):
    out = fixed_point_solve(kpp_model, 3.0, np.full(2401, 1e-9), SolverConfig())
    assert out == Collapsed(0, 1e-9)


def test_grid_and_window_errors(kpp_model):
    with pytest.raises(GridTooCoarse):
        fixed_point_solve(kpp_model, 2.5, "tanh", SolverConfig(h=0.6))
    with pytest.raises(WindowTooSmall):
        fixed_point_solve(kpp_model, 3.0, "tanh", SolverConfig(T=20.0, window_tol=1e-8))
    with pytest.raises(ValueError):
        SolverConfig(left_extension="mirror")


def test_non_monotone_birth_is_experimental():
    model = WaveModel(linear(1.0), ricker(3.0), kernels.PointMass(0.0, 0.0))
    prof = fixed_point_solve(model, 3.0, "tanh", SolverConfig())
    assert isinstance(prof, Profile)
    assert prof.status == "Experimental"
    assert prof.sup == pytest.approx(math.log(3.0), rel=1e-2)


def test_solver_is_deterministic(kpp_model):
    a = fixed_point_solve(kpp_model, 3.0, "tanh", SolverConfig())
    b = fixed_point_solve(kpp_model, 3.0, "tanh", SolverConfig())
    assert np.array_equal(a.phi, b.phi)


def test_initial_presets():
    t = SolverConfig().grid()
    step = initial_profile("step", t, 2.0)
    assert step[-1] == 2.0 and step[0] == 0.0
    footed = initial_profile("step", t, 2.0, tail_rate=0.5)
    assert footed[0] > 0 and np.all(np.diff(footed) >= -1e-15)
    assert initial_profile("small", t).max() < 1e-2
    with pytest.raises(ValueError):
        initial_profile("spike", t)


def test_atom_masses():
    dec = decompose(kernels.PointMass(0.0, 0.0), 2.0, 4.0)
    assert dec.atom_masses() == pytest.approx((0.25, 0.25))


def test_select_beta_dominates_f():
    beta = select_beta(quadratic(1.0, 1.0), 3.0)
    assert beta >= 1.0 + 2 * 3.0 + 1.0 - 1e-9


# ---------------------------------------------------------------------------
# hypotheses and alignment
# ---------------------------------------------------------------------------

def test_square_birth_violates_lipschitz():
    ok, slope, bad = check_lipschitz(quadratic(0.0, 1.0), 1.0, 2.0, n_pairs=2000, seed=3)
    assert not ok and bad > 0 and slope > 1.0


def test_kpp_hypotheses_hold(kpp_model):
    rep = verify_hypotheses(kpp_model, 1.5, 3.0, seed=0, n_pairs=2000)
    assert rep.all_ok
    d = rep.to_dict()
    assert d["all_ok"] is True and d["lipschitz_violations"] == 0


@given(shift=st.floats(-3.0, 3.0))
def test_align_translate_recovers_shift(shift):
    t = np.linspace(-30, 30, 1201)
    a = Profile(t, 0.5 * (1 + np.tanh(t / 3)), 1.0)
    b = Profile(t, 0.5 * (1 + np.tanh((t - shift) / 3)), 1.0)
    s, d = align_translate(a, b)
    assert s == pytest.approx(shift, abs=1e-3)
    assert d < 1e-4
