import numpy as np
import pytest
import sympy as sp

from harmonic_acoustics.benchmark import BenchmarkSpec, build_benchmark_source
from harmonic_acoustics.errors import UnsupportedOrder
from harmonic_acoustics.geometry import AnnulusDomain
from harmonic_acoustics.models import ModelConfig, solve_model
from harmonic_acoustics.near_field import (CorrectorInput, CutoffSpec, analytic_profiles,
                                           boundary_layer_velocity, decay_rate,
                                           verify_near_field_odes)
from harmonic_acoustics.spectral import RadialGrid, l2_norm_vector, synthesize

DOM = AnnulusDomain(1.5, 2.0)
NU0, OMEGA = 1.0, 15.0
M = 4


def _traces(value, m=0, k=1):
    t = np.zeros(2 * M + 1, complex)
    t[M + m] = value
    return {k: {"inner": t.copy(), "outer": t.copy()}}


def _corrector(traces, eps=0.05, order=0, n_r=64):
    grid = RadialGrid(1.5, 2.0, n_r)
    inp = CorrectorInput(traces, eps, eps**2 * NU0, OMEGA, order, CutoffSpec.default(DOM), DOM)
    return grid, boundary_layer_velocity(inp, grid, M)


def test_cutoff():
    chi = CutoffSpec.default(DOM)
    s = np.linspace(0, 0.25, 201)
    vals = chi(s)
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(vals[s <= chi.plateau_end] == 1) and np.all(vals[s >= chi.support_end] == 0)
    assert np.all(np.diff(vals) <= 0)
    with pytest.raises(ValueError):
        CutoffSpec(0.2, 0.1).check(DOM)
    with pytest.raises(ValueError):
        CutoffSpec(0.1, 0.3).check(DOM)


def test_trace_order_invariant():
    with pytest.raises(ValueError):
        CorrectorInput(_traces(1.0, k=2), 0.1, 0.01, OMEGA, 0, CutoffSpec.default(DOM), DOM)


def test_zero_traces_give_zero():
    grid, out = _corrector(_traces(0.0))
    assert l2_norm_vector(out[1]) == 0


def test_order0_cancels_unit_trace_at_wall():
    grid, out = _corrector(_traces(1.0))
    v = out[1]
    for b, idx in ((DOM.inner, 0), (DOM.outer, -1)):
        assert v.tangential_trace(b)[M] == pytest.approx(-1.0, abs=1e-14)
        assert abs(v.radial.values[M, idx]) < 1e-14


def test_decay_rate_and_envelope():
    eps = 0.05
    nu = eps**2 * NU0
    lam = decay_rate(nu, OMEGA)
    assert lam**2 == pytest.approx(-1j * OMEGA / nu)
    assert decay_rate(nu, OMEGA, 2) == pytest.approx(np.sqrt(2) * lam)
    s = 5 * np.sqrt(2 * nu / OMEGA)
    assert abs(np.exp(-lam * s)) == pytest.approx(np.exp(-5), rel=1e-12)
    # the same envelope on the grid, inside the plateau
    grid, out = _corrector(_traces(1.0), eps, n_r=128)
    s_grid, _ = DOM.distance_to_wall(grid.nodes)
    mag = np.abs(out[1].angular.values[M])
    near = s_grid <= CutoffSpec.default(DOM).plateau_end
    assert np.all(mag[near] <= np.exp(-s_grid[near] / np.sqrt(2 * nu / OMEGA)) * (1 + 1e-12))


def test_order0_matches_scaled_profile_in_plateau():
    eps = 0.05
    rng = np.random.default_rng(1)
    t = {w: rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1) for w in ("inner", "outer")}
    grid, out = _corrector({1: {w: eps**2 * t[w] for w in t}}, eps)
    s, is_outer = DOM.distance_to_wall(grid.nodes)
    plateau = s <= CutoffSpec.default(DOM).plateau_end
    v = out[1]
    for b in DOM.boundaries():
        sel = plateau & (is_outer if b.which == "outer" else ~is_outer)
        tan = b.orientation_sign * v.angular.values[:, sel]
        for j, m in enumerate(range(-M, M + 1)):
            ut, us, q = analytic_profiles(1, 0, {"v0": t[b.which][j]}, b.curvature, NU0, OMEGA,
                                          s[sel] / eps)
            assert np.max(np.abs(tan[j] - eps**2 * ut)) < 1e-12
            assert np.all(q == 0) and np.all(us == 0)


def test_support_is_exact():
    grid, out = _corrector(_traces(1.0, 2), order=2)
    s, _ = DOM.distance_to_wall(grid.nodes)
    outside = s >= CutoffSpec.default(DOM).support_end
    assert outside.any()
    assert np.all(out[1].angular.values[:, outside] == 0)
    assert np.all(out[1].radial.values[:, outside] == 0)


def test_profile_examples():
    ut, us, q = analytic_profiles(1, 0, {"v0": 1.0}, 0.5, NU0, OMEGA, 0.0)
    assert (ut, us, q) == (-1, 0, 0)
    for j in range(3):
        assert all(np.all(x == 0) for x in analytic_profiles(0, j, {"v0": 1.0}, 0.5, NU0, OMEGA,
                                                             np.linspace(0, 3, 5)))
    with pytest.raises(UnsupportedOrder):
        analytic_profiles(1, 3, {}, 0.0, NU0, OMEGA, 0.0)
    with pytest.raises(UnsupportedOrder):
        analytic_profiles(3, 0, {}, 0.0, NU0, OMEGA, 0.0)


def test_order1_normal_profile_symbolic():
    # hand substitution: u_s = -(dv0 / lambda0) exp(-lambda0 S), checked with sympy
    S, w, nu0 = sp.symbols("S omega nu0", positive=True)
    lam0 = (1 - sp.I) * sp.sqrt(w / (2 * nu0))
    u_s = -sp.exp(-lam0 * S) / lam0
    # continuity d_S u_s = -d_tau u_tau^0 with u_tau^0 = -v0 exp(-lam0 S), d_tau v0 = 1
    assert sp.simplify(sp.diff(u_s, S) - sp.exp(-lam0 * S)) == 0
    expect = complex(u_s.subs({S: 1, w: OMEGA, nu0: NU0}).evalf())
    ut, us, q = analytic_profiles(1, 1, {"dv0": 1.0, "v1": 0.0}, 0.0, NU0, OMEGA, 1.0)
    assert abs(ut) == 0 and q == 0
    assert us == pytest.approx(expect, rel=1e-13)


TRACES = {"v0": 0.7 - 0.2j, "v1": 0.3j, "v2": -0.4, "dv0": 1.1, "dv1": 0.5 + 0.5j,
          "ddv0": -2.0, "kappa_prime": 0.0}


@pytest.mark.parametrize("k,j", [(1, 0), (1, 1), (1, 2), (2, 2), (0, 2)])
def test_ode_residuals(k, j):
    rep = verify_near_field_odes(k, j, TRACES, 0.5, NU0, OMEGA)
    assert rep["max"] <= 1e-6


def test_order2_second_harmonic_rate():
    S = np.linspace(0, 3, 7)
    ut, _, _ = analytic_profiles(2, 2, {"v0": 1.0}, 0.0, NU0, OMEGA, S)
    lam0 = (1 - 1j) * np.sqrt(OMEGA / (2 * NU0))
    assert np.allclose(ut, -np.exp(-np.sqrt(2) * lam0 * S), rtol=1e-14)
    # 2iw + nu0 d_S^2 annihilates it
    assert abs(2j * OMEGA + NU0 * 2 * lam0**2) < 1e-12


@pytest.mark.parametrize("order", [0, 1, 2])
def test_benchmark_no_slip_closure(order):
    spec = BenchmarkSpec()
    eps = 0.1
    cfg = ModelConfig(epsilon=eps, order=order, m_max=12, n_r=32)
    sol = solve_model(cfg, build_benchmark_source(spec))
    grid = sol.grid
    inp = CorrectorInput.from_solution(sol, eps, cfg.nu, domain=DOM)
    corr = boundary_layer_velocity(inp, grid, cfg.m_max)
    for k, bl in corr.items():
        total = sol.velocity[k] + bl
        scale = np.max(np.abs(synthesize(sol.velocity[k].angular, 64)))
        for b in DOM.boundaries():
            assert np.max(np.abs(total.tangential_trace(b))) <= 1e-10 * scale
