import numpy as np
import pytest
import sympy as sp

from harmonic_acoustics.benchmark import find_radial_wavenumber
from harmonic_acoustics.errors import ResonanceError
from harmonic_acoustics.geometry import AnnulusDomain
from harmonic_acoustics.scalar_solvers import (BoundarySpec, HelmholtzProblem, mode_matrix,
                                               neumann_eigenvalue_guard, residual,
                                               solve_helmholtz)
from harmonic_acoustics.spectral import FourierField, RadialGrid, l2_norm

R1, R2 = 1.5, 2.0
DOM = AnnulusDomain(R1, R2)
M = 4


def _manufactured(kind, alpha, beta, nu=0.02, omega=3.0, n_r=32):
    """p = cos(pi (r - R1)/(R2 - R1)) e^{2 i theta}; rhs and wall data from sympy."""
    r = sp.symbols("r", positive=True)
    m = 2
    P = sp.cos(sp.pi * (r - R1) / (R2 - R1))
    lap = sp.diff(P, r, 2) + sp.diff(P, r) / r - m**2 * P / r**2
    rhs_r = sp.lambdify(r, alpha * lap + beta * P, "numpy")
    p_r = sp.lambdify(r, P, "numpy")
    dp_r = sp.lambdify(r, sp.diff(P, r), "numpy")
    grid = RadialGrid(R1, R2, n_r)
    rhs = FourierField.from_mode(grid, M, m, rhs_r(grid.nodes) + 0 * grid.nodes)
    exact = FourierField.from_mode(grid, M, m, p_r(grid.nodes))
    bcs = []
    a = (1 + 1j) * np.sqrt(nu / (2 * omega))
    for b in (DOM.inner, DOM.outer):
        R = b.radius
        g = b.normal_sign * dp_r(R)
        if kind != "neumann":
            g += -a * (m / R) ** 2 * p_r(R)
        if kind == "generalized_wentzell":
            g += -1j * nu / (2 * omega) * b.curvature * (m / R) ** 2 * p_r(R)
        data = np.zeros(2 * M + 1, complex)
        data[M + m] = g
        bcs.append(BoundarySpec(b, kind, nu, omega, data))
    return HelmholtzProblem(alpha, beta, rhs, *bcs), exact


@pytest.mark.parametrize("kind", ["neumann", "wentzell", "generalized_wentzell"])
def test_manufactured_solution(kind):
    prob, exact = _manufactured(kind, 1 - 0.2j, 7.0)
    p = solve_helmholtz(prob)
    assert l2_norm(p - exact) <= 1e-8 * l2_norm(exact)
    assert residual(prob, p) <= 1e-10


def test_spectral_accuracy():
    errs = []
    for n in (8, 32):
        prob, exact = _manufactured("generalized_wentzell", 1.0, 7.0, n_r=n)
        errs.append(l2_norm(solve_helmholtz(prob) - exact) / l2_norm(exact))
    assert errs[1] <= errs[0] * 1e-3


def test_zero_data_gives_zero():
    grid = RadialGrid(R1, R2, 16)
    prob = HelmholtzProblem(1.0, 225.0, FourierField.zeros(grid, M),
                            BoundarySpec(DOM.inner), BoundarySpec(DOM.outer))
    assert np.all(solve_helmholtz(prob).values == 0)


def test_wentzell_row_reduction():
    grid = RadialGrid(R1, R2, 12)
    nu, w, m = 0.01, 15.0, 3
    neu = mode_matrix(grid, m, 1.0, 5.0, BoundarySpec(DOM.inner), BoundarySpec(DOM.outer))
    wen = mode_matrix(grid, m, 1.0, 5.0, BoundarySpec(DOM.inner),
                      BoundarySpec(DOM.outer, "wentzell", nu, w))
    diff = wen - neu
    e = np.zeros(grid.n_r)
    e[-1] = 1.0
    assert np.allclose(diff[-1], (1 + 1j) * np.sqrt(nu / (2 * w)) * (-(m / R2) ** 2) * e)
    assert np.all(diff[:-1] == 0)


def test_linearity_and_decoupling():
    grid = RadialGrid(R1, R2, 20)
    rng = np.random.default_rng(3)
    f1 = FourierField(grid, rng.normal(size=(2 * M + 1, grid.n_r)) + 0j)
    f2 = FourierField(grid, rng.normal(size=(2 * M + 1, grid.n_r)) + 0j)
    bcs = (BoundarySpec(DOM.inner, "wentzell", 0.01, 15.0), BoundarySpec(DOM.outer, "wentzell", 0.01, 15.0))
    solve = lambda f: solve_helmholtz(HelmholtzProblem(1.0, 10.0, f, *bcs))
    lhs = solve(f1 * 2.0 + f2 * (-3j))
    rhs = solve(f1) * 2.0 + solve(f2) * (-3j)
    assert l2_norm(lhs - rhs) <= 1e-12 * l2_norm(lhs)
    single = FourierField.from_mode(grid, M, 2, np.cos(grid.nodes))
    p = solve(single)
    others = np.delete(p.values, M + 2, axis=0)
    assert np.all(others == 0)


def test_small_viscosity_limit():
    grid = RadialGrid(R1, R2, 24)
    rhs = FourierField.from_function(grid, M, lambda r, th: r * np.cos(3 * th))
    neu = solve_helmholtz(HelmholtzProblem(1.0, 10.0, rhs, BoundarySpec(DOM.inner), BoundarySpec(DOM.outer)))
    diffs = []
    for nu in (1e-4, 1e-6, 1e-8):
        bcs = [BoundarySpec(b, "wentzell", nu, 15.0) for b in (DOM.inner, DOM.outer)]
        diffs.append(l2_norm(solve_helmholtz(HelmholtzProblem(1.0, 10.0, rhs, *bcs)) - neu))
    assert diffs[0] > diffs[1] > diffs[2]
    # the impedance scales like sqrt(nu): a factor 10 per step
    for a, b in zip(diffs, diffs[1:]):
        assert 0.08 < b / a < 0.12


def test_eigenvalue_guard():
    grid = RadialGrid(R1, R2, 32)
    assert neumann_eigenvalue_guard(225.0, 8, grid) == []
    k = find_radial_wavenumber(4, DOM)
    assert 4 in neumann_eigenvalue_guard(k**2, 8, grid)
    assert neumann_eigenvalue_guard(0.0, 3, grid) == [0]


def test_resonance_raises():
    grid = RadialGrid(R1, R2, 16)
    rhs = FourierField.from_mode(grid, 2, 0, 1.0)
    with pytest.raises(ResonanceError):
        solve_helmholtz(HelmholtzProblem(1.0, 0.0, rhs, BoundarySpec(DOM.inner), BoundarySpec(DOM.outer)))
