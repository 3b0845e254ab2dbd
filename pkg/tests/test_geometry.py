import numpy as np
import pytest

from harmonic_acoustics.geometry import (AnnulusDomain, BoundaryCurve, boundary_frame,
                                         curvature_of, parametrization, tangential_derivative)


DOM = AnnulusDomain(1.5, 2.0)


def test_domain_invariants():
    with pytest.raises(ValueError):
        AnnulusDomain(2.0, 1.5)
    assert DOM.width == pytest.approx(0.5)
    assert DOM.inner.radius == 1.5 and DOM.outer.radius == 2.0


def test_frame_examples():
    n, nperp, x = boundary_frame(DOM.outer, 0.0)
    assert np.allclose(n, [1, 0]) and np.allclose(x, [2, 0])
    n, nperp, x = boundary_frame(DOM.inner, 0.0)
    assert np.allclose(n, [-1, 0]) and np.allclose(x, [1.5, 0])
    n, nperp, _ = boundary_frame(DOM.outer, np.pi / 2)
    assert np.allclose(n, [0, 1], atol=1e-15)
    assert np.allclose(nperp, [n[1], -n[0]], atol=1e-15)


@pytest.mark.parametrize("wall", ["inner", "outer"])
def test_frame_orthonormal(wall):
    b = getattr(DOM, wall)
    for th in np.linspace(0, 2 * np.pi, 17, endpoint=False):
        n, nperp, x = boundary_frame(b, th)
        assert abs(np.linalg.norm(n) - 1) < 1e-14
        assert abs(n @ nperp) < 1e-14
        assert np.array_equal(nperp, np.array([n[1], -n[0]]))


def _curvature_formula(x, tau, h=1e-4):
    """kappa = (x1' x2'' - x2' x1'') / |x'|^3 with central differences."""
    xp = (x(tau + h) - x(tau - h)) / (2 * h)
    xpp = (x(tau + h) - 2 * x(tau) + x(tau - h)) / h**2
    return (xp[0] * xpp[1] - xp[1] * xpp[0]) / np.hypot(*xp) ** 3


@pytest.mark.parametrize("wall,expected", [("outer", 0.5), ("inner", -1 / 1.5)])
def test_curvature_from_parametrization(wall, expected):
    b = getattr(DOM, wall)
    R, sg = b.radius, b.orientation_sign
    x = lambda tau: R * np.array([np.cos(sg * tau / R), np.sin(sg * tau / R)])
    tau = 0.3
    pos, dx, ddx = parametrization(b, tau)
    assert np.allclose(pos, x(tau), atol=1e-15)
    assert np.allclose(dx, (x(tau + 1e-6) - x(tau - 1e-6)) / 2e-6, atol=1e-8)
    # stepping a small s along -n must enter the annulus
    n, _, base = boundary_frame(b, np.arctan2(*x(tau)[::-1]))
    r_in = np.hypot(*(base - 1e-3 * n))
    assert DOM.r_inner < r_in < DOM.r_outer
    # the traversal direction ties the tangent to the frame: e_tau = -n_perp
    n, nperp, _ = boundary_frame(b, sg * tau / R)
    assert np.allclose(dx, -nperp, atol=1e-14)
    # the parametrization has unit speed
    h = 1e-6
    assert np.hypot(*(x(tau + h) - x(tau - h))) / (2 * h) == pytest.approx(1, abs=1e-8)
    assert _curvature_formula(x, tau) == pytest.approx(expected, rel=1e-6)
    assert curvature_of(b) == pytest.approx(expected, rel=1e-14)


def test_flat_limit():
    assert abs(curvature_of(BoundaryCurve("outer", 1e12))) < 1e-11


def test_tangential_derivative():
    M = 5
    m = np.arange(-M, M + 1)
    const = np.zeros(2 * M + 1, complex)
    const[M] = 3.0
    assert np.all(tangential_derivative(const, DOM.outer, 1) == 0)
    tr = np.zeros(2 * M + 1, complex)
    tr[M + 3] = 1.0
    d2 = tangential_derivative(tr, DOM.outer, 2)
    assert d2[M + 3] == pytest.approx(-(3 / 2.0) ** 2)
    rng = np.random.default_rng(0)
    t = rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)
    for b in DOM.boundaries():
        once = tangential_derivative(tangential_derivative(t, b, 1), b, 1)
        assert np.allclose(once, tangential_derivative(t, b, 2), rtol=1e-14, atol=0)
    assert m.size == t.size
