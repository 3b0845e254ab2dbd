import numpy as np
import pytest

from harmonic_acoustics.benchmark import BenchmarkSpec, build_benchmark_source
from harmonic_acoustics.models import (HarmonicSolution, ModelConfig, SourceSpec,
                                       acoustic_velocity_from_pressure, active_harmonics,
                                       reconstruct_time, second_harmonic_pressure,
                                       solve_acoustic_pressure, solve_acoustic_velocity,
                                       solve_model, static_pressure_order2)
from harmonic_acoustics.spectral import (FourierField, RadialGrid, VectorFourierField, gradient,
                                         hermitian_dot, l2_norm, l2_norm_vector, synthesize)

SPEC = BenchmarkSpec()
SOURCE = build_benchmark_source(SPEC)


def _cfg(eps=0.1, order=2, **kw):
    base = dict(epsilon=eps, order=order, m_max=12, n_r=32)
    base.update(kw)
    return ModelConfig(**base)


def test_config_invariants():
    with pytest.raises(ValueError):
        ModelConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        ModelConfig(epsilon=0.1, c=-1.0)
    with pytest.raises(ValueError):
        ModelConfig(epsilon=0.1, order=2, harmonic_cap=1)
    with pytest.raises(ValueError):
        ModelConfig(epsilon=0.1, p2_bc="dirichlet")
    assert [active_harmonics(N) for N in (0, 1, 2)] == [1, 1, 2]
    assert _cfg(0.1).nu == pytest.approx(0.01)


@pytest.mark.parametrize("form", ["pressure", "velocity"])
@pytest.mark.parametrize("order", [0, 1, 2])
def test_zero_source(form, order):
    sol = solve_model(_cfg(order=order), SourceSpec(), form)
    for p in sol.pressure.values():
        assert l2_norm(p) == 0
    for v in sol.velocity.values():
        assert l2_norm_vector(v) == 0


@pytest.mark.parametrize("form", ["pressure", "velocity"])
@pytest.mark.parametrize("order", [0, 1, 2])
def test_harmonic_support_and_real_mean_fields(form, order):
    sol = solve_model(_cfg(order=order), SOURCE, form)
    kmax = int(np.ceil((order + 1) / 2))
    assert set(sol.pressure) <= set(range(kmax + 1))
    assert set(sol.velocity) <= set(range(kmax + 1))
    if 0 in sol.pressure:
        p0 = synthesize(sol.pressure[0], 64)
        assert np.max(np.abs(p0.imag)) <= 1e-11 * np.max(np.abs(p0))
    if 0 in sol.velocity:
        vr = synthesize(sol.velocity[0].radial, 64)
        assert np.max(np.abs(vr.imag)) <= 1e-11 * np.max(np.abs(vr))


def test_inviscid_limit_order1_equals_order0():
    p0 = solve_model(_cfg(order=0, nu0=1e-14), SOURCE).pressure[1]
    p1 = solve_model(_cfg(order=1, nu0=1e-14), SOURCE).pressure[1]
    assert l2_norm(p1 - p0) <= 1e-6 * l2_norm(p0)


def test_linear_orders_scale_exactly():
    grid = RadialGrid(1.5, 2.0, 32)
    f = SOURCE.total(0.1, grid, 12)
    for N in (0, 1):
        cfg = _cfg(order=N)
        a = solve_acoustic_pressure(cfg, f, N)
        b = solve_acoustic_pressure(cfg, f * 3.7, N)
        assert l2_norm(b - a * 3.7) <= 1e-12 * l2_norm(b)


def test_order_nesting():
    rel = []
    for eps in (0.1, 0.05):
        p1 = solve_model(_cfg(eps, 1), SOURCE).pressure[1]
        p2 = solve_model(_cfg(eps, 2), SOURCE).pressure[1]
        rel.append(l2_norm(p2 - p1) / l2_norm(p2))
    # O(eps) relative: halving eps at least halves the gap (up to 10%)
    assert rel[1] <= 0.55 * rel[0]


def test_static_pressure_examples():
    grid = RadialGrid(1.5, 2.0, 16)
    M = 4
    p1 = FourierField.from_function(grid, M, lambda r, th: r**2 * np.cos(th))
    assert l2_norm(static_pressure_order2(gradient(p1), p1, 15.0)) < 1e-20
    ex = VectorFourierField.from_cartesian(grid, M, lambda x, y: (np.ones_like(x), np.zeros_like(x)))
    p0 = static_pressure_order2(ex, FourierField.zeros(grid, M), 15.0)
    assert np.allclose(synthesize(p0, 16), -1 / 900, atol=1e-14)


def test_zero_velocity_gives_zero_static_pressure():
    # w1 = 0 everywhere means f = grad p1
    grid = RadialGrid(1.5, 2.0, 16)
    p1 = FourierField.from_function(grid, 3, lambda r, th: np.sin(r) * np.sin(2 * th))
    assert l2_norm(static_pressure_order2(gradient(p1), p1, 15.0)) == 0


def test_static_pressure_matches_velocity_path():
    cfg = _cfg(1e-3, 2)
    grid = cfg.grid()
    f = SOURCE.total(cfg.epsilon, grid, cfg.m_max)
    p1 = solve_acoustic_pressure(cfg, f, 2)
    w1 = acoustic_velocity_from_pressure(cfg, f, p1, 2)
    a = static_pressure_order2(f, p1, cfg.omega)
    b = hermitian_dot(w1, w1).real_part() * (-0.25)
    assert l2_norm(a - b) <= 1e-5 * l2_norm(a)


def test_p2_forms_agree_for_curl_free_source():
    # the reduced form relies on curl(f - grad p1) = 0 and div(f - grad p1) = (w/c)^2 p1,
    # exact for the order-0 p1 and true up to O(nu) otherwise
    src = SourceSpec(f0=SOURCE.f0)
    gaps = []
    for eps, N in ((0.1, 0), (0.1, 2), (0.01, 2)):
        cfg = _cfg(eps, N)
        f = src.total(eps, cfg.grid(), cfg.m_max)
        p1 = solve_acoustic_pressure(cfg, f, N)
        red, _ = second_harmonic_pressure(cfg, f, p1, "reduced", viscous=False)
        raw, _ = second_harmonic_pressure(cfg, f, p1, "raw", viscous=False)
        gaps.append(l2_norm(red - raw) / l2_norm(red))
    assert gaps[0] < 1e-10
    assert gaps[2] < gaps[1] * 1e-2


def test_second_harmonic_wall_velocity_vanishes():
    cfg = _cfg(0.1, 2)
    grid = cfg.grid()
    f = SOURCE.total(cfg.epsilon, grid, cfg.m_max)
    p1 = solve_acoustic_pressure(cfg, f, 2)
    _, w2 = second_harmonic_pressure(cfg, f, p1)
    scale = l2_norm_vector(w2)
    for b in cfg.domain.boundaries():
        assert np.max(np.abs(w2.normal_trace(b))) <= 1e-8 * scale


def test_velocity_order0_matches_pressure_order0():
    cfg = _cfg(0.1, 0)
    v = solve_model(cfg, SOURCE, "velocity")
    p = solve_model(cfg, SOURCE, "pressure")
    assert l2_norm_vector(v.velocity[1] - p.velocity[1]) <= 1e-9 * l2_norm_vector(p.velocity[1])
    assert l2_norm(v.pressure[1] - p.pressure[1]) <= 1e-9 * l2_norm(p.pressure[1])


def test_velocity_static_pressure_is_algebraic():
    cfg = _cfg(0.1, 2, static_mean="raw")
    sol = solve_model(cfg, SOURCE, "velocity")
    f = SOURCE.total(cfg.epsilon, sol.grid, cfg.m_max)
    v10 = solve_acoustic_velocity(cfg, f, 0)
    q0 = hermitian_dot(v10, v10).real_part() * (-0.25)
    assert l2_norm(sol.pressure[0] - q0) <= 1e-14 * l2_norm(q0)


def _const_solution():
    grid = RadialGrid(1.5, 2.0, 8)
    one = FourierField.from_mode(grid, 2, 0, 1.0)
    return HarmonicSolution(1, "pressure_form", 15.0, grid, {1: one}, {})


def test_reconstruct_time_examples():
    sol = _const_solution()
    assert np.allclose(reconstruct_time(sol, 0.0)["pressure"], 1.0)
    assert np.allclose(reconstruct_time(sol, np.pi / 30)["pressure"], 0.0, atol=1e-15)
    full = solve_model(_cfg(0.1, 2), SOURCE)
    t = 0.123
    a = reconstruct_time(full, t)
    b = reconstruct_time(full, t + 2 * np.pi / 15.0)
    for key in a:
        assert np.allclose(a[key], b[key], rtol=0, atol=1e-12 * np.max(np.abs(a[key])))
        assert a[key].dtype.kind == "f"


def test_streaming_on_request():
    sol = solve_model(_cfg(0.1, 1, streaming=True), SOURCE)
    assert 0 in sol.velocity
    w0 = sol.velocity[0]
    for b in _cfg().domain.boundaries():
        assert np.max(np.abs(w0.normal_trace(b))) < 1e-12
