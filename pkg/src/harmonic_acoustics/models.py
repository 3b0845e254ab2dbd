"""Effective multiharmonic models of order 0, 1 and 2.

The time-periodic solution is written as

    p(t, x) = Re sum_k p_k(x) exp(-i k w t),

and for an order-N model only k <= ceil((N+1)/2) carries content.  The
pressure form solves Helmholtz problems for p_1 with impedance walls and
derives p_0, p_2 and the velocities from it; the velocity form solves
grad-div problems for v_1 and v_2 and a Stokes problem for the streaming
velocity v_0, and derives the pressures from those.

Quadratic expressions like (f - grad p1)^2 of complex amplitudes are the
unconjugated products that generate the 2w harmonic; |.|^2 denotes the
Hermitian square that generates the mean flow.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field as dc_field, asdict
from typing import Callable, Optional, Union

import numpy as np

from .errors import RegularityWarning
from .geometry import AnnulusDomain, tangential_derivative
from .scalar_solvers import BoundarySpec, HelmholtzProblem, solve_helmholtz
from .spectral import (FourierField, RadialGrid, VectorFourierField, advect,
                       chebyshev_coefficients, curl2d, curl_curl, divergence, dot,
                       gradient, hermitian_dot, integral, jacobian_frobenius,
                       l2_norm, l2_norm_vector, laplacian, mean_value, product,
                       radial_derivative, synthesize)
from .vector_solvers import (GradDivProblem, NormalTraceSpec, PicardConfig,
                             StokesProblem, solve_grad_div, solve_stokes)

P2_FORMS = ("reduced", "raw")
P2_BCS = ("consistent", "neumann")
STATIC_MEANS = ("zero", "raw")
P1_BCS = ("flux", "printed")


def active_harmonics(order: int) -> int:
    return math.ceil((order + 1) / 2)


@dataclass(frozen=True)
class ModelConfig:
    """Parameters of one effective-model solve.

    ``p1_bc`` selects how the order-2 wall condition of p_1 is closed:
    "flux" multiplies grad p . n by alpha = 1 - i w nu / c^2 and keeps the
    data undivided (the form implied by the velocity model), "printed"
    uses the unit flux coefficient with the (1 + i w nu / c^2) f.n data.
    Both agree to O(eps^3) relative.
    ``p2_form`` selects the reduced right-hand side with first derivatives
    of f - grad p1 ("reduced") or the literal Laplacian form ("raw").
    ``p2_bc`` selects the wall condition of the 2w pressure: "consistent"
    imposes zero normal velocity of w_2, "neumann" the homogeneous
    Neumann condition.  ``p2_viscous`` keeps the bulk viscous term of the
    2w balance (operator coefficient 1 - 2 i w nu / c^2 with matching data);
    it is formally O(eps^2) relative but large when 2w/c sits near a
    Neumann eigenvalue and w nu is not small.  ``static_mean`` fixes the undetermined constant of
    the mean pressure: "zero" enforces zero spatial mean (the mass
    conserved by the compressible equations), "raw" keeps the pointwise
    formula.
    """

    epsilon: float
    nu0: float = 1.0
    omega: float = 15.0
    c: float = 1.0
    order: int = 2
    m_max: int = 16
    n_r: int = 32
    harmonic_cap: Optional[int] = None
    r_inner: float = 1.5
    r_outer: float = 2.0
    stretch: float = 0.0
    p1_bc: str = "flux"
    p2_form: str = "reduced"
    p2_bc: str = "consistent"
    p2_viscous: bool = True
    static_mean: str = "zero"
    streaming: bool = False
    picard: bool = False
    picard_tol: float = 1e-10
    picard_max_iter: int = 25

    def __post_init__(self):
        for name in ("epsilon", "nu0", "omega", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        cap = self.harmonic_cap
        if cap is not None and cap < active_harmonics(self.order):
            raise ValueError("harmonic_cap below the active harmonics of this order")
        if self.p1_bc not in P1_BCS or self.p2_form not in P2_FORMS or self.p2_bc not in P2_BCS \
                or self.static_mean not in STATIC_MEANS:
            raise ValueError("unknown model option")

    @property
    def nu(self) -> float:
        return self.epsilon**2 * self.nu0

    @property
    def domain(self) -> AnnulusDomain:
        return AnnulusDomain(self.r_inner, self.r_outer)

    def grid(self) -> RadialGrid:
        return RadialGrid(self.r_inner, self.r_outer, self.n_r, self.stretch)

    def with_(self, **kw) -> "ModelConfig":
        d = asdict(self)
        d.update(kw)
        return ModelConfig(**d)


FieldOrFactory = Union[VectorFourierField, Callable[[RadialGrid, int], VectorFourierField], None]


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Graded source f = eps^2 (f0 + eps f1 + eps^2 f2) driven by cos(w t).

    Each part is a VectorFourierField or a factory (grid, m_max) -> field.
    """

    f0: FieldOrFactory = None
    f1: FieldOrFactory = None
    f2: FieldOrFactory = None
    f0_curl_free: bool = False

    @staticmethod
    def _make(part, grid, m_max):
        if part is None:
            return VectorFourierField.zeros(grid, m_max)
        f = part(grid, m_max) if callable(part) else part
        if not f.grid.same_as(grid):
            raise ValueError("source part lives on a different grid")
        return f.resize(m_max)

    def parts(self, grid, m_max):
        return tuple(self._make(p, grid, m_max) for p in (self.f0, self.f1, self.f2))

    def total(self, epsilon, grid, m_max) -> VectorFourierField:
        f0, f1, f2 = self.parts(grid, m_max)
        f = (f0 + f1 * epsilon + f2 * epsilon**2) * epsilon**2
        return f

    def check_curl_free(self, grid, m_max, tol=1e-9) -> bool:
        f0 = self._make(self.f0, grid, m_max)
        scale = l2_norm_vector(f0)
        return scale == 0 or l2_norm(curl2d(f0)) <= tol * scale

    def boundary_traces(self, epsilon, grid, m_max, domain: AnnulusDomain):
        """f.n and f.n_perp on each wall as angular modes."""
        f = self.total(epsilon, grid, m_max)
        return {b.which: (f.normal_trace(b), f.perp_trace(b)) for b in domain.boundaries()}


@dataclass
class HarmonicSolution:
    order: int
    formulation: str
    omega: float
    grid: RadialGrid
    pressure: dict
    velocity: dict
    info: dict = dc_field(default_factory=dict)

    @property
    def m_max(self):
        fields = list(self.pressure.values()) + list(self.velocity.values())
        return max(f.m_max for f in fields)

    def norms(self) -> dict:
        return {"pressure": {int(k): l2_norm(p) for k, p in sorted(self.pressure.items())},
                "velocity": {int(k): l2_norm_vector(v) for k, v in sorted(self.velocity.items())}}


def _zero_mean(f: FourierField) -> FourierField:
    return f - mean_value(f)


def _real(f):
    return f.real_part()


def static_pressure_order2(f: VectorFourierField, p1: FourierField, omega: float) -> FourierField:
    """-|f - grad p1|^2 / (4 w^2), a real nonpositive field."""
    g = f - gradient(p1)
    return _real(hermitian_dot(g, g)) * (-1.0 / (4 * omega**2))


def _tail_fraction(v: VectorFourierField) -> float:
    a = np.concatenate([chebyshev_coefficients(v.radial.values),
                        chebyshev_coefficients(v.angular.values)], axis=0)
    n = a.shape[1]
    k = max(2, n // 10)
    total = np.sum(np.abs(a) ** 2)
    return float(np.sum(np.abs(a[:, -k:]) ** 2) / total) if total > 0 else 0.0


def _walls(config):
    dom = config.domain
    return dom.inner, dom.outer


def pressure_boundary_data(config, f: VectorFourierField, order: int, wall):
    """Right-hand side g of the order-N impedance condition for p_1."""
    w, c, nu = config.omega, config.c, config.nu
    fn, fp = f.normal_trace(wall), f.perp_trace(wall)
    if order == 0:
        return fn
    a = (1 + 1j) * np.sqrt(nu / (2 * w))
    dfp = tangential_derivative(fp, wall, 1)
    if order == 1:
        return fn - a * dfp
    ccn = curl_curl(f).normal_trace(wall)
    kappa = wall.curvature
    fn_factor = 1.0 if config.p1_bc == "flux" else 1 + 1j * w * nu / c**2
    return (fn_factor * fn - a * dfp
            - 1j * nu / (2 * w) * kappa * dfp - 1j * nu / w * ccn)


def solve_acoustic_pressure(config, f: VectorFourierField, order: int) -> FourierField:
    """p_1 of the order-N pressure model."""
    w, c, nu = config.omega, config.c, config.nu
    kind = ("neumann", "wentzell", "generalized_wentzell")[order]
    alpha = 1 - 1j * w * nu / c**2 if order == 2 else 1.0
    flux = alpha if (order == 2 and config.p1_bc == "flux") else 1.0
    bcs = [BoundarySpec(b, kind, nu, w, pressure_boundary_data(config, f, order, b), flux)
           for b in _walls(config)]
    return solve_helmholtz(HelmholtzProblem(alpha, w**2 / c**2, divergence(f), *bcs))


def acoustic_velocity_from_pressure(config, f, p1, order):
    w, c, nu = config.omega, config.c, config.nu
    gp = gradient(p1)
    w1 = (f - gp) * (1j / w)
    if order == 2:
        w1 = w1 - gp * (nu / c**2)
    return w1


def second_harmonic_pressure(config, f, p1, form=None, bc=None, viscous=None):
    """p_2 and w_2 from p_1 (order-2 pressure model).

    With ``viscous`` the 2w balance is closed with the order-2 velocity w_1,
    its full advection term (f may carry a rotational part) and the bulk
    viscous term; otherwise the curl-free closure in f - grad p1 is used.
    """
    w, c, nu = config.omega, config.c, config.nu
    form = form or config.p2_form
    bc = bc or config.p2_bc
    viscous = config.p2_viscous if viscous is None else viscous
    M = f.m_max
    gp = gradient(p1)
    g = f - gp
    tail = _tail_fraction(gp)
    if tail > 1e-6:
        warnings.warn(f"spectral tail of grad p1 holds {tail:.1e} of its energy",
                      RegularityWarning, stacklevel=3)
    if viscous:
        alpha = 1 - 2j * w * nu / c**2
        v1 = acoustic_velocity_from_pressure(config, f, p1, 2)
        T = dot(v1, gp, M) + product(p1, divergence(v1), M)  # div(p1 v1)
        # 2w momentum: -2iw v2 + A + grad p2 - nu lap v2 = 0
        A = advect(v1, v1, M) * 0.5 + gradient(T) * (nu / (2 * c**2))
        rhs = divergence(A) * -1.0 - T * (1j * w / c**2)
    else:
        alpha = 1.0
        gg = dot(g, g, M)
        A = gradient(gg) * (-1 / (4 * w**2))
        if form == "reduced":
            rhs = (jacobian_frobenius(g, M) * (1 / (2 * w**2))
                   + (dot(g, gp, M) * 1.5 + product(p1, p1, M) * (w**2 / c**2)) * (1 / c**2))
        else:
            rhs = laplacian(gg) * (1 / (4 * w**2)) + (
                dot(g, gp, M) + product(p1, p1, M) * (w**2 / c**2)) * (1 / c**2)
    bcs = []
    for b in _walls(config):
        data = None
        if bc == "consistent":
            # zero normal velocity: alpha dn p2 = -A . n
            data = A.normal_trace(b) * (-1 / alpha)
        bcs.append(BoundarySpec(b, "neumann", 0.0, w, data))
    p2 = solve_helmholtz(HelmholtzProblem(alpha, 4 * w**2 / c**2, rhs, *bcs))
    w2 = (gradient(p2) * alpha + A) * (-1j / (2 * w))
    return p2, w2


def streaming_forcing(v1: VectorFourierField, M=None) -> VectorFourierField:
    """-1/4 ((v1.grad) conj v1 + (conj v1 . grad) v1), a real field."""
    vb = v1.conj()
    F = (advect(v1, vb, M) + advect(vb, v1, M)) * (-0.25)
    return F.real_part()


def streaming_divergence(v1, f, c, M=None) -> FourierField:
    """-1/(4c^2) (v1 . conj f + conj v1 . f), a real field."""
    return _real((hermitian_dot(v1, f, M) + hermitian_dot(f, v1, M)) * (-0.25 / c**2))


def solve_streaming(config, v1_order1, v1=None, f=None, picard=None):
    """Mean flow: linear Stokes for order 1, compressible variant for order 2.

    Returns (velocity, multiplier, info).  For order 2 the advection term
    uses the order-1 streaming velocity unless Picard iteration is enabled.
    The spatial mean of the divergence data is removed (no-slip walls admit
    only data with zero integral) and reported in ``info``.
    """
    nu, c = config.nu, config.c
    M = v1_order1.m_max
    res1 = solve_stokes(StokesProblem(nu, streaming_forcing(v1_order1, M)))
    info = {}
    if v1 is None:
        return res1.velocity.real_part(), res1.pressure.real_part(), info
    g = streaming_divergence(v1, f, c, M)
    info["divergence_rhs_integral"] = abs(integral(g))
    info["divergence_rhs_l2"] = l2_norm(g)
    g = _zero_mean(g)
    pic = picard or PicardConfig(config.picard, config.picard_tol, config.picard_max_iter)
    res = solve_stokes(StokesProblem(nu, streaming_forcing(v1, M), g, res1.velocity), pic)
    info["picard_iterations"] = res.iterations
    return res.velocity.real_part(), res.pressure.real_part(), info


def solve_pressure_form(config: ModelConfig, source: SourceSpec,
                        grid: RadialGrid | None = None) -> HarmonicSolution:
    t0 = time.perf_counter()
    grid = grid or config.grid()
    M, N, w = config.m_max, config.order, config.omega
    f = source.total(config.epsilon, grid, M)
    p1 = solve_acoustic_pressure(config, f, N)
    w1 = acoustic_velocity_from_pressure(config, f, p1, N)
    pressure, velocity, info = {1: p1}, {1: w1}, {}
    if N == 2:
        p0 = static_pressure_order2(f, p1, w)
        info["static_pressure_mean"] = mean_value(p0).real
        if config.static_mean == "zero":
            p0 = _zero_mean(p0)
        p2, w2 = second_harmonic_pressure(config, f, p1)
        pressure.update({0: p0, 2: p2})
        velocity[2] = w2
    if config.streaming and N >= 1:
        w1_first = w1 if N == 1 else acoustic_velocity_from_pressure(
            config, f, solve_acoustic_pressure(config, f, 1), 1)
        if N == 1:
            w0, _, sinfo = solve_streaming(config, w1_first)
        else:
            w0, _, sinfo = solve_streaming(config, w1_first, w1, f)
        velocity[0] = w0
        info.update(sinfo)
    info["seconds"] = time.perf_counter() - t0
    return HarmonicSolution(N, "pressure_form", w, grid, pressure, velocity, info)


def velocity_boundary_data(config, f, order, wall):
    w, nu = config.omega, config.nu
    if order == 0:
        return np.zeros(2 * f.m_max + 1, dtype=complex)
    fp = f.perp_trace(wall)
    dfp = tangential_derivative(fp, wall, 1)
    data = (1j - 1) / w * np.sqrt(nu / (2 * w)) * dfp
    if order == 2:
        data = data - nu / (2 * w**2) * wall.curvature * dfp
    return data


def solve_acoustic_velocity(config, f, order) -> VectorFourierField:
    w, c, nu = config.omega, config.c, config.nu
    kind = ("zero_normal", "wentzell_on_div", "generalized_wentzell_on_div")[order]
    gamma = 1 - 1j * w * nu / c**2 if order == 2 else 1.0
    bcs = [NormalTraceSpec(b, kind, nu, w, c, velocity_boundary_data(config, f, order, b))
           for b in _walls(config)]
    return solve_grad_div(GradDivProblem(gamma, w**2 / c**2, f * (1j * w / c**2), *bcs))


def _velocity_flux(config, v1, M):
    """div(q1 v1) with q1 = -(i c^2 / w) div v1."""
    w, c = config.omega, config.c
    q1 = divergence(v1) * (-1j * c**2 / w)
    return dot(v1, gradient(q1), M) + product(q1, divergence(v1), M)


def second_harmonic_velocity(config, f, v1, viscous=None):
    """v_2 from the grad-div problem at 2w with zero normal velocity."""
    w, c, nu = config.omega, config.c, config.nu
    viscous = config.p2_viscous if viscous is None else viscous
    M = f.m_max
    bcs = [NormalTraceSpec(b, "zero_normal") for b in _walls(config)]
    if viscous:
        T = _velocity_flux(config, v1, M)
        rhs = advect(v1, v1, M) * (-1j * w / c**2) + gradient(T) * (-1 / (2 * c**2))
        gamma = 1 - 2j * w * nu / c**2
        return solve_grad_div(GradDivProblem(gamma, 4 * w**2 / c**2, rhs, *bcs))
    vv = dot(v1, v1, M)
    dv = divergence(v1)
    s = vv * (-1j * w / c**2) - dot(v1, f, M) * (1 / (2 * c**2)) + product(dv, dv, M) * (1j / (2 * w))
    return solve_grad_div(GradDivProblem(1.0, 4 * w**2 / c**2, gradient(s), *bcs))


def second_harmonic_pressure_from_velocity(config, f, v1, v2, viscous=None):
    w, c = config.omega, config.c
    viscous = config.p2_viscous if viscous is None else viscous
    M = f.m_max
    if viscous:
        return (divergence(v2) * (-1j * c**2 / (2 * w))
                - _velocity_flux(config, v1, M) * (1j / (4 * w)))
    dv = divergence(v1)
    return (divergence(v2) * (-1j * c**2 / (2 * w)) - dot(v1, f, M) * (1j / (4 * w))
            - (product(dv, dv, M) - dot(v1, v1, M) * (w**2 / c**2)) * (c**2 / (4 * w**2)))


def solve_velocity_form(config: ModelConfig, source: SourceSpec,
                        grid: RadialGrid | None = None) -> HarmonicSolution:
    t0 = time.perf_counter()
    grid = grid or config.grid()
    M, N, w, c = config.m_max, config.order, config.omega, config.c
    f = source.total(config.epsilon, grid, M)
    v1 = solve_acoustic_velocity(config, f, N)
    q1 = divergence(v1) * (-1j * c**2 / w)
    pressure, velocity, info = {1: q1}, {1: v1}, {}
    if N == 1:
        v0, mult, sinfo = solve_streaming(config, v1)
        velocity[0] = v0
        info["multiplier_l2"] = l2_norm(mult)
        info.update(sinfo)
    elif N == 2:
        v1_first = solve_acoustic_velocity(config, f, 1)
        v0, mult, sinfo = solve_streaming(config, v1_first, v1, f)
        velocity[0] = v0
        info["multiplier_l2"] = l2_norm(mult)
        info.update(sinfo)
        v1_zero = solve_acoustic_velocity(config, f, 0)
        q0 = _real(hermitian_dot(v1_zero, v1_zero, M)) * (-0.25)
        info["static_pressure_mean"] = mean_value(q0).real
        if config.static_mean == "zero":
            q0 = _zero_mean(q0)
        v2 = second_harmonic_velocity(config, f, v1)
        q2 = second_harmonic_pressure_from_velocity(config, f, v1, v2)
        pressure.update({0: q0, 2: q2})
        velocity[2] = v2
    info["seconds"] = time.perf_counter() - t0
    return HarmonicSolution(N, "velocity_form", w, grid, pressure, velocity, info)


def solve_model(config: ModelConfig, source: SourceSpec, form: str = "pressure",
                grid: RadialGrid | None = None) -> HarmonicSolution:
    if form in ("pressure", "pressure_form"):
        return solve_pressure_form(config, source, grid)
    if form in ("velocity", "velocity_form"):
        return solve_velocity_form(config, source, grid)
    raise ValueError(f"unknown formulation {form!r}")


def reconstruct_time(solution: HarmonicSolution, t: float, theta_samples: int | None = None):
    """Real physical fields Re sum_k X_k exp(-i k w t) on the (theta, r) grid."""
    n = theta_samples or max(4 * solution.m_max + 4, 32)
    w = solution.omega
    shape = (n, solution.grid.n_r)
    p = np.zeros(shape)
    vr = np.zeros(shape)
    vt = np.zeros(shape)
    for k, pk in solution.pressure.items():
        p += np.real(synthesize(pk, n) * np.exp(-1j * k * w * t))
    for k, vk in solution.velocity.items():
        ph = np.exp(-1j * k * w * t)
        vr += np.real(synthesize(vk.radial, n) * ph)
        vt += np.real(synthesize(vk.angular, n) * ph)
    return {"pressure": p, "velocity_r": vr, "velocity_theta": vt}


def pressure_modes_at(solution: HarmonicSolution, t: float, m_max: int | None = None) -> FourierField:
    """Angular coefficients of the real pressure at time t."""
    M = m_max if m_max is not None else solution.m_max
    grid = solution.grid
    out = FourierField.zeros(grid, M)
    w = solution.omega
    for k, pk in solution.pressure.items():
        a = pk.resize(M) * np.exp(-1j * k * w * t)
        out = out + (a + a.conj()) * 0.5
    return out
