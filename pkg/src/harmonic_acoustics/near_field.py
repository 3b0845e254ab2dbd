"""Boundary-layer correctors and the closed-form near-field profiles.

Near a wall the far-field velocity is corrected by

    V_BL = chi(s) sum_l H^l(V) exp(-lambda s),   lambda = (1 - i) sqrt(w / 2 nu),

written here in the wall frame (e_tau, e_s) with e_tau = -n_perp, e_s = -n
and V = v . e_tau the tangential trace of the far field.  With
a = 1/lambda = (1 + i) sqrt(nu / 2w) the terms are

    l = 0:  -V e_tau
    l = 1:  -(kappa s / 2) V e_tau - a d_tau V e_s
    l = 2:  [(3 kappa^2 / 8) s (a - s) V - (a s / 2) d_tau^2 V] e_tau
            - a [(kappa / 2)(3 s + a) d_tau V + (kappa' / 2)(s + a) V] e_s

and at 2w the single term -V_2 e_tau with decay rate sqrt(2) lambda.  These
are the scaled profiles below rewritten in physical distance s = eps S;
the "printed" variant keeps the alternative sign layout of the compact
operator formulas for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import UnsupportedOrder
from .geometry import AnnulusDomain, tangential_derivative
from .spectral import FourierField, RadialGrid, VectorFourierField, analyze

VARIANTS = ("profiles", "printed")


@dataclass(frozen=True)
class CutoffSpec:
    plateau_end: float
    support_end: float

    @classmethod
    def default(cls, domain: AnnulusDomain):
        return cls(0.1 * domain.width, 0.4 * domain.width)

    def check(self, domain: AnnulusDomain):
        if not 0 < self.plateau_end < self.support_end <= 0.5 * domain.width:
            raise ValueError("need 0 < plateau_end < support_end <= (R2 - R1)/2")

    def __call__(self, s):
        """Smooth cutoff: 1 on [0, plateau_end], 0 beyond support_end."""
        s = np.asarray(s, dtype=float)
        t = np.clip((s - self.plateau_end) / (self.support_end - self.plateau_end), 0.0, 1.0)

        def psi(x):
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = np.exp(-1.0 / x[pos])
            return out
        a, b = psi(1.0 - t), psi(t)
        return a / (a + b)


@dataclass(frozen=True)
class CorrectorInput:
    """Tangential far-field traces V_k = v_k . e_tau per wall.

    ``tangential_traces`` maps harmonic k to {"inner": modes, "outer": modes},
    each an array of angular coefficients m = -M..M.
    """

    tangential_traces: dict
    epsilon: float
    nu: float
    omega: float
    order: int
    cutoff: CutoffSpec
    domain: AnnulusDomain = AnnulusDomain()
    variant: str = "profiles"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown corrector variant {self.variant!r}")
        kmax = -(-(self.order + 1) // 2)
        for k in self.tangential_traces:
            if k > kmax:
                raise ValueError(f"trace for harmonic {k} exceeds order {self.order}")
        self.cutoff.check(self.domain)

    @classmethod
    def from_solution(cls, solution, epsilon, nu, cutoff=None, domain=None, variant="profiles"):
        domain = domain or AnnulusDomain(solution.grid.r_inner, solution.grid.r_outer)
        traces = {}
        for k, v in solution.velocity.items():
            if k == 0:
                continue
            traces[k] = {b.which: v.tangential_trace(b) for b in domain.boundaries()}
        return cls(traces, epsilon, nu, solution.omega, solution.order,
                   cutoff or CutoffSpec.default(domain), domain, variant)


def decay_rate(nu, omega, k=1):
    """Complex rate of exp(-rate * s) for the k-th harmonic layer."""
    return np.sqrt(k) * (1 - 1j) * np.sqrt(omega / (2 * nu))


def _wall_terms(V, dV, ddV, s, kappa, a, order, variant):
    """Tangential and normal (along e_s) amplitudes before the exponential."""
    tan = -V + 0 * s
    nor = np.zeros_like(tan)
    if order >= 1:
        if variant == "profiles":
            tan = tan - 0.5 * kappa * s * V
            nor = nor - a * dV
        else:
            tan = tan - 0.5 * kappa * s * V
            nor = nor + a * dV
    if order >= 2:
        if variant == "profiles":
            tan = tan + 3 * kappa**2 / 8 * s * (a - s) * V - 0.5 * a * s * ddV
            nor = nor - a * (0.5 * kappa * (3 * s + a) * dV)
        else:
            tan = tan - 3 / 8 * kappa**2 * s * (2 * a - s) * V - a * s * ddV
            nor = nor + a * kappa * dV * s
    return tan, nor


def boundary_layer_velocity(inp: CorrectorInput, grid: RadialGrid, m_max: int,
                            theta_samples: int | None = None) -> dict:
    """Corrector fields per harmonic k, analyzed back to angular modes.

    The "printed" variant reads the compact formulas with v_tau = v . n_perp
    = -V, n_perp = -e_tau and n = -e_s, and drops the d_tau kappa terms
    (zero on circles).
    """
    n = theta_samples or max(4 * m_max + 4, 32)
    th = 2 * np.pi * np.arange(n) / n
    r = grid.nodes
    s_all, is_outer = inp.domain.distance_to_wall(r)
    chi = inp.cutoff(s_all)
    out = {}
    for k, traces in inp.tangential_traces.items():
        lam = decay_rate(inp.nu, inp.omega, k)
        a = 1.0 / decay_rate(inp.nu, inp.omega, 1)
        order = inp.order if k == 1 else 0
        vr = np.zeros((n, grid.n_r), dtype=complex)
        vt = np.zeros_like(vr)
        for wall in inp.domain.boundaries():
            modes = np.asarray(traces[wall.which], dtype=complex)
            M = (modes.shape[0] - 1) // 2
            mm = np.arange(-M, M + 1)
            basis = np.exp(1j * np.outer(th, mm))
            V = basis @ modes
            dV = basis @ tangential_derivative(modes, wall, 1)
            ddV = basis @ tangential_derivative(modes, wall, 2)
            sel = is_outer if wall.which == "outer" else ~is_outer
            s = s_all[sel][None, :]
            tan, nor = _wall_terms(V[:, None], dV[:, None], ddV[:, None], s,
                                   wall.curvature, a, order, inp.variant)
            damp = chi[sel][None, :] * np.exp(-lam * s)
            # e_tau = orientation * e_theta, e_s = -normal_sign * e_r
            vt[:, sel] = wall.orientation_sign * tan * damp
            vr[:, sel] = -wall.normal_sign * nor * damp
        out[k] = VectorFourierField(analyze(grid, vr, m_max), analyze(grid, vt, m_max))
    return out


# --- scaled profiles ----------------------------------------------------

PROFILE_TABLE = {(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)}


def _lambda0(nu0, omega):
    return (1 - 1j) * np.sqrt(omega / (2 * nu0))


def analytic_profiles(k: int, j: int, trace_data: dict, kappa: float, nu0: float,
                      omega: float, S):
    """Closed-form near-field terms (u_tau, u_s, q) at scaled distances S.

    ``trace_data`` holds the far-field tangential traces of the orders
    j = 0, 1, 2 under keys "v0", "v1", "v2", their tangential derivatives
    "dv0", "dv1", "ddv0", and optionally "kappa_prime".  For k = 2 the key
    "v0" is read as the trace of the 2w far field.
    """
    if (k, j) not in PROFILE_TABLE:
        raise UnsupportedOrder(f"no closed-form near field for k={k}, j={j}")
    S = np.asarray(S, dtype=float)
    zero = np.zeros(S.shape, dtype=complex)
    td = {key: complex(val) for key, val in trace_data.items()}
    get = lambda key: td.get(key, 0.0)
    lam = _lambda0(nu0, omega)
    if k == 0 or (k == 2 and j < 2):
        return zero, zero.copy(), zero.copy()
    if k == 2:
        E2 = np.exp(-np.sqrt(2) * lam * S)
        return -get("v0") * E2, zero, zero.copy()
    E = np.exp(-lam * S)
    v0, v1, v2 = get("v0"), get("v1"), get("v2")
    dv0, dv1, ddv0 = get("dv0"), get("dv1"), get("ddv0")
    kp = get("kappa_prime")
    if j == 0:
        return -v0 * E, zero, zero.copy()
    if j == 1:
        return -(v1 + 0.5 * kappa * S * v0) * E, -dv0 / lam * E, zero
    ut = -(v2 + 0.5 * kappa * S * v1 - 3 * kappa**2 * S / 8 * (1 / lam - S) * v0
           + S / (2 * lam) * ddv0) * E
    us = -(dv1 + 0.5 * kappa * (3 * S + 1 / lam) * dv0 + 0.5 * kp * (S + 1 / lam) * v0) / lam * E
    return ut, us, zero


def _fd(u, h, order):
    """Fourth-order central differences at interior points (2 on each side dropped)."""
    if order == 1:
        return (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
    return (-u[:-4] + 16 * u[1:-3] - 30 * u[2:-2] + 16 * u[3:-1] - u[4:]) / (12 * h * h)


def verify_near_field_odes(k: int, j: int, trace_data: dict, kappa: float, nu0: float,
                           omega: float, S_max: float = 10.0, h: float | None = None) -> dict:
    """Finite-difference residuals of the near-field equations on [0, S_max].

    Momentum residuals are scaled by k w max|u_tau| and continuity
    residuals by max|d_S u_s| (or the right-hand side scale), so a value of
    1e-6 means six correct digits relative to the size of the terms.
    """
    lam = _lambda0(nu0, omega)
    h = h or min(1e-3, 0.01 / abs(lam))
    S = np.arange(-2, int(np.ceil(S_max / h)) + 3) * h
    Si = S[2:-2]
    ut, us, q = analytic_profiles(k, j, trace_data, kappa, nu0, omega, S)
    kw = max(k, 1) * omega
    td = {key: complex(val) for key, val in trace_data.items()}
    kp = td.get("kappa_prime", 0.0)
    report = {}

    def rel(res, scale):
        return float(np.abs(res).max() / scale) if scale > 0 else float(np.abs(res).max())

    lhs = 1j * kw * ut[2:-2] + nu0 * _fd(ut, h, 2)
    if k == 1 and j >= 1:
        u_prev = analytic_profiles(1, j - 1, trace_data, kappa, nu0, omega, S)[0]
        if j == 1:
            rhs = kappa * (3j * omega * Si * u_prev[2:-2] + 3 * nu0 * Si * _fd(u_prev, h, 2)
                           + nu0 * _fd(u_prev, h, 1))
        else:
            # d_tau^2 u0 and the curvature terms acting on u0 and u1
            E = np.exp(-lam * S)
            u0 = -td.get("v0", 0) * E
            u1 = analytic_profiles(1, 1, trace_data, kappa, nu0, omega, S)[0]
            dd_u0 = -td.get("ddv0", 0) * E
            rhs = (kappa * (3j * omega * Si * u1[2:-2] + 3 * nu0 * Si * _fd(u1, h, 2)
                            + nu0 * _fd(u1, h, 1))
                   - nu0 * dd_u0[2:-2]
                   - kappa**2 * (3j * omega * Si**2 * u0[2:-2] + 3 * nu0 * Si**2 * _fd(u0, h, 2)
                                 + nu0 * (2 * Si * _fd(u0, h, 1) - u0[2:-2])))
        lhs = lhs - rhs
    scale = kw * np.abs(ut).max()
    report["momentum"] = rel(lhs, scale) if scale > 0 else rel(lhs, 1.0)
    # continuity: d_S u_s = -d_tau u_tau^{j-1} + kappa (S d_S + 1) u_s^{j-1}
    dus = _fd(us, h, 1)
    if k == 1 and j >= 1:
        E = np.exp(-lam * S)
        if j == 1:
            dtau_prev = td.get("dv0", 0) * E  # equals -d_tau u0
            cont = dus - dtau_prev[2:-2]
        else:
            dtau_u1 = -(td.get("dv1", 0) + 0.5 * kappa * S * td.get("dv0", 0)
                        + 0.5 * kp * S * td.get("v0", 0)) * E
            us1 = analytic_profiles(1, 1, trace_data, kappa, nu0, omega, S)[1]
            cont = dus + dtau_u1[2:-2] - kappa * (Si * _fd(us1, h, 1) + us1[2:-2])
        cscale = max(np.abs(dus).max(), abs(lam) * np.abs(us).max())
    else:
        cont = dus
        cscale = 1.0
    report["continuity"] = rel(cont, cscale) if cscale > 0 else float(np.abs(cont).max())
    report["pressure"] = float(np.abs(_fd(q, h, 1)).max())
    report["max"] = max(report.values())
    return report
