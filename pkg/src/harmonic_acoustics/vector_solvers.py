"""Velocity-form problems: grad-div Helmholtz systems and streaming Stokes flows.

Grad-div systems  gamma grad(div v) + beta v = F  are collocated per angular
mode for (v_r, v_theta).  The radial momentum row at each wall is replaced
by the normal-trace condition

    v . n + Z div v = g,     Z = (c/w)^2 [(1+i) sqrt(nu/2w) + (i nu/2w) kappa] (m/R)^2

(the curvature part only for the generalized condition), which is the
mode-wise form of  v.n - (c/w)^2 [(1+i) sqrt(nu/2w) d_tau^2 + (i nu/2w) d_tau kappa d_tau] div v.

Stokes problems use the P_N - P_{N-2} staggering: velocities live on all
Gauss-Lobatto nodes, the pressure on the interior nodes only, momentum and
continuity are collocated at interior nodes and the velocity vanishes at
both walls.  This removes the spurious pressure modes of equal-order
collocation, leaving only the constant for m = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .errors import IncompatibleData, NoConvergence, ResonanceError, SingularSaddle
from .geometry import BoundaryCurve
from .scalar_solvers import COND_LIMIT, factor_cache
from .spectral import (FourierField, RadialGrid, VectorFourierField, advect,
                       integral, l2_norm, l2_norm_vector)

TRACE_KINDS = ("zero_normal", "wentzell_on_div", "generalized_wentzell_on_div")


@dataclass(frozen=True, eq=False)
class NormalTraceSpec:
    boundary: BoundaryCurve
    kind: str = "zero_normal"
    visc: float = 0.0
    omega: float = 1.0
    c: float = 1.0
    data: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in TRACE_KINDS:
            raise ValueError(f"unknown normal-trace condition {self.kind!r}")
        if self.kind != "zero_normal" and (self.visc < 0 or self.omega <= 0):
            raise ValueError("impedance conditions need visc >= 0 and omega > 0")

    @property
    def curvature(self):
        return self.boundary.curvature

    def impedance(self, m):
        if self.kind == "zero_normal":
            return 0.0 + 0.0j
        q = (m / self.boundary.radius) ** 2
        z = (1 + 1j) * np.sqrt(self.visc / (2 * self.omega))
        if self.kind == "generalized_wentzell_on_div":
            z = z + 1j * self.visc / (2 * self.omega) * self.curvature
        return (self.c / self.omega) ** 2 * z * q

    def data_for(self, m_max):
        out = np.zeros(2 * m_max + 1, dtype=complex)
        if self.data is None:
            return out
        d = np.asarray(self.data, dtype=complex)
        M = (d.shape[0] - 1) // 2
        k = min(M, m_max)
        out[m_max - k:m_max + k + 1] = d[M - k:M + k + 1]
        return out

    def cache_key(self, m):
        return (self.boundary.which, self.boundary.radius, self.kind, float(self.visc),
                float(self.omega), float(self.c), int(m))


@dataclass(frozen=True, eq=False)
class GradDivProblem:
    gamma: complex
    beta: complex
    rhs: VectorFourierField
    bc_inner: NormalTraceSpec
    bc_outer: NormalTraceSpec

    def __post_init__(self):
        if self.gamma == 0:
            raise ValueError("gamma must be nonzero")


def divergence_matrix(grid: RadialGrid, m: int) -> np.ndarray:
    """n x 2n matrix mapping (v_r, v_theta) nodal values to div v."""
    r = grid.nodes
    return np.hstack([grid.d1 + np.diag(1 / r), np.diag(1j * m / r)])


def gradient_matrix(grid: RadialGrid, m: int) -> np.ndarray:
    """2n x n matrix mapping nodal values of a scalar to its gradient."""
    return np.vstack([grid.d1, np.diag(1j * m / grid.nodes)]).astype(complex)


def grad_div_matrix(grid, m, gamma, beta, bc_inner, bc_outer):
    n = grid.n_r
    Dv = divergence_matrix(grid, m)
    A = gamma * gradient_matrix(grid, m) @ Dv + beta * np.eye(2 * n)
    for bc in (bc_inner, bc_outer):
        j = bc.boundary.node_index % n
        row = bc.impedance(m) * Dv[j]
        row[j] += bc.boundary.normal_sign
        A[j] = row
    return A


def solve_grad_div(problem: GradDivProblem) -> VectorFourierField:
    F = problem.rhs
    grid, M = F.grid, F.m_max
    n = grid.n_r
    gi, go = problem.bc_inner.data_for(M), problem.bc_outer.data_for(M)
    vr = np.zeros((2 * M + 1, n), dtype=complex)
    vt = np.zeros_like(vr)
    bad = []
    for i, m in enumerate(F.radial.modes):
        m = int(m)
        key = ("graddiv", grid.key, complex(problem.gamma), complex(problem.beta),
               problem.bc_inner.cache_key(m), problem.bc_outer.cache_key(m))

        def build():
            A = grad_div_matrix(grid, m, problem.gamma, problem.beta,
                                problem.bc_inner, problem.bc_outer)
            cond = np.linalg.cond(A)
            return (scipy.linalg.lu_factor(A, check_finite=False) if cond <= COND_LIMIT else None), cond
        lu, _ = factor_cache.get(key, build)
        if lu is None:
            bad.append(m)
            continue
        b = np.concatenate([F.radial.values[i], F.angular.values[i]])
        b[problem.bc_inner.boundary.node_index % n] = gi[i]
        b[problem.bc_outer.boundary.node_index % n] = go[i]
        x = scipy.linalg.lu_solve(lu, b, check_finite=False)
        vr[i], vt[i] = x[:n], x[n:]
    if bad:
        raise ResonanceError(f"grad-div matrix is singular for modes {bad}", bad)
    return VectorFourierField(FourierField(grid, vr), FourierField(grid, vt))


# --- Stokes ---------------------------------------------------------------

@dataclass(frozen=True)
class PicardConfig:
    enabled: bool = False
    tol: float = 1e-10
    max_iter: int = 25


@dataclass(frozen=True, eq=False)
class StokesProblem:
    visc: float
    momentum_rhs: VectorFourierField
    divergence_rhs: Optional[FourierField] = None
    advecting_field: Optional[VectorFourierField] = None

    def __post_init__(self):
        if not self.visc > 0:
            raise ValueError("visc must be positive")


class StokesResult(NamedTuple):
    velocity: VectorFourierField
    pressure: FourierField
    iterations: int
    history: list


def interior_interpolation(grid: RadialGrid) -> np.ndarray:
    """n x (n-2) interpolation from interior Lobatto nodes to all nodes.

    The interior nodes are the second-kind Chebyshev points, whose
    barycentric weights are (-1)^j sin^2(j pi / N).
    """
    n = grid.n_r
    N = n - 1
    j = np.arange(1, N)
    w = (-1.0) ** j * np.sin(j * np.pi / N) ** 2
    xi = grid.x[1:-1]
    x = grid.x
    diff = x[:, None] - xi[None, :]
    P = np.zeros((n, n - 2))
    for row in range(n):
        d = diff[row]
        hit = np.nonzero(np.abs(d) < 1e-15)[0]
        if hit.size:
            P[row, hit[0]] = 1.0
        else:
            t = w / d
            P[row] = t / t.sum()
    return P


def stokes_matrix(grid: RadialGrid, m: int, visc: float) -> np.ndarray:
    n = grid.n_r
    r = grid.nodes
    P = interior_interpolation(grid)
    I = np.eye(n)
    lap = grid.d2 + grid.d1 / r[:, None] - np.diag(m**2 / r**2)
    Lrr = lap - np.diag(1 / r**2)
    Lrt = np.diag(-2j * m / r**2)
    inner = slice(1, n - 1)
    nq = n - 2
    A = np.zeros((3 * n - 2, 3 * n - 2), dtype=complex)
    # radial momentum at interior nodes
    A[0:nq, 0:n] = -visc * Lrr[inner]
    A[0:nq, n:2 * n] = -visc * Lrt[inner]
    A[0:nq, 2 * n:] = (grid.d1 @ P)[inner]
    # angular momentum
    A[nq:2 * nq, 0:n] = visc * Lrt[inner]
    A[nq:2 * nq, n:2 * n] = -visc * Lrr[inner]
    A[nq:2 * nq, 2 * n:] = (np.diag(1j * m / r) @ P)[inner]
    # no-slip rows
    A[2 * nq + 0, 0:n] = I[0]
    A[2 * nq + 1, 0:n] = I[-1]
    A[2 * nq + 2, n:2 * n] = I[0]
    A[2 * nq + 3, n:2 * n] = I[-1]
    # continuity at interior nodes
    A[2 * nq + 4:, 0:2 * n] = divergence_matrix(grid, m)[inner]
    return A


def _stokes_factor(grid, m, visc):
    key = ("stokes", grid.key, float(visc), int(m))

    def build():
        A = stokes_matrix(grid, m, visc)
        s = scipy.linalg.svdvals(A)
        if m == 0:
            # one-dimensional kernel: constant pressure
            if s[-2] / s[0] < 1.0 / COND_LIMIT:
                return ("singular", None)
            return ("lstsq", A)
        if s[-1] / s[0] < 1.0 / COND_LIMIT:
            return ("singular", None)
        return ("lu", scipy.linalg.lu_factor(A, check_finite=False))
    return factor_cache.get(key, build)


def _linear_stokes(grid, visc, F: VectorFourierField, g: FourierField):
    n = grid.n_r
    M = F.m_max
    nq = n - 2
    P = interior_interpolation(grid)
    vr = np.zeros((2 * M + 1, n), dtype=complex)
    vt = np.zeros_like(vr)
    q = np.zeros_like(vr)
    for i, m in enumerate(F.radial.modes):
        m = int(m)
        b = np.zeros(3 * n - 2, dtype=complex)
        b[0:nq] = F.radial.values[i, 1:-1]
        b[nq:2 * nq] = F.angular.values[i, 1:-1]
        b[2 * nq + 4:] = g.values[i, 1:-1]
        if not b.any():
            continue
        kind, fac = _stokes_factor(grid, m, visc)
        if kind == "singular":
            raise SingularSaddle(f"Stokes saddle matrix is singular for mode {m}")
        if kind == "lu":
            x = scipy.linalg.lu_solve(fac, b, check_finite=False)
        else:
            x = scipy.linalg.lstsq(fac, b, cond=1e-13)[0]
        vr[i], vt[i] = x[:n], x[n:2 * n]
        q[i] = P @ x[2 * n:]
        if m == 0:
            q[i] -= grid.integrate(q[i]) / grid.integrate(np.ones(n))
    return (VectorFourierField(FourierField(grid, vr), FourierField(grid, vt)),
            FourierField(grid, q))


def solve_stokes(problem: StokesProblem, picard: PicardConfig = PicardConfig()) -> StokesResult:
    """Solve -nu lap v + (a.grad) a + grad q = F, div v = g, v = 0 on walls.

    Without an advecting field (or with a zero one) the problem is linear
    and solved once.  With an advecting field a, the default performs the
    single linearized solve with (a.grad)a moved to the right-hand side;
    with ``picard.enabled`` the nonlinear problem with (v.grad)v is then
    iterated from that solution.
    """
    F = problem.momentum_rhs
    grid, M = F.grid, F.m_max
    g = problem.divergence_rhs
    if g is None:
        g = FourierField.zeros(grid, M)
    g = g.resize(M)
    scale = l2_norm(g)
    area = np.pi * (grid.r_outer**2 - grid.r_inner**2)
    if scale > 0 and abs(integral(g)) > 1e-10 * scale * np.sqrt(area):
        raise IncompatibleData(
            f"divergence data integrates to {integral(g):.3e}, incompatible with no-slip walls")
    a = problem.advecting_field
    if a is None or l2_norm_vector(a) == 0.0:
        v, q = _linear_stokes(grid, problem.visc, F, g)
        return StokesResult(v, q, 1, [])
    v, q = _linear_stokes(grid, problem.visc, F - advect(a, a, M), g)
    if not picard.enabled:
        return StokesResult(v, q, 1, [])
    history = []
    for it in range(2, picard.max_iter + 2):
        v_new, q = _linear_stokes(grid, problem.visc, F - advect(v, v, M), g)
        nv = l2_norm_vector(v_new)
        upd = l2_norm_vector(v_new - v) / (nv if nv > 0 else 1.0)
        history.append(upd)
        v = v_new
        if upd < picard.tol:
            return StokesResult(v, q, it, history)
        if len(history) > 3 and history[-1] > history[-4]:
            break
    raise NoConvergence("Picard iteration for the streaming problem did not converge", history)


def stokes_residual(problem: StokesProblem, result: StokesResult) -> dict:
    """Continuity residual and wall velocity of a Stokes solution."""
    from .spectral import divergence
    v = result.velocity
    g = problem.divergence_rhs.resize(v.m_max) if problem.divergence_rhs is not None \
        else FourierField.zeros(v.grid, v.m_max)
    d = (divergence(v) - g).values[:, 1:-1]
    wall = max(np.abs(v.radial.values[:, [0, -1]]).max(), np.abs(v.angular.values[:, [0, -1]]).max())
    return {"divergence": float(np.abs(d).max()), "wall": float(wall)}
