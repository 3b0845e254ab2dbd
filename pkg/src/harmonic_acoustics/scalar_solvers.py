"""Helmholtz problems alpha*lap(p) + beta*p = rhs with impedance walls.

Per angular mode the radial operator is collocated at the interior nodes
and the two wall rows are replaced by the boundary condition

    a grad p . n + W p = g,

where W collects the tangential terms and a is a flux coefficient
(normally 1).  On a circle d_tau^2 acts on mode m
as -(m/R)^2, so

    neumann:               W = 0
    wentzell:              W = -(1+i) sqrt(nu/2w) (m/R)^2
    generalized_wentzell:  W = -(1+i) sqrt(nu/2w) (m/R)^2 - (i nu/2w) kappa (m/R)^2
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ResonanceError
from .geometry import BoundaryCurve
from .spectral import FourierField, RadialGrid

COND_LIMIT = 1e12
BC_KINDS = ("neumann", "wentzell", "generalized_wentzell")


@dataclass(frozen=True, eq=False)
class BoundarySpec:
    boundary: BoundaryCurve
    kind: str = "neumann"
    visc: float = 0.0
    omega: float = 1.0
    data: Optional[np.ndarray] = None  # angular modes of g, length 2M+1
    flux_coefficient: complex = 1.0    # multiplies grad p . n in the row

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        if self.kind != "neumann" and (self.visc < 0 or self.omega <= 0):
            raise ValueError("impedance conditions need visc >= 0 and omega > 0")

    @property
    def curvature(self) -> float:
        return self.boundary.curvature

    def impedance(self, m):
        """Coefficient W of the wall value in the boundary row for mode m."""
        if self.kind == "neumann":
            return np.zeros_like(np.asarray(m, dtype=float), dtype=complex)
        q = (np.asarray(m, dtype=float) / self.boundary.radius) ** 2
        w = -(1 + 1j) * np.sqrt(self.visc / (2 * self.omega)) * q
        if self.kind == "generalized_wentzell":
            w = w - 1j * self.visc / (2 * self.omega) * self.curvature * q
        return w

    def data_for(self, m_max: int) -> np.ndarray:
        if self.data is None:
            return np.zeros(2 * m_max + 1, dtype=complex)
        d = np.asarray(self.data, dtype=complex)
        M = (d.shape[0] - 1) // 2
        out = np.zeros(2 * m_max + 1, dtype=complex)
        k = min(M, m_max)
        out[m_max - k:m_max + k + 1] = d[M - k:M + k + 1]
        return out

    def cache_key(self, m):
        return (self.boundary.which, self.boundary.radius, self.kind,
                float(self.visc), float(self.omega), complex(self.flux_coefficient), int(m))


@dataclass(frozen=True, eq=False)
class HelmholtzProblem:
    alpha: complex
    beta: complex
    rhs: FourierField
    bc_inner: BoundarySpec
    bc_outer: BoundarySpec

    def __post_init__(self):
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero")


class _FactorCache:
    """LU factors keyed by grid, coefficients, boundary conditions and mode.

    Reads are lock free; insertion happens under a lock so concurrent
    solves never store two different factorizations for one key.
    """

    def __init__(self, maxsize=4096):
        self._store = {}
        self._lock = threading.Lock()
        self.maxsize = maxsize

    def get(self, key, build):
        hit = self._store.get(key)
        if hit is not None:
            return hit
        value = build()
        with self._lock:
            if len(self._store) >= self.maxsize:
                self._store.clear()
            return self._store.setdefault(key, value)

    def clear(self):
        with self._lock:
            self._store.clear()


factor_cache = _FactorCache()


def mode_matrix(grid: RadialGrid, m: int, alpha, beta, bc_inner: BoundarySpec,
                bc_outer: BoundarySpec) -> np.ndarray:
    """Assembled collocation matrix for angular mode m."""
    r = grid.nodes
    A = alpha * (grid.d2 + grid.d1 / r[:, None] - np.diag(m**2 / r**2)) + beta * np.eye(grid.n_r)
    A = A.astype(complex)
    for bc in (bc_inner, bc_outer):
        j = bc.boundary.node_index
        row = bc.flux_coefficient * bc.boundary.normal_sign * grid.d1[j].astype(complex)
        row[j] += bc.impedance(m)
        A[j] = row
    return A


def _factor(grid, m, alpha, beta, bc_inner, bc_outer):
    key = (grid.key, complex(alpha), complex(beta), bc_inner.cache_key(m), bc_outer.cache_key(m))

    def build():
        A = mode_matrix(grid, m, alpha, beta, bc_inner, bc_outer)
        cond = np.linalg.cond(A)
        lu = scipy.linalg.lu_factor(A, check_finite=False) if cond <= COND_LIMIT else None
        return lu, cond
    return factor_cache.get(key, build)


def solve_helmholtz(problem: HelmholtzProblem) -> FourierField:
    rhs = problem.rhs
    grid, M = rhs.grid, rhs.m_max
    gi = problem.bc_inner.data_for(M)
    go = problem.bc_outer.data_for(M)
    out = np.zeros_like(rhs.values)
    bad = []
    for i, m in enumerate(rhs.modes):
        b = rhs.values[i].copy()
        b[problem.bc_inner.boundary.node_index] = gi[i]
        b[problem.bc_outer.boundary.node_index] = go[i]
        lu, cond = _factor(grid, int(m), problem.alpha, problem.beta,
                           problem.bc_inner, problem.bc_outer)
        if lu is None:
            bad.append(int(m))
            continue
        out[i] = scipy.linalg.lu_solve(lu, b, check_finite=False)
    if bad:
        raise ResonanceError(f"per-mode Helmholtz matrix is singular for modes {bad}", bad)
    return FourierField(grid, out)


def residual(problem: HelmholtzProblem, solution: FourierField) -> float:
    """Relative residual of the assembled per-mode systems."""
    rhs = problem.rhs
    M = rhs.m_max
    gi = problem.bc_inner.data_for(M)
    go = problem.bc_outer.data_for(M)
    num = den = 0.0
    for i, m in enumerate(rhs.modes):
        A = mode_matrix(rhs.grid, int(m), problem.alpha, problem.beta,
                        problem.bc_inner, problem.bc_outer)
        b = rhs.values[i].copy()
        b[problem.bc_inner.boundary.node_index] = gi[i]
        b[problem.bc_outer.boundary.node_index] = go[i]
        num = max(num, np.abs(A @ solution.values[i] - b).max())
        den = max(den, np.abs(b).max(), np.abs(A).max() * np.abs(solution.values[i]).max())
    return float(num / den) if den else 0.0


def neumann_eigenvalue_guard(beta, m_max: int, grid: RadialGrid, alpha=1.0,
                             bc_inner: BoundarySpec | None = None,
                             bc_outer: BoundarySpec | None = None):
    """Modes m in [0, m_max] whose matrix condition number exceeds 1e12.

    Defaults to Neumann conditions on both walls.
    """
    from .geometry import AnnulusDomain
    dom = AnnulusDomain(grid.r_inner, grid.r_outer)
    bci = bc_inner or BoundarySpec(dom.inner)
    bco = bc_outer or BoundarySpec(dom.outer)
    flagged = []
    for m in range(m_max + 1):
        A = mode_matrix(grid, m, alpha, beta, bci, bco)
        if np.linalg.cond(A) > COND_LIMIT:
            flagged.append(m)
    return flagged
