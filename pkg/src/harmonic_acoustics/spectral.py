"""Angular Fourier x radial Chebyshev representation of fields on an annulus.

A scalar field is stored as complex coefficients c[m, j] so that

    u(r_j, theta) = sum_{m=-M..M} c[m, j] exp(i m theta),

with row index m + M.  Radial nodes are Chebyshev-Gauss-Lobatto points,
optionally passed through the analytic map
g(x) = (1 - beta) x + beta sin(pi x / 2), which clusters nodes at both
walls while keeping spectral accuracy.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft

from .errors import AliasError, GridMismatch


def chebyshev_points(n: int) -> np.ndarray:
    """n Gauss-Lobatto points on [-1, 1] in increasing order."""
    if n < 2:
        raise ValueError("need at least two nodes")
    N = n - 1
    return -np.cos(np.pi * np.arange(n) / N)


def chebyshev_diff_matrix(n: int) -> np.ndarray:
    """First-derivative matrix on the increasing Gauss-Lobatto points."""
    if n < 2:
        raise ValueError("need at least two nodes")
    N = n - 1
    j = np.arange(n)
    x = np.cos(np.pi * j / N)
    c = np.where((j == 0) | (j == N), 2.0, 1.0) * (-1.0) ** j
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    # reorder from decreasing to increasing nodes
    return D[::-1, ::-1].copy()


def clenshaw_curtis_weights(n: int) -> np.ndarray:
    """Quadrature weights on [-1, 1] for the Gauss-Lobatto points."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    ii = np.arange(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(N * theta[ii]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / N
    return w


def chebyshev_coefficients(values) -> np.ndarray:
    """Chebyshev coefficients of data sampled at increasing Lobatto points.

    Works along the last axis.
    """
    values = np.asarray(values)
    N = values.shape[-1] - 1
    a = scipy.fft.dct(values[..., ::-1], type=1, axis=-1) / N
    a[..., 0] /= 2
    a[..., -1] /= 2
    return a


def stretch_map(x, beta):
    """g(x) and g'(x) of the wall-clustering map."""
    g = (1 - beta) * x + beta * np.sin(0.5 * np.pi * x)
    dg = (1 - beta) + beta * 0.5 * np.pi * np.cos(0.5 * np.pi * x)
    return g, dg


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Mapped Chebyshev-Gauss-Lobatto grid on [r_inner, r_outer].

    ``n_r`` is the number of nodes.  ``stretch`` in [0, 1) clusters nodes
    at both walls; 0 gives the plain Chebyshev grid.
    """

    r_inner: float
    r_outer: float
    n_r: int
    stretch: float = 0.0
    x: np.ndarray = dc_field(init=False, repr=False)
    nodes: np.ndarray = dc_field(init=False, repr=False)
    d1: np.ndarray = dc_field(init=False, repr=False)
    d2: np.ndarray = dc_field(init=False, repr=False)
    quadrature_weights: np.ndarray = dc_field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise ValueError("need 0 < r_inner < r_outer")
        if self.n_r < 3:
            raise ValueError("need at least three radial nodes")
        if not 0.0 <= self.stretch < 1.0:
            raise ValueError("stretch must lie in [0, 1)")
        x = chebyshev_points(self.n_r)
        g, dg = stretch_map(x, self.stretch)
        half = 0.5 * (self.r_outer - self.r_inner)
        mid = 0.5 * (self.r_outer + self.r_inner)
        r = mid + half * g
        r[0], r[-1] = self.r_inner, self.r_outer
        drdx = half * dg
        Dx = chebyshev_diff_matrix(self.n_r)
        d1 = Dx / drdx[:, None]
        w = clenshaw_curtis_weights(self.n_r) * drdx * r
        for name, val in (("x", x), ("nodes", r), ("d1", d1), ("d2", d1 @ d1),
                          ("quadrature_weights", w)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def key(self):
        return (float(self.r_inner), float(self.r_outer), int(self.n_r), float(self.stretch))

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or self.key == other.key

    def integrate(self, values):
        """Approximate the integral of values(r) r dr along the last axis."""
        return np.asarray(values) @ self.quadrature_weights

    def nodes_within(self, distance: float) -> tuple[int, int]:
        """Number of nodes within ``distance`` of the inner and outer wall."""
        r = self.nodes
        return (int(np.sum(r - self.r_inner <= distance)),
                int(np.sum(self.r_outer - r <= distance)))

    def interpolation_matrix(self, r_new) -> np.ndarray:
        """Barycentric interpolation from the grid nodes to radii r_new.

        Interpolation is polynomial in the reference coordinate x, so it
        is only valid for unstretched grids or targets that are nodes of a
        grid with the same map.
        """
        r_new = np.atleast_1d(np.asarray(r_new, dtype=float))
        half = 0.5 * (self.r_outer - self.r_inner)
        mid = 0.5 * (self.r_outer + self.r_inner)
        if self.stretch == 0.0:
            x_new = (r_new - mid) / half
        else:
            from scipy.optimize import brentq
            x_new = np.array([brentq(lambda s: mid + half * stretch_map(s, self.stretch)[0] - rv,
                                     -1.0, 1.0, xtol=1e-15) for rv in r_new])
        x = self.x
        n = self.n_r
        wb = (-1.0) ** np.arange(n)
        wb[0] *= 0.5
        wb[-1] *= 0.5
        diff = x_new[:, None] - x[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        P = wb[None, :] / diff
        P /= P.sum(axis=1, keepdims=True)
        rows = exact.any(axis=1)
        P[rows] = exact[rows].astype(float)
        return P


def _check_grids(*fields):
    g0 = fields[0].grid
    for f in fields[1:]:
        if not g0.same_as(f.grid):
            raise GridMismatch("fields live on different radial grids")


@dataclass(frozen=True, eq=False)
class FourierField:
    """Scalar field: complex angular coefficients per radial node."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[1] != self.grid.n_r or v.shape[0] % 2 != 1:
            raise ValueError(f"bad coefficient array shape {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def m_max(self) -> int:
        return (self.values.shape[0] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.m_max, self.m_max + 1)

    @classmethod
    def zeros(cls, grid, m_max):
        return cls(grid, np.zeros((2 * m_max + 1, grid.n_r), dtype=complex))

    @classmethod
    def from_mode(cls, grid, m_max, m, profile):
        f = np.zeros((2 * m_max + 1, grid.n_r), dtype=complex)
        f[m + m_max] = profile(grid.nodes) if callable(profile) else profile
        return cls(grid, f)

    @classmethod
    def from_function(cls, grid, m_max, func, n_theta=None):
        """Sample func(r, theta) on the physical grid and analyze it."""
        n_theta = n_theta or max(4 * m_max + 4, 16)
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        vals = func(grid.nodes[None, :], th[:, None])
        vals = np.broadcast_to(vals, (n_theta, grid.n_r))
        return analyze(grid, vals, m_max)

    def mode(self, m: int) -> np.ndarray:
        if abs(m) > self.m_max:
            return np.zeros(self.grid.n_r, dtype=complex)
        return self.values[m + self.m_max]

    def trace(self, boundary) -> np.ndarray:
        """Angular coefficients at a wall node."""
        return self.values[:, boundary.node_index]

    def conj(self) -> "FourierField":
        """Coefficients of the complex conjugate physical field."""
        return FourierField(self.grid, np.conj(self.values[::-1]))

    def resize(self, m_max: int) -> "FourierField":
        M = self.m_max
        out = np.zeros((2 * m_max + 1, self.grid.n_r), dtype=complex)
        k = min(M, m_max)
        out[m_max - k:m_max + k + 1] = self.values[M - k:M + k + 1]
        return FourierField(self.grid, out)

    def real_symmetry_error(self) -> float:
        """max |c_m - conj(c_-m)| relative to max |c|."""
        scale = np.abs(self.values).max()
        if scale == 0:
            return 0.0
        return float(np.abs(self.values - np.conj(self.values[::-1])).max() / scale)

    def real_part(self) -> "FourierField":
        return FourierField(self.grid, 0.5 * (self.values + np.conj(self.values[::-1])))

    def apply_radial(self, matrix) -> "FourierField":
        return FourierField(self.grid, self.values @ np.asarray(matrix).T)

    def _coerce(self, other):
        if isinstance(other, FourierField):
            _check_grids(self, other)
            M = max(self.m_max, other.m_max)
            return self.resize(M).values, other.resize(M).values
        other = np.asarray(other)
        if other.shape == self.values.shape:
            return self.values, other
        # a scalar or radial profile is a field constant in theta: mode 0 only
        b = np.zeros_like(self.values)
        b[self.m_max] = np.broadcast_to(other, (self.grid.n_r,))
        return self.values, b

    def __add__(self, other):
        a, b = self._coerce(other)
        return FourierField(self.grid, a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return FourierField(self.grid, a - b)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return FourierField(self.grid, -self.values)

    def __mul__(self, other):
        if isinstance(other, FourierField):
            return product(self, other)
        return FourierField(self.grid, self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return FourierField(self.grid, self.values / scalar)


@dataclass(frozen=True, eq=False)
class VectorFourierField:
    """Vector field in polar components (v_r, v_theta)."""

    radial: FourierField
    angular: FourierField

    def __post_init__(self):
        _check_grids(self.radial, self.angular)
        if self.radial.m_max != self.angular.m_max:
            M = max(self.radial.m_max, self.angular.m_max)
            object.__setattr__(self, "radial", self.radial.resize(M))
            object.__setattr__(self, "angular", self.angular.resize(M))

    @property
    def grid(self):
        return self.radial.grid

    @property
    def m_max(self):
        return self.radial.m_max

    @classmethod
    def zeros(cls, grid, m_max):
        return cls(FourierField.zeros(grid, m_max), FourierField.zeros(grid, m_max))

    @classmethod
    def from_function(cls, grid, m_max, func, n_theta=None):
        """func(r, theta) -> (v_r, v_theta) in polar components."""
        n_theta = n_theta or max(4 * m_max + 4, 16)
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        vr, vt = func(grid.nodes[None, :], th[:, None])
        shape = (n_theta, grid.n_r)
        return cls(analyze(grid, np.broadcast_to(vr, shape), m_max),
                   analyze(grid, np.broadcast_to(vt, shape), m_max))

    @classmethod
    def from_cartesian(cls, grid, m_max, func, n_theta=None):
        """func(x, y) -> (v_x, v_y)."""
        def polar(r, th):
            vx, vy = func(r * np.cos(th), r * np.sin(th))
            c, s = np.cos(th), np.sin(th)
            return c * vx + s * vy, -s * vx + c * vy
        return cls.from_function(grid, m_max, polar, n_theta)

    def components(self):
        return self.radial, self.angular

    def conj(self):
        return VectorFourierField(self.radial.conj(), self.angular.conj())

    def resize(self, m_max):
        return VectorFourierField(self.radial.resize(m_max), self.angular.resize(m_max))

    def real_symmetry_error(self):
        return max(self.radial.real_symmetry_error(), self.angular.real_symmetry_error())

    def real_part(self):
        return VectorFourierField(self.radial.real_part(), self.angular.real_part())

    def normal_trace(self, boundary):
        return boundary.normal_sign * self.radial.trace(boundary)

    def perp_trace(self, boundary):
        """Trace of v . n_perp, with n_perp = -e_theta on the outer wall."""
        return -boundary.normal_sign * self.angular.trace(boundary)

    def tangential_trace(self, boundary):
        """Trace of v . e_tau with e_tau = -n_perp."""
        return -self.perp_trace(boundary)

    def __add__(self, other):
        if isinstance(other, VectorFourierField):
            return VectorFourierField(self.radial + other.radial, self.angular + other.angular)
        return NotImplemented

    def __sub__(self, other):
        return VectorFourierField(self.radial - other.radial, self.angular - other.angular)

    def __neg__(self):
        return VectorFourierField(-self.radial, -self.angular)

    def __mul__(self, scalar):
        if isinstance(scalar, FourierField):
            return VectorFourierField(product(self.radial, scalar), product(self.angular, scalar))
        return VectorFourierField(self.radial * scalar, self.angular * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return VectorFourierField(self.radial / scalar, self.angular / scalar)


# --- transforms ---------------------------------------------------------

def synthesize(field: FourierField, theta_samples: int) -> np.ndarray:
    """Physical values on theta_j = 2 pi j / theta_samples, shape (n_theta, n_r)."""
    M = field.m_max
    if theta_samples < 2 * M + 1:
        raise AliasError(f"{theta_samples} angular samples cannot represent m_max={M}")
    buf = np.zeros((theta_samples, field.grid.n_r), dtype=complex)
    buf[field.modes % theta_samples] = field.values
    return scipy.fft.ifft(buf, axis=0) * theta_samples


def analyze(grid: RadialGrid, values, m_max: int) -> FourierField:
    """Angular coefficients m = -m_max..m_max of equispaced samples."""
    values = np.asarray(values)
    n = values.shape[0]
    if n < 2 * m_max + 1:
        raise AliasError(f"{n} angular samples cannot resolve m_max={m_max}")
    c = scipy.fft.fft(values, axis=0) / n
    return FourierField(grid, c[np.arange(-m_max, m_max + 1) % n])


def good_size(n: int) -> int:
    return scipy.fft.next_fast_len(int(n))


def _support(field: FourierField, rtol=1e-14) -> int:
    a = np.abs(field.values).max(axis=1)
    if a.max() == 0:
        return -1
    nz = np.nonzero(a > rtol * a.max())[0]
    return int(np.abs(field.modes[nz]).max())


def product(a: FourierField, b: FourierField, m_max: int | None = None,
            with_flag: bool = False):
    """Pointwise product, padded so the retained modes are alias free.

    With ``with_flag`` also returns True when the exact product has
    content beyond the retained band.
    """
    _check_grids(a, b)
    Mo = max(a.m_max, b.m_max) if m_max is None else m_max
    n = good_size(a.m_max + b.m_max + Mo + 1)
    out = analyze(a.grid, synthesize(a, n) * synthesize(b, n), Mo)
    if with_flag:
        sa, sb = _support(a), _support(b)
        return out, (sa >= 0 and sb >= 0 and sa + sb > Mo)
    return out


# --- differential operators ---------------------------------------------

def _over_r(f: FourierField) -> np.ndarray:
    return f.values / f.grid.nodes[None, :]


def radial_derivative(f: FourierField) -> FourierField:
    return f.apply_radial(f.grid.d1)


def angular_derivative(f: FourierField) -> FourierField:
    return FourierField(f.grid, 1j * f.modes[:, None] * f.values)


def gradient(f: FourierField) -> VectorFourierField:
    return VectorFourierField(radial_derivative(f),
                              FourierField(f.grid, 1j * f.modes[:, None] * _over_r(f)))


def divergence(v: VectorFourierField) -> FourierField:
    vr, vt = v.radial, v.angular
    vals = vr.values @ vr.grid.d1.T + _over_r(vr) + 1j * vt.modes[:, None] * _over_r(vt)
    return FourierField(vr.grid, vals)


def curl2d(v: VectorFourierField) -> FourierField:
    vr, vt = v.radial, v.angular
    vals = vt.values @ vt.grid.d1.T + _over_r(vt) - 1j * vr.modes[:, None] * _over_r(vr)
    return FourierField(vr.grid, vals)


def laplacian(f: FourierField) -> FourierField:
    r = f.grid.nodes[None, :]
    m = f.modes[:, None]
    vals = f.values @ f.grid.d2.T + (f.values @ f.grid.d1.T) / r - m**2 * f.values / r**2
    return FourierField(f.grid, vals)


def vector_laplacian(v: VectorFourierField) -> VectorFourierField:
    r = v.grid.nodes[None, :]
    m = v.radial.modes[:, None]
    lr, lt = laplacian(v.radial).values, laplacian(v.angular).values
    vr, vt = v.radial.values, v.angular.values
    return VectorFourierField(FourierField(v.grid, lr - vr / r**2 - 2j * m * vt / r**2),
                              FourierField(v.grid, lt - vt / r**2 + 2j * m * vr / r**2))


def curl_scalar(u: FourierField) -> VectorFourierField:
    """Vector curl of a scalar, (r^-1 d_theta u, -d_r u)."""
    return VectorFourierField(FourierField(u.grid, 1j * u.modes[:, None] * _over_r(u)),
                              -radial_derivative(u))


def curl_curl(v: VectorFourierField) -> VectorFourierField:
    """curl curl v = grad div v - lap v."""
    return gradient(divergence(v)) - vector_laplacian(v)


def dot(a: VectorFourierField, b: VectorFourierField, m_max=None) -> FourierField:
    """Unconjugated pointwise a . b."""
    return product(a.radial, b.radial, m_max) + product(a.angular, b.angular, m_max)


def hermitian_dot(a: VectorFourierField, b: VectorFourierField, m_max=None) -> FourierField:
    """Pointwise a . conj(b)."""
    return dot(a, b.conj(), m_max)


def advect(a: VectorFourierField, b: VectorFourierField, m_max=None) -> VectorFourierField:
    """(a . grad) b in polar components."""
    M = max(a.m_max, b.m_max) if m_max is None else m_max
    grid = a.grid
    br, bt = b.radial, b.angular
    a_over_r = VectorFourierField(FourierField(grid, _over_r(a.radial)),
                                  FourierField(grid, _over_r(a.angular)))
    out_r = (product(a.radial, radial_derivative(br), M)
             + product(a_over_r.angular, angular_derivative(br), M)
             - product(a_over_r.angular, bt, M))
    out_t = (product(a.radial, radial_derivative(bt), M)
             + product(a_over_r.angular, angular_derivative(bt), M)
             + product(a_over_r.angular, br, M))
    return VectorFourierField(out_r, out_t)


def jacobian_frobenius(g: VectorFourierField, m_max=None) -> FourierField:
    """Unconjugated sum of squares of the velocity-gradient tensor entries.

    In polar components the entries are d_r g_r, (d_theta g_r - g_theta)/r,
    d_r g_theta and (d_theta g_theta + g_r)/r; the sum of their squares is
    invariant under rotation of the frame, so it equals tr(J^T J).
    """
    grid = g.grid
    gr, gt = g.radial, g.angular
    e11 = radial_derivative(gr)
    e12 = FourierField(grid, (angular_derivative(gr).values - gt.values) / grid.nodes[None, :])
    e21 = radial_derivative(gt)
    e22 = FourierField(grid, (angular_derivative(gt).values + gr.values) / grid.nodes[None, :])
    return sum((product(e, e, m_max) for e in (e11, e12, e21, e22)), FourierField.zeros(grid, m_max or g.m_max))


# --- norms --------------------------------------------------------------

def l2_norm(f: FourierField) -> float:
    return float(np.sqrt(2 * np.pi * np.sum(np.abs(f.values) ** 2 @ f.grid.quadrature_weights)))


def l2_norm_vector(v: VectorFourierField) -> float:
    return float(np.hypot(l2_norm(v.radial), l2_norm(v.angular)))


def mean_value(f: FourierField) -> complex:
    """Integral of the field over the annulus divided by its area."""
    g = f.grid
    area = np.pi * (g.r_outer**2 - g.r_inner**2)
    return complex(2 * np.pi * g.integrate(f.mode(0)) / area)


def integral(f: FourierField) -> complex:
    return complex(2 * np.pi * f.grid.integrate(f.mode(0)))


def max_abs(f: FourierField, n_theta: int | None = None) -> float:
    n_theta = n_theta or max(4 * f.m_max + 4, 64)
    return float(np.abs(synthesize(f, n_theta)).max())


def max_abs_vector(v: VectorFourierField, n_theta: int | None = None) -> float:
    n_theta = n_theta or max(4 * v.m_max + 4, 64)
    a, b = synthesize(v.radial, n_theta), synthesize(v.angular, n_theta)
    return float(np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2).max())


# --- serialization -------------------------------------------------------

def write_field_csv(field: FourierField, path) -> None:
    """Write one row per (m, r) with the real and imaginary coefficient."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "r", "re", "im"])
        for m, row in zip(field.modes, field.values):
            for r, c in zip(field.grid.nodes, row):
                w.writerow([int(m), repr(float(r)), repr(float(c.real)), repr(float(c.imag))])


def read_field_csv(path, grid: RadialGrid) -> FourierField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    m = data[:, 0].astype(int)
    M = int(np.abs(m).max())
    n = grid.n_r
    if data.shape[0] != (2 * M + 1) * n:
        raise GridMismatch("row count does not match the grid")
    r = data[:, 1].reshape(2 * M + 1, n)
    if not np.allclose(r, grid.nodes[None, :], rtol=0, atol=1e-12):
        raise GridMismatch("radii in file differ from the grid nodes")
    vals = (data[:, 2] + 1j * data[:, 3]).reshape(2 * M + 1, n)
    order = np.argsort(m.reshape(2 * M + 1, n)[:, 0])
    return FourierField(grid, vals[order])
