"""Time-domain reference solver for the nonlinear isothermal system

    d_t v + (v . grad) v + grad p - nu lap v = f,
    d_t p + c^2 div v + div(p v) = 0,            v = 0 on the walls,

with a Crank-Nicolson step whose nonlinear terms are explicit:

    (X' - X)/dt + L (X' + X)/2 = (f' + f)/2 - N(X),

where X = (v_r, v_theta, p) and L is the linear operator.  Space is
discretized like the frequency-domain solvers: real fields are stored by
their angular modes m = 0..M (rfft layout) times radial collocation nodes.
Each mode has a fixed matrix, so the step is X' = G X + H b with G, H
precomputed once.
"""
from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import BlowupDetected, ConfigError, LinearSolveFailure, NotStationary
from .spectral import FourierField, RadialGrid, VectorFourierField, write_field_csv

INITIAL_KINDS = ("zero", "linear_solution", "periodic_orbit")


@dataclass(frozen=True)
class TimeSchemeConfig:
    """Settings of the reference run.

    ``dt`` is rounded down so one period holds a whole number of steps that
    is a multiple of ``samples_per_period``.  ``nonlinear=False`` drops both
    the advection and div(p v) terms.
    """

    dt: float = 2e-3
    n_periods: int = 15
    nu: float = 1e-2
    c: float = 1.0
    omega: float = 15.0
    r_inner: float = 1.5
    r_outer: float = 2.0
    n_r: int = 48
    m_max: int = 16
    stretch: float = 0.0
    dealias: bool = True
    nonlinear: bool = True
    samples_per_period: int = 128
    orbit_harmonics: int = 6
    orbit_tol: float = 1e-13
    orbit_max_iter: int = 40
    min_layer_nodes: int = 8
    check_resolution: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.n_periods < 1:
            raise ConfigError("n_periods must be at least 1")
        if self.nu <= 0 or self.c <= 0 or self.omega <= 0:
            raise ConfigError("nu, c and omega must be positive")
        if self.samples_per_period < 1:
            raise ConfigError("samples_per_period must be positive")
        if self.check_resolution:
            got = min(self.grid().nodes_within(self.layer_width))
            if got < self.min_layer_nodes:
                raise ConfigError(
                    f"only {got} radial nodes within 3 sqrt(2 nu/w) = {self.layer_width:.3g} "
                    f"of a wall, need {self.min_layer_nodes}; raise n_r or stretch")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def layer_width(self) -> float:
        return 3 * math.sqrt(2 * self.nu / self.omega)

    @property
    def steps_per_period(self) -> int:
        s = self.samples_per_period
        return s * max(1, math.ceil(self.period / (self.dt * s) - 1e-9))

    @property
    def dt_effective(self) -> float:
        return self.period / self.steps_per_period

    @property
    def n_theta(self) -> int:
        # 3M+1 samples make the quadratic products alias free on m <= M
        return 3 * self.m_max + 1 if self.dealias else 2 * self.m_max + 1

    def grid(self) -> RadialGrid:
        return RadialGrid(self.r_inner, self.r_outer, self.n_r, self.stretch)

    def with_(self, **kw) -> "TimeSchemeConfig":
        return TimeSchemeConfig(**{**asdict(self), **kw})

    def to_dict(self):
        d = asdict(self)
        d["dt_effective"] = self.dt_effective
        d["steps_per_period"] = self.steps_per_period
        return d


@dataclass(frozen=True, eq=False)
class TimeState:
    """Real fields at time t in rfft layout: array (M+1, 3 n_r) of
    (v_r, v_theta, p) coefficients per angular mode m >= 0."""

    grid: RadialGrid
    data: np.ndarray
    t: float = 0.0

    @property
    def m_max(self) -> int:
        return self.data.shape[0] - 1

    def _block(self, i):
        n = self.grid.n_r
        return self.data[:, i * n:(i + 1) * n]

    def _full(self, i) -> FourierField:
        return FourierField(self.grid, rfft_to_full(self._block(i)))

    @property
    def velocity(self) -> VectorFourierField:
        return VectorFourierField(self._full(0), self._full(1))

    @property
    def pressure(self) -> FourierField:
        return self._full(2)

    @classmethod
    def zeros(cls, grid, m_max, t=0.0):
        return cls(grid, np.zeros((m_max + 1, 3 * grid.n_r), dtype=complex), t)

    @classmethod
    def from_fields(cls, velocity: VectorFourierField, pressure: FourierField, t=0.0):
        M = max(velocity.m_max, pressure.m_max)
        blocks = [full_to_rfft(f.resize(M).values)
                  for f in (velocity.radial, velocity.angular, pressure)]
        return cls(pressure.grid, np.hstack(blocks), t)

    def wall_velocity(self) -> float:
        n = self.grid.n_r
        idx = [0, n - 1, n, 2 * n - 1]
        return float(np.abs(self.data[:, idx]).max())

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


def rfft_to_full(c: np.ndarray) -> np.ndarray:
    """(M+1, n) coefficients of a real field to the (2M+1, n) m = -M..M layout."""
    M = c.shape[0] - 1
    out = np.empty((2 * M + 1,) + c.shape[1:], dtype=complex)
    out[M:] = c
    out[:M] = np.conj(c[1:][::-1])
    return out


def full_to_rfft(v: np.ndarray) -> np.ndarray:
    """Keep m >= 0 after symmetrizing, so the field is read as real."""
    M = (v.shape[0] - 1) // 2
    sym = 0.5 * (v + np.conj(v[::-1]))
    return sym[M:].copy()


# --- operators ------------------------------------------------------------

def linear_operator(grid: RadialGrid, m: int, nu: float, c: float) -> np.ndarray:
    """L with d_t X = -L X + F for mode m, unknowns (v_r, v_theta, p)."""
    n = grid.n_r
    r = grid.nodes
    lap = grid.d2 + grid.d1 / r[:, None] - np.diag(m**2 / r**2)
    Lrr = lap - np.diag(1 / r**2)
    cross = np.diag(2j * m / r**2)
    L = np.zeros((3 * n, 3 * n), dtype=complex)
    L[:n, :n] = -nu * Lrr
    L[:n, n:2 * n] = nu * cross
    L[:n, 2 * n:] = grid.d1
    L[n:2 * n, :n] = -nu * cross
    L[n:2 * n, n:2 * n] = -nu * Lrr
    L[n:2 * n, 2 * n:] = np.diag(1j * m / r)
    L[2 * n:, :n] = c**2 * (grid.d1 + np.diag(1 / r))
    L[2 * n:, n:2 * n] = c**2 * np.diag(1j * m / r)
    return L


def _wall_rows(n):
    return np.array([0, n - 1, n, 2 * n - 1])


def step_matrices(grid: RadialGrid, m: int, nu: float, c: float, dt: float):
    """(A, B) with A X' = B X + b; wall velocity rows read X'_j = 0."""
    n = grid.n_r
    L = linear_operator(grid, m, nu, c)
    I = np.eye(3 * n)
    A = I / dt + 0.5 * L
    B = I / dt - 0.5 * L
    rows = _wall_rows(n)
    A[rows] = I[rows]
    B[rows] = 0.0
    return A, B


class Stepper:
    """Precomputed G = A^-1 B and H = A^-1 for all modes."""

    def __init__(self, config: TimeSchemeConfig):
        self.config = config
        self.grid = config.grid()
        self.dt = config.dt_effective
        M, n = config.m_max, self.grid.n_r
        self.G = np.empty((M + 1, 3 * n, 3 * n), dtype=complex)
        self.H = np.empty_like(self.G)
        for m in range(M + 1):
            A, B = step_matrices(self.grid, m, config.nu, config.c, self.dt)
            try:
                lu = scipy.linalg.lu_factor(A, check_finite=True)
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise LinearSolveFailure(f"step matrix for mode {m}: {exc}") from exc
            if np.abs(np.diag(lu[0])).min() < 1e-14 * np.abs(A).max():
                raise LinearSolveFailure(f"step matrix for mode {m} is singular")
            Hm = scipy.linalg.lu_solve(lu, np.eye(3 * n))
            self.H[m] = Hm
            self.G[m] = Hm @ B
        self.walls = _wall_rows(n)
        self.mm = np.arange(M + 1)

    def nonlinear(self, X: np.ndarray, force: bool = False) -> np.ndarray:
        """Explicit terms ((v.grad)v, div(p v)) in rfft layout."""
        cfg, grid = self.config, self.grid
        if not (cfg.nonlinear or force):
            return np.zeros_like(X)
        n, M, nt = grid.n_r, cfg.m_max, cfg.n_theta
        r = grid.nodes
        vr, vt, p = X[:, :n], X[:, n:2 * n], X[:, 2 * n:]
        im = 1j * self.mm[:, None]
        d1 = grid.d1.T
        spec = np.stack([vr, vt, p, vr @ d1, vt @ d1, p @ d1, im * vr, im * vt, im * p])
        phys = scipy.fft.irfft(spec, n=nt, axis=1) * nt
        Vr, Vt, P, Vr_r, Vt_r, P_r, Vr_t, Vt_t, P_t = phys
        inv_r = 1 / r
        adv_r = Vr * Vr_r + Vt * inv_r * (Vr_t - Vt)
        adv_t = Vr * Vt_r + Vt * inv_r * (Vt_t + Vr)
        div_v = Vr_r + inv_r * (Vr + Vt_t)
        flux = P * div_v + Vr * P_r + Vt * inv_r * P_t
        out = scipy.fft.rfft(np.stack([adv_r, adv_t, flux]), axis=1) / nt
        out = out[:, :M + 1]
        return np.concatenate([out[0], out[1], out[2]], axis=1)

    def advance(self, X, forcing_avg, nonlin=None):
        b = forcing_avg - (self.nonlinear(X) if nonlin is None else nonlin)
        b[:, self.walls] = 0.0
        return (np.einsum("mij,mj->mi", self.G, X)
                + np.einsum("mij,mj->mi", self.H, b))


# --- sources --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HarmonicSource:
    """f(t) = Re(f_hat exp(-i w t)) for a single-frequency source.

    ``amplitude`` is a VectorFourierField of the (complex) amplitude f_hat.
    """

    amplitude: VectorFourierField
    omega: float

    def rfft_coefficients(self, m_max):
        """Coefficient arrays (a, b) in rfft layout with f(t) = Re-part
        reconstruction a e^{-iwt} + b e^{iwt} for the real field."""
        fr = self.amplitude.radial.resize(m_max).values
        ft = self.amplitude.angular.resize(m_max).values
        n = fr.shape[1]
        M = m_max
        zero_p = np.zeros((2 * M + 1, n), dtype=complex)
        full = np.concatenate([fr, ft, zero_p], axis=1)
        # Re(F e^{-iwt}) = (F e^{-iwt} + conj(F) e^{iwt}) / 2, with conj
        # acting on physical values (mode m <- conj of mode -m)
        conjF = np.conj(full[::-1])
        a = 0.5 * full[M:]
        b = 0.5 * conjF[M:]
        return a, b

    def at(self, t, m_max):
        a, b = self.rfft_coefficients(m_max)
        return a * np.exp(-1j * self.omega * t) + b * np.exp(1j * self.omega * t)


def _source_coeffs(source, M, n):
    if source is None:
        z = np.zeros((M + 1, 3 * n), dtype=complex)
        return z, z
    return source.rfft_coefficients(M)


# --- single step ------------------------------------------------------------

_STEPPERS: dict = {}


def get_stepper(config: TimeSchemeConfig) -> Stepper:
    key = tuple(sorted(asdict(config).items()))
    st = _STEPPERS.get(key)
    if st is None:
        if len(_STEPPERS) > 8:
            _STEPPERS.clear()
        st = _STEPPERS[key] = Stepper(config)
    return st


def cn_step(state: TimeState, config: TimeSchemeConfig,
            source_at: Optional[Callable[[float], np.ndarray]] = None) -> TimeState:
    """One step of size config.dt_effective.

    ``source_at(t)`` returns the forcing in rfft layout (M+1, 3 n_r); the
    pressure block is ignored.
    """
    st = get_stepper(config)
    if state.m_max != config.m_max or not state.grid.same_as(st.grid):
        raise ConfigError("state does not match the scheme configuration")
    dt = st.dt
    X = state.data
    if source_at is None:
        favg = np.zeros_like(X)
    else:
        favg = 0.5 * (source_at(state.t) + source_at(state.t + dt))
        favg = favg.copy()
        favg[:, 2 * st.grid.n_r:] = 0.0
    Xn = st.advance(X, favg)
    _check_blowup(X, Xn)
    return TimeState(state.grid, Xn, state.t + dt)


def _check_blowup(X, Xn):
    a, b = np.linalg.norm(X), np.linalg.norm(Xn)
    if not np.isfinite(b) or (a > 1e-300 and b > 10 * a and b > 1e-200):
        raise BlowupDetected(f"state norm jumped from {a:.3e} to {b:.3e} in one step")


def discrete_energy(state: TimeState, c: float = 1.0) -> float:
    """Integral of |v|^2 + p^2/c^2 over the annulus."""
    n = state.grid.n_r
    w = state.grid.quadrature_weights
    X = state.data
    weight = np.full(X.shape[0], 2.0)
    weight[0] = 1.0
    e = 0.0
    for i, s in enumerate((1.0, 1.0, 1.0 / c**2)):
        blk = np.abs(X[:, i * n:(i + 1) * n]) ** 2
        e += s * float(weight @ (blk @ w))
    return 2 * np.pi * e


# --- periodic orbits ---------------------------------------------------------

def _orbit_rhs_matrix(st: Stepper, m, z):
    """R(z) = z A - B, so a harmonic X_hat z^l solves R X_hat = b_hat."""
    A, B = step_matrices(st.grid, m, st.config.nu, st.config.c, st.dt)
    return z * A - B


def periodic_orbit(config: TimeSchemeConfig, source: HarmonicSource, harmonics: int | None = None,
                   nonlinear: bool | None = None, tol: float | None = None,
                   max_iter: int | None = None):
    """Periodic solution of the discrete scheme, represented by time harmonics.

    Each orbit X_l = sum_k X_k z_k^l with z_k = exp(-i k w dt) satisfies
    (z_k A - B) X_k = (1 + z_k)/2 F_k - N_k exactly.  The nonlinear term
    is updated by fixed-point iteration from samples of the orbit.  The
    static m = 0 block has the constant pressure in its kernel; it is fixed
    by mass conservation (zero mean pressure).

    Returns (coeffs, info) with coeffs[k + K] of shape (M+1, 3 n_r).
    """
    st = get_stepper(config)
    nonlinear = config.nonlinear if nonlinear is None else nonlinear
    K = harmonics if harmonics is not None else (config.orbit_harmonics if nonlinear else 1)
    tol = config.orbit_tol if tol is None else tol
    max_iter = config.orbit_max_iter if max_iter is None else max_iter
    grid, M, n = st.grid, config.m_max, st.grid.n_r
    dt, w = st.dt, config.omega
    ks = np.arange(-K, K + 1)
    zs = np.exp(-1j * ks * w * dt)
    a, b = _source_coeffs(source, M, n)
    F = np.zeros((2 * K + 1, M + 1, 3 * n), dtype=complex)
    if K >= 1:
        F[K + 1] = a
        F[K - 1] = b
    F[:, :, 2 * n:] = 0.0
    walls = st.walls
    p_weights = grid.quadrature_weights
    factors = {}

    def solve(ki, m, rhs):
        key = (ki, m)
        z = zs[ki]
        if key not in factors:
            R = _orbit_rhs_matrix(st, m, z)
            if ks[ki] == 0 and m == 0:
                factors[key] = ("lstsq", R)
            else:
                factors[key] = ("lu", scipy.linalg.lu_factor(R))
        kind, fac = factors[key]
        if kind == "lu":
            return scipy.linalg.lu_solve(fac, rhs)
        x = np.linalg.lstsq(fac, rhs, rcond=1e-13)[0]
        # pin the free pressure constant: zero mass excess
        pr = x[2 * n:]
        pr -= (pr @ p_weights) / p_weights.sum()
        return x

    # discrete time samples for the nonlinear term
    Q = max(4 * K + 2, 8)
    tq = np.arange(Q)
    # orbit sample at step l = q * P / Q is sum_k X_k z_k^l = sum_k X_k exp(-i k 2 pi q / Q)
    E = np.exp(-2j * np.pi * np.outer(tq, ks) / Q)
    Nk = np.zeros_like(F)
    X = np.zeros_like(F)
    history = []
    best, best_change, rising = X, np.inf, 0
    for it in range(max_iter + 1):
        bhat = 0.5 * (1 + zs)[:, None, None] * F - Nk
        bhat[:, :, walls] = 0.0
        Xn = np.empty_like(X)
        for ki in range(2 * K + 1):
            for m in range(M + 1):
                Xn[ki, m] = solve(ki, m, bhat[ki, m])
        change = np.linalg.norm(Xn - X) / max(np.linalg.norm(Xn), 1e-300)
        X = Xn
        history.append(float(change))
        if change < best_change:
            best, best_change, rising = X, change, 0
        else:
            rising += 1
        # weakly damped high harmonics can make the plain iteration drift
        # away again; stop and keep the best iterate
        if not nonlinear or change < tol or rising >= 2 or not np.isfinite(change):
            break
        samples = np.einsum("qk,kmj->qmj", E, X)
        Ns = np.stack([st.nonlinear(s, force=True) for s in samples])
        Nk = np.einsum("qk,qmj->kmj", np.conj(E), Ns) / Q
    X = best
    info = {"harmonics": K, "iterations": len(history), "history": history,
            "converged": (not nonlinear) or best_change < tol,
            "best_change": float(best_change),
            "tail": float(np.linalg.norm(X[[0, -1]]) / max(np.linalg.norm(X), 1e-300))}
    return X, info


def orbit_state(coeffs, config: TimeSchemeConfig, t: float = 0.0) -> TimeState:
    """Sample an orbit from ``periodic_orbit`` at time t."""
    K = (coeffs.shape[0] - 1) // 2
    ks = np.arange(-K, K + 1)
    X = np.einsum("k,kmj->mj", np.exp(-1j * ks * config.omega * t), coeffs)
    X = _project_real(X)
    return TimeState(config.grid(), X, t)


def _project_real(X):
    X = X.copy()
    X[0] = X[0].real
    return X


# --- runs -------------------------------------------------------------------

def _json_scalar(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


@dataclass(eq=False)
class FinalPeriod:
    """Equispaced samples of the last period, t_j = t0 + j T / S, j < S."""

    grid: RadialGrid
    omega: float
    times: np.ndarray
    data: np.ndarray  # (S, M+1, 3 n_r) rfft layout
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def n_samples(self):
        return self.times.shape[0]

    @property
    def m_max(self):
        return self.data.shape[1] - 1

    def pressure_samples(self) -> np.ndarray:
        n = self.grid.n_r
        return self.data[:, :, 2 * n:]

    def state(self, j) -> TimeState:
        return TimeState(self.grid, self.data[j], float(self.times[j]))

    def save(self, path):
        path = Path(path)
        np.savez_compressed(path, times=self.times, data=self.data, omega=self.omega,
                            grid=np.array(self.grid.key),
                            diagnostics=json.dumps(self.diagnostics, default=_json_scalar))

    @classmethod
    def load(cls, path):
        z = np.load(path, allow_pickle=False)
        r1, r2, n, st = z["grid"]
        grid = RadialGrid(float(r1), float(r2), int(n), float(st))
        return cls(grid, float(z["omega"]), z["times"], z["data"],
                   json.loads(str(z["diagnostics"])))


def _pressure_l2(X, grid):
    n = grid.n_r
    w = np.full(X.shape[-2], 2.0)
    w[0] = 1.0
    p = X[..., 2 * n:]
    return np.sqrt(2 * np.pi * np.einsum("m,...mj,j->...", w, np.abs(p) ** 2,
                                         grid.quadrature_weights))


def run_to_quasistationary(config: TimeSchemeConfig, source: HarmonicSource | None,
                           initial: str = "linear_solution", snapshot_dir=None,
                           snapshot_every: int = 0, progress: Callable | None = None,
                           warn: bool = True) -> FinalPeriod:
    """Integrate config.n_periods periods and keep the last one.

    initial: "zero", "linear_solution" (the linear periodic orbit of the
    scheme) or "periodic_orbit" (the nonlinear periodic orbit from
    harmonic fixed-point iteration, so only harmonic truncation is left
    as a transient).
    """
    if initial not in INITIAL_KINDS:
        raise ConfigError(f"initial must be one of {INITIAL_KINDS}")
    st = get_stepper(config)
    grid, M, n = st.grid, config.m_max, st.grid.n_r
    t0 = time.perf_counter()
    orbit_info = None
    if initial == "zero" or source is None:
        X = np.zeros((M + 1, 3 * n), dtype=complex)
    else:
        coeffs, orbit_info = periodic_orbit(config, source,
                                            nonlinear=(initial == "periodic_orbit") and config.nonlinear)
        X = orbit_state(coeffs, config).data
    a, b = _source_coeffs(source, M, n)
    a = a.copy()
    b = b.copy()
    a[:, 2 * n:] = 0
    b[:, 2 * n:] = 0
    P = config.steps_per_period
    S = config.samples_per_period
    stride = P // S
    dt, w = st.dt, config.omega
    half = 0.5 * (1 + np.exp(-1j * w * dt))
    period_norms = []
    samples = np.empty((S, M + 1, 3 * n), dtype=complex)
    prev_samples = None
    change = np.nan
    for per in range(config.n_periods):
        for l in range(P):
            if l % stride == 0:
                samples[l // stride] = X
            step = per * P + l
            # exact phases avoid drift of exp(-i w t) over many steps
            e0 = np.exp(-1j * w * dt * (step % P))
            favg = a * (half * e0) + b * np.conj(half * e0)
            Xn = st.advance(X, favg)
            _check_blowup(X, Xn)
            X = Xn
        pn = float(np.sqrt(np.mean(_pressure_l2(samples, grid) ** 2)))
        if prev_samples is not None:
            diff = float(np.sqrt(np.mean(_pressure_l2(samples - prev_samples, grid) ** 2)))
            change = diff / pn if pn > 0 else diff
        period_norms.append(pn)
        prev_samples = samples.copy()
        if snapshot_dir is not None and snapshot_every and (per + 1) % snapshot_every == 0:
            dump_snapshot(TimeState(grid, X, (per + 1) * config.period), snapshot_dir,
                          tag=f"period_{per + 1:04d}", config=config)
        if progress:
            progress(per + 1, pn, change)
    diag = {"period_change": change, "period_norms": period_norms,
            "initial": initial, "steps_per_period": P, "dt": dt,
            "runtime_s": time.perf_counter() - t0,
            "wall_velocity": float(np.abs(X[:, st.walls]).max()),
            "stationary": bool(np.isfinite(change) and change <= 1e-4)}
    if orbit_info is not None:
        diag["orbit"] = {k: v for k, v in orbit_info.items() if k != "history"}
    t_start = (config.n_periods - 1) * config.period
    times = t_start + np.arange(S) * config.period / S
    if warn and not diag["stationary"] and config.n_periods > 1:
        warnings.warn(NotStationary(
            f"last two periods differ by {change:.2e} (relative), above 1e-4"))
    return FinalPeriod(grid, w, times, samples.copy(), diag)


def dump_snapshot(state: TimeState, directory, tag: str, config: TimeSchemeConfig | None = None):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    v = state.velocity
    files = {}
    for name, f in (("velocity_r", v.radial), ("velocity_theta", v.angular),
                    ("pressure", state.pressure)):
        fn = d / f"{tag}_{name}.csv"
        write_field_csv(f, fn)
        files[name] = fn.name
    manifest = {"tag": tag, "t": state.t, "files": files,
                "config": config.to_dict() if config else None}
    (d / f"{tag}.json").write_text(json.dumps(manifest, indent=2))
    return manifest


# --- harmonics --------------------------------------------------------------

def extract_time_harmonics(samples: np.ndarray, k_max: int, times=None, omega=None) -> dict:
    """p_0 = mean, p_k = 2 mean(p e^{ik w t}) over equispaced samples of one period.

    ``samples`` has time on axis 0.  If ``times`` and ``omega`` are given,
    the phases use the actual sample times; otherwise t_j = j T / S.
    """
    samples = np.asarray(samples)
    S = samples.shape[0]
    if 2 * k_max >= S:
        raise ValueError(f"{S} samples cannot resolve harmonic {k_max}")
    if times is None:
        phase = 2 * np.pi * np.arange(S) / S
    else:
        phase = omega * np.asarray(times)
    out = {}
    for k in range(k_max + 1):
        e = np.exp(1j * k * phase)
        coef = np.tensordot(e, samples, axes=(0, 0)) / S
        out[k] = coef if k == 0 else 2 * coef
    return out


def extract_harmonics(series: FinalPeriod, k_max: int, what: str = "pressure") -> dict:
    """Map k -> FourierField of the k-th time harmonic of the chosen field.

    Pressure harmonics are returned as FourierField; velocity harmonics as
    VectorFourierField.  p_0 is real, p_k complex with p = Re sum p_k e^{-ikwt}.
    """
    n = series.grid.n_r
    grid = series.grid

    def full_time_harmonics(block):
        # physical real field u(t) = sum_m c_m(t) e^{im theta} over all m;
        # time harmonics of the full layout
        full = np.stack([rfft_to_full(s) for s in block])
        return extract_time_harmonics(full, k_max, series.times, series.omega)

    if what == "pressure":
        h = full_time_harmonics(series.data[:, :, 2 * n:])
        return {k: FourierField(grid, v) for k, v in h.items()}
    if what == "velocity":
        hr = full_time_harmonics(series.data[:, :, :n])
        ht = full_time_harmonics(series.data[:, :, n:2 * n])
        return {k: VectorFourierField(FourierField(grid, hr[k]), FourierField(grid, ht[k]))
                for k in hr}
    raise ValueError("what must be 'pressure' or 'velocity'")


def linear_mono_frequency_state(config: TimeSchemeConfig, source: HarmonicSource, t=0.0):
    """Exact periodic orbit of the linear scheme, sampled at t."""
    coeffs, _ = periodic_orbit(config, source, nonlinear=False)
    return orbit_state(coeffs, config, t)
