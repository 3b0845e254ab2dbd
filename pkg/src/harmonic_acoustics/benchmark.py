"""Ring benchmark: Bessel source, error metrics and convergence studies."""
from __future__ import annotations

import csv
import json
import math
import time
import warnings
from dataclasses import dataclass, field as dc_field, asdict
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import optimize, special

from .errors import GridMismatch, NoBracket, NotStationary
from .geometry import AnnulusDomain
from .models import HarmonicSolution, ModelConfig, SourceSpec, pressure_modes_at, solve_model
from .reference import (FinalPeriod, HarmonicSource, TimeSchemeConfig, extract_harmonics,
                        rfft_to_full, run_to_quasistationary)
from .spectral import RadialGrid, VectorFourierField, l2_norm, max_abs_vector

DEFAULT_EPSILONS = (0.1, 0.075, 0.05, 0.0375, 0.025)


def bessel_coefficients(lam: int, k: float, r_inner: float):
    """Coefficients (a, b) of a J_lam(kr) + b Y_lam(kr) in the benchmark pressure."""
    x = k * r_inner
    a = special.yv(lam - 1, x) - special.yv(lam + 1, x)
    b = special.jv(lam + 1, x) - special.jv(lam - 1, x)
    return a, b


def radial_profile(lam: int, k: float, r_inner: float, r, derivative: int = 0):
    """A(r) = a J_lam(kr) + b Y_lam(kr) or its first derivative in r."""
    a, b = bessel_coefficients(lam, k, r_inner)
    r = np.asarray(r, dtype=float)
    if derivative == 0:
        return a * special.jv(lam, k * r) + b * special.yv(lam, k * r)
    return k * (a * special.jvp(lam, k * r) + b * special.yvp(lam, k * r))


def _outer_flux(k, lam, domain):
    return radial_profile(lam, k, domain.r_inner, domain.r_outer, 1) / k


def find_radial_wavenumber(lambda_order: int = 4, domain: AnnulusDomain = AnnulusDomain(),
                           lo: float = 0.1, hi: float = 20.0, samples: int = 400) -> float:
    """Smallest k > 0 with a vanishing radial derivative of the benchmark
    pressure at r = R2 (at r = R1 it vanishes by construction)."""
    if lambda_order < 0:
        raise ValueError("lambda_order must be nonnegative")
    ks = np.linspace(lo, hi, samples)
    vals = _outer_flux(ks, lambda_order, domain)
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    for i in idx:
        a, b = ks[i], ks[i + 1]
        # the cross product has poles only where both coefficients blow up,
        # which does not happen for k > 0; still reject spurious jumps
        if abs(vals[i]) + abs(vals[i + 1]) > 1e6:
            continue
        return float(optimize.brentq(_outer_flux, a, b, args=(lambda_order, domain),
                                     xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))
    raise NoBracket(f"no sign change of the outer flux in ({lo}, {hi})")


@dataclass(frozen=True)
class BenchmarkSpec:
    """Ring benchmark with f = (eps^2 f0 + eps^3 f1) cos(w t).

    f0 = grad(A(r) cos(lam phi)) is the real part of the gradient of the
    Bessel combination; f1 is the bubble (R1^2 - r^2)(R2^2 - r^2)(1, 1).
    ``source_scale`` multiplies the whole source.
    """

    lambda_order: int = 4
    radial_wavenumber: Optional[float] = None
    r_inner: float = 1.5
    r_outer: float = 2.0
    omega: float = 15.0
    c: float = 1.0
    nu0: float = 1.0
    epsilon_list: tuple = DEFAULT_EPSILONS
    f1_kind: str = "bubble"
    source_scale: float = 1.0

    def __post_init__(self):
        if self.f1_kind not in ("bubble", "none"):
            raise ValueError("f1_kind must be 'bubble' or 'none'")
        if self.radial_wavenumber is None:
            object.__setattr__(self, "radial_wavenumber",
                               find_radial_wavenumber(self.lambda_order, self.domain))
        if not self.radial_wavenumber > 0:
            raise ValueError("radial wavenumber must be positive")
        object.__setattr__(self, "epsilon_list", tuple(float(e) for e in self.epsilon_list))

    @property
    def domain(self) -> AnnulusDomain:
        return AnnulusDomain(self.r_inner, self.r_outer)

    def to_dict(self):
        return asdict(self)


def f0_field(spec: BenchmarkSpec, grid: RadialGrid, m_max: int) -> VectorFourierField:
    lam, k = spec.lambda_order, spec.radial_wavenumber
    if m_max < lam:
        raise ValueError(f"m_max={m_max} cannot hold the source mode {lam}")

    def polar(r, th):
        A = radial_profile(lam, k, spec.r_inner, r)
        dA = radial_profile(lam, k, spec.r_inner, r, 1)
        return dA * np.cos(lam * th), -lam * A / r * np.sin(lam * th)
    return VectorFourierField.from_function(grid, m_max, polar, n_theta=4 * m_max + 4) * spec.source_scale


def bubble(spec: BenchmarkSpec, r):
    return (spec.r_inner**2 - r**2) * (spec.r_outer**2 - r**2)


def f1_field(spec: BenchmarkSpec, grid: RadialGrid, m_max: int) -> VectorFourierField:
    if spec.f1_kind == "none":
        return VectorFourierField.zeros(grid, m_max)

    def cart(x, y):
        b = bubble(spec, np.hypot(x, y))
        return b, b
    f = VectorFourierField.from_cartesian(grid, m_max, cart, n_theta=4 * m_max + 4)
    # the bubble vanishes exactly at the wall nodes
    for comp in (f.radial, f.angular):
        comp.values[:, [0, -1]] = 0.0
    return f * spec.source_scale


def build_benchmark_source(spec: BenchmarkSpec, epsilon: float | None = None) -> SourceSpec:
    """Source parts as factories on any grid; epsilon enters at solve time."""
    return SourceSpec(f0=lambda g, M: f0_field(spec, g, M),
                      f1=lambda g, M: f1_field(spec, g, M),
                      f0_curl_free=True)


def source_sup_norm(spec: BenchmarkSpec, epsilon: float, grid: RadialGrid, m_max: int = 8,
                    n_theta: int = 256) -> float:
    """max |f| over the grid nodes and n_theta angles."""
    f = build_benchmark_source(spec).total(epsilon, grid, m_max)
    return max_abs_vector(f, n_theta)


def scale_for_sup_norm(spec: BenchmarkSpec, epsilon: float, target: float,
                       grid: RadialGrid | None = None) -> float:
    """source_scale giving max |f| = target at the given epsilon."""
    grid = grid or RadialGrid(spec.r_inner, spec.r_outer, 64)
    unit = BenchmarkSpec(**{**asdict(spec), "source_scale": 1.0})
    return target / source_sup_norm(unit, epsilon, grid)


# sup norms of f quoted with the convergence figure, keyed by nu = eps^2
CAPTION_SUP_NORMS = {3.6e-3: 0.163, 4e-4: 0.018}


def caption_source_scale(spec: BenchmarkSpec | None = None) -> float:
    """Mean source_scale reproducing the quoted sup norms (about 45.5)."""
    spec = spec or BenchmarkSpec()
    scales = [scale_for_sup_norm(spec, math.sqrt(nu / spec.nu0), target)
              for nu, target in CAPTION_SUP_NORMS.items()]
    return float(np.mean(scales))


# --- reference comparisons ---------------------------------------------------

def _model_pressure_samples(approx, times, m_max):
    """Full-layout pressure coefficients of the model at the given times."""
    out = []
    for t in times:
        out.append(pressure_modes_at(approx, float(t), m_max).values)
    return np.stack(out)


def _space_time_l2(full_samples, grid):
    """sqrt(mean over samples of the L2(Omega)^2 norm); trapezoid over a period."""
    sq = 2 * np.pi * np.einsum("smj,j->s", np.abs(full_samples) ** 2, grid.quadrature_weights)
    return float(np.sqrt(np.mean(sq)))


def reference_pressure_samples(reference: FinalPeriod) -> np.ndarray:
    return np.stack([rfft_to_full(s) for s in reference.pressure_samples()])


def modelling_error(reference: FinalPeriod, approx: HarmonicSolution) -> float:
    """||p - p^{eps,N}|| / ||p|| in L2 over the last period and the annulus."""
    if not reference.grid.same_as(approx.grid):
        raise GridMismatch("reference and model use different radial grids")
    if not np.isclose(reference.omega, approx.omega):
        raise GridMismatch("reference and model use different frequencies")
    ref = reference_pressure_samples(reference)
    M = reference.m_max
    mod = _model_pressure_samples(approx, reference.times, M)
    denom = _space_time_l2(ref, reference.grid)
    if denom == 0:
        raise ValueError("reference pressure vanishes")
    return _space_time_l2(ref - mod, reference.grid) / denom


def fit_slope(eps, err) -> float:
    x, y = np.log(np.asarray(eps, float)), np.log(np.asarray(err, float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class ErrorReport:
    epsilons: list
    orders: list
    errors: dict          # order -> list of relative errors (one per epsilon)
    slopes: dict          # order -> fitted slope, empty with fewer than 3 epsilons
    harmonic_norms: dict  # epsilon -> {"reference": {k: norm}, "model": {k: norm}}
    runtimes: dict        # epsilon -> {"reference": s, order: s}
    stationary: dict      # epsilon -> bool
    notes: list = dc_field(default_factory=list)

    def rows(self):
        for i, e in enumerate(self.epsilons):
            for N in self.orders:
                yield {"epsilon": e, "order": N, "error": self.errors[N][i],
                       "runtime": self.runtimes[e].get(N, float("nan")),
                       "stationary": self.stationary[e]}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["epsilon", "order", "error", "runtime", "stationary"])
            w.writeheader()
            for row in self.rows():
                w.writerow(row)

    def summary(self) -> dict:
        return {"epsilons": self.epsilons, "orders": self.orders,
                "errors": {str(k): v for k, v in self.errors.items()},
                "slopes": {str(k): v for k, v in self.slopes.items()},
                "harmonic_norms": {repr(e): v for e, v in self.harmonic_norms.items()},
                "stationary": {repr(e): v for e, v in self.stationary.items()},
                "notes": self.notes}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, default=float)


def reference_scheme(spec: BenchmarkSpec, epsilon: float, **overrides) -> TimeSchemeConfig:
    """Desk-scale reference settings for one epsilon.

    Chebyshev clustering alone puts enough nodes in the wall layers for
    the default sweep; smaller epsilon get more radial nodes.
    """
    nu = spec.nu0 * epsilon**2
    n_r = 48 if epsilon >= 0.05 else 64
    base = dict(dt=2 * np.pi / spec.omega / 1024, n_periods=15, nu=nu, c=spec.c,
                omega=spec.omega, r_inner=spec.r_inner, r_outer=spec.r_outer,
                n_r=n_r, m_max=12)
    base.update(overrides)
    return TimeSchemeConfig(**base)


def model_config(spec: BenchmarkSpec, epsilon: float, order: int, scheme: TimeSchemeConfig,
                 **overrides) -> ModelConfig:
    base = dict(epsilon=epsilon, nu0=spec.nu0, omega=spec.omega, c=spec.c, order=order,
                m_max=scheme.m_max, n_r=scheme.n_r, r_inner=spec.r_inner,
                r_outer=spec.r_outer, stretch=scheme.stretch)
    base.update(overrides)
    return ModelConfig(**base)


def run_reference(spec: BenchmarkSpec, epsilon: float, scheme: TimeSchemeConfig | None = None,
                  initial: str = "periodic_orbit", **kw) -> FinalPeriod:
    scheme = scheme or reference_scheme(spec, epsilon)
    grid = scheme.grid()
    f = build_benchmark_source(spec).total(epsilon, grid, scheme.m_max)
    return run_to_quasistationary(scheme, HarmonicSource(f, spec.omega), initial, **kw)


def harmonic_norms_reference(reference: FinalPeriod, k_max: int = 3) -> dict:
    h = extract_harmonics(reference, k_max)
    return {k: l2_norm(v) for k, v in h.items()}


def mode_energy_table(reference: FinalPeriod, approx: HarmonicSolution, k_max: int = 3) -> dict:
    """L2(Omega) norms of the pressure harmonics k = 0..k_max.

    Model entries exist only for harmonics the model carries; p_0 norms
    use the real field and p_k (k >= 1) the complex amplitude, in the
    convention p = Re sum p_k exp(-i k w t).
    """
    ref = harmonic_norms_reference(reference, k_max)
    model = {int(k): l2_norm(p) for k, p in approx.pressure.items() if k <= k_max}
    rows = []
    for k in range(k_max + 1):
        r, m = ref[k], model.get(k)
        rows.append({"k": k, "reference": r, "model": m,
                     "relative_difference": None if m is None or r == 0 else abs(m - r) / r})
    return {"rows": rows, "reference": ref, "model": model}


def convergence_study(spec: BenchmarkSpec, orders=(0, 1, 2), form: str = "pressure",
                      scheme_overrides: dict | None = None, model_overrides: dict | None = None,
                      initial: str = "periodic_orbit", out_dir=None,
                      progress=None) -> ErrorReport:
    """Reference run per epsilon, every requested model order, relative errors and slopes."""
    eps_list = list(spec.epsilon_list)
    errors = {N: [] for N in orders}
    norms, runtimes, stationary = {}, {}, {}
    notes = []
    src = build_benchmark_source(spec)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    for eps in eps_list:
        scheme = reference_scheme(spec, eps, **(scheme_overrides or {}))
        t0 = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NotStationary)
            ref = run_reference(spec, eps, scheme, initial)
        stationary[eps] = not any(issubclass(w.category, NotStationary) for w in caught)
        if not stationary[eps]:
            notes.append(f"epsilon={eps}: reference NotStationary "
                         f"(change {ref.diagnostics['period_change']:.2e})")
        runtimes[eps] = {"reference": time.perf_counter() - t0}
        sol2 = None
        for N in orders:
            t1 = time.perf_counter()
            cfg = model_config(spec, eps, N, scheme, **(model_overrides or {}))
            sol = solve_model(cfg, src, form, grid=ref.grid)
            runtimes[eps][N] = time.perf_counter() - t1
            errors[N].append(modelling_error(ref, sol))
            if N == 2:
                sol2 = sol
        norms[eps] = {"reference": harmonic_norms_reference(ref, 3)}
        if sol2 is not None:
            norms[eps]["model"] = {int(k): l2_norm(p) for k, p in sol2.pressure.items()}
        if progress:
            progress(eps, {N: errors[N][-1] for N in orders})
        if out_dir is not None:
            ref.save(Path(out_dir) / f"reference_eps_{eps:g}.npz")
    slopes = {}
    if len(eps_list) >= 3:
        slopes = {N: fit_slope(eps_list, errors[N]) for N in orders}
    else:
        notes.append("fewer than three epsilon values: slopes not fitted")
    report = ErrorReport(eps_list, list(orders), errors, slopes, norms, runtimes, stationary, notes)
    if out_dir is not None:
        out = Path(out_dir)
        report.write_csv(out / "errors.csv")
        report.write_json(out / "summary.json")
    return report
