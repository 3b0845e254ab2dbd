"""Command line entry point: solve, reference, converge, modes, wavenumber.

Every data-producing subcommand writes CSV files plus a ``manifest.json``
echoing the resolved configuration.  Failures print a JSON object with
``error`` and ``message`` keys to stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import (BenchmarkSpec, caption_source_scale, convergence_study, model_config,
                        mode_energy_table, reference_scheme, run_reference,
                        build_benchmark_source, find_radial_wavenumber, scale_for_sup_norm,
                        source_sup_norm)
from .errors import AcousticsError, ConfigError, NotStationary
from .geometry import AnnulusDomain
from .models import ModelConfig, solve_model
from .reference import TimeSchemeConfig, extract_harmonics

SECTIONS = ("benchmark", "model", "scheme")
TOP_KEYS = {"epsilon", "orders", "form", "initial", "source_sup_norm", "caption_scale",
            "k_max"} | set(SECTIONS)


def _known(cls):
    return {f.name for f in fields(cls)}


def load_config(path) -> dict:
    """Read a JSON config and check its keys against the config types."""
    cfg = {}
    if path is not None:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for section, cls in zip(SECTIONS, (BenchmarkSpec, ModelConfig, TimeSchemeConfig)):
        bad = set(cfg.get(section, {})) - _known(cls)
        if bad:
            raise ConfigError(f"unknown keys in '{section}': {sorted(bad)}")
    return cfg


def resolve(cfg: dict) -> dict:
    """Fill defaults; returns benchmark spec, epsilon and section overrides."""
    bench = dict(cfg.get("benchmark", {}))
    if "epsilon_list" in bench:
        bench["epsilon_list"] = tuple(bench["epsilon_list"])
    spec = BenchmarkSpec(**bench)
    eps = float(cfg.get("epsilon", spec.epsilon_list[0]))
    if not eps > 0:
        raise ConfigError("epsilon must be positive")
    if "source_sup_norm" in cfg:
        scale = scale_for_sup_norm(spec, eps, float(cfg["source_sup_norm"]))
        spec = BenchmarkSpec(**{**asdict(spec), "source_scale": scale})
    elif cfg.get("caption_scale"):
        spec = BenchmarkSpec(**{**asdict(spec), "source_scale": caption_source_scale(spec)})
    return {"spec": spec, "epsilon": eps, "model": dict(cfg.get("model", {})),
            "scheme": dict(cfg.get("scheme", {})),
            "form": cfg.get("form", "pressure"),
            "initial": cfg.get("initial", "periodic_orbit"),
            "orders": list(cfg.get("orders", [0, 1, 2])),
            "k_max": int(cfg.get("k_max", 3))}


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, (np.ndarray, tuple)):
        return list(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _clean(obj):
    """Non-finite floats become null so the output stays valid JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not np.isfinite(obj):
        return None
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, default=_jsonable, sort_keys=True)


def write_manifest(out: Path, command: str, resolved: dict, extra: dict | None = None):
    spec = resolved["spec"]
    man = {"command": command, "version": __version__, "benchmark": asdict(spec),
           "epsilon": resolved["epsilon"], "model_overrides": resolved["model"],
           "scheme_overrides": resolved["scheme"], "form": resolved["form"],
           "initial": resolved["initial"], "orders": resolved["orders"]}
    man.update(extra or {})
    write_json(out / "manifest.json", man)


def write_modes_csv(path, fields_by_k: dict, grid):
    """One row per (harmonic, angular mode, radial node)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "m", "r", "re", "im"])
        for k in sorted(fields_by_k):
            f = fields_by_k[k]
            for i, m in enumerate(f.modes):
                for j, r in enumerate(grid.nodes):
                    v = f.values[i, j]
                    w.writerow([k, int(m), repr(float(r)), repr(float(v.real)), repr(float(v.imag))])


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- subcommands -----------------------------------------------------------

def cmd_solve(args) -> dict:
    res = resolve(load_config(args.config))
    spec, eps = res["spec"], res["epsilon"]
    order = args.order if args.order is not None else res["model"].pop("order", 2)
    res["model"].pop("order", None)
    form = args.form or res["form"]
    res["form"] = form
    cfg = ModelConfig(**{**dict(epsilon=eps, nu0=spec.nu0, omega=spec.omega, c=spec.c,
                                r_inner=spec.r_inner, r_outer=spec.r_outer),
                         **res["model"], "order": order})
    sol = solve_model(cfg, build_benchmark_source(spec), form)
    out = _out_dir(args.out)
    write_modes_csv(out / "pressure_harmonics.csv", sol.pressure, sol.grid)
    norms = sol.norms()
    sup = source_sup_norm(spec, eps, sol.grid)
    write_json(out / "norms.json", norms)
    write_manifest(out, "solve", res, {"model": asdict(cfg), "source_sup_norm": sup,
                                       "info": sol.info})
    return {"out": str(out), "pressure_norms": norms["pressure"], "source_sup_norm": sup}


def _run_reference(res, periods=None):
    spec, eps = res["spec"], res["epsilon"]
    over = dict(res["scheme"])
    if periods is not None:
        over["n_periods"] = periods
    scheme = reference_scheme(spec, eps, **over)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotStationary)
        ref = run_reference(spec, eps, scheme, res["initial"])
    return scheme, ref, bool(ref.diagnostics["stationary"])


def cmd_reference(args) -> dict:
    res = resolve(load_config(args.config))
    scheme, ref, stationary = _run_reference(res, args.periods)
    out = _out_dir(args.out)
    ref.save(out / "final_period.npz")
    k_max = res["k_max"]
    write_modes_csv(out / "pressure_harmonics.csv", extract_harmonics(ref, k_max), ref.grid)
    diag = {k: v for k, v in ref.diagnostics.items() if k != "wall_velocity"}
    write_manifest(out, "reference", res, {"scheme": scheme.to_dict(), "stationary": stationary,
                                           "diagnostics": diag})
    return {"out": str(out), "stationary": stationary,
            "period_change": ref.diagnostics.get("period_change")}


def cmd_converge(args) -> dict:
    res = resolve(load_config(args.config))
    spec = res["spec"]
    out = _out_dir(args.out)
    progress = None
    if not args.quiet:
        def progress(eps, errs):
            print(f"eps={eps:g} " + " ".join(f"N{N}={e:.3e}" for N, e in errs.items()),
                  file=sys.stderr, flush=True)
    t0 = time.perf_counter()
    report = convergence_study(spec, tuple(res["orders"]), res["form"],
                               scheme_overrides=res["scheme"], model_overrides=res["model"],
                               initial=res["initial"], out_dir=out, progress=progress)
    write_manifest(out, "converge", res, {"runtime": time.perf_counter() - t0})
    return {"out": str(out), "slopes": {str(k): v for k, v in report.slopes.items()}}


def cmd_modes(args) -> dict:
    res = resolve(load_config(args.config))
    spec, eps = res["spec"], res["epsilon"]
    scheme, ref, stationary = _run_reference(res)
    cfg = model_config(spec, eps, 2, scheme, **res["model"])
    sol = solve_model(cfg, build_benchmark_source(spec), res["form"], grid=ref.grid)
    table = mode_energy_table(ref, sol, res["k_max"])
    out = _out_dir(args.out)
    with open(out / "modes.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["k", "reference", "model", "relative_difference"])
        w.writeheader()
        for row in table["rows"]:
            w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    sup = source_sup_norm(spec, eps, ref.grid)
    write_manifest(out, "modes", res, {"scheme": scheme.to_dict(), "model": asdict(cfg),
                                       "stationary": stationary, "source_sup_norm": sup})
    return {"out": str(out), "rows": table["rows"], "stationary": stationary}


def cmd_wavenumber(args) -> dict:
    k = find_radial_wavenumber(args.lam, AnnulusDomain(args.r1, args.r2))
    return {"lambda": args.lam, "r1": args.r1, "r2": args.r2, "wavenumber": k}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harmonic-acoustics", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one effective model")
    s.add_argument("--order", type=int, choices=(0, 1, 2))
    s.add_argument("--form", choices=("pressure", "velocity"))
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("reference", help="time-domain reference run")
    r.add_argument("--config")
    r.add_argument("--periods", type=int)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reference)

    c = sub.add_parser("converge", help="modelling error sweep over epsilon")
    c.add_argument("--config")
    c.add_argument("--out", required=True)
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_converge)

    m = sub.add_parser("modes", help="per-harmonic norms, reference against order 2")
    m.add_argument("--config")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_modes)

    w = sub.add_parser("wavenumber", help="Bessel cross-product root")
    w.add_argument("--lambda", dest="lam", type=int, default=4)
    w.add_argument("--r1", type=float, default=1.5)
    w.add_argument("--r2", type=float, default=2.0)
    w.set_defaults(func=cmd_wavenumber)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except (AcousticsError, ValueError, TypeError, OSError) as exc:
        err = exc.to_dict() if isinstance(exc, AcousticsError) else {
            "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 2
    print(json.dumps(_clean(result), default=_jsonable, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
