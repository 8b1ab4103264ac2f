"""Command-line experiment runner.

    photocount analytic   --em 1 --is 1 --sigma 1 --tmax 5 --points 500
    photocount pde        --em 1 --is 1 --sigma 1 --n-cells 2048 --dt 1e-3 --tmax 5
    photocount sample-fpt --em 1 --is 1 --sigma 1 --n 1000 --seed 42
    photocount detect     --em 1 --is 2 --sigma 1 --horizon 100
    photocount coincide   --mean 1 --relaxation-time 20 --amplitude 0.5 --rho 0.8
    photocount verify     [--quick]

Every option may also come from a JSON file given with ``--config``;
command-line flags win. Exit status: 0 success, 1 failed verification,
2 invalid configuration, 3 numerical precondition not met.
"""

from __future__ import annotations

import argparse
import json
import sys

import jsonschema
from jsonschema.exceptions import best_match
import numpy as np

from . import analytic_fpt as af
from .analytic_fpt import FptLaw
from .core_model import Constant, DetectorParams, ModulatedPair, signal_from_json, signal_to_json
from .errors import ConfigurationError, DomainError, InfiniteMeanError, UsageError
from .fokker_planck import PdeGrid, numeric_cdf, solve
from .io import write_csv, write_train
from .montecarlo import RunConfig, sample_fpt, simulate_coincidence, simulate_detector
from .stats import (
    coincidence_rate,
    cross_correlation,
    empirical_rate,
    record,
    shuffled_coincidence_rate,
)

EXIT_OK, EXIT_FAILED, EXIT_SCHEMA, EXIT_NUMERIC = 0, 1, 2, 3

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_COUNT = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}
_OUT = {"type": ["string", "null"]}

_SIGNAL = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {
            "properties": {"kind": {"const": "constant"}, "intensity": _NONNEG},
            "required": ["intensity"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "piecewise"},
                "breakpoints": {"type": "array", "items": {"type": "number"}},
                "levels": {"type": "array", "items": _NONNEG, "minItems": 1},
            },
            "required": ["breakpoints", "levels"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "modulated_pair"},
                "mean": _NONNEG,
                "relaxation_time": _POS,
                "amplitude": _NONNEG,
                "cross_correlation": {"type": "number", "minimum": -1, "maximum": 1},
                "grid_step": {"oneOf": [_POS, {"type": "null"}]},
            },
            "required": ["mean", "relaxation_time", "amplitude", "cross_correlation"],
            "additionalProperties": False,
        },
    ],
}

_LAW = {"em": _POS, "is": _NONNEG, "sigma": _POS}
_DETECTOR = {"em": _POS, "sigma": _POS, "area": _POS, "dead_time": _NONNEG}
_RUN = {"seed": _SEED, "step": _POS, "horizon": _POS}

SCHEMAS = {
    "analytic": {**_LAW, "tmax": _POS, "points": _COUNT, "seed": _SEED, "out": _OUT},
    "pde": {
        **_LAW,
        "tmax": _POS,
        "n_cells": {"type": "integer", "minimum": 16},
        "dt": _POS,
        "rows": _COUNT,
        "seed": _SEED,
        "out": _OUT,
        "cdf_out": _OUT,
    },
    "sample-fpt": {**_LAW, **_RUN, "n": _COUNT, "out": _OUT},
    "detect": {
        **_DETECTOR,
        **_RUN,
        "is": _NONNEG,
        "signal": _SIGNAL,
        "format": {"enum": ["csv", "json"]},
        "out": _OUT,
    },
    "coincide": {
        **_DETECTOR,
        **_RUN,
        "mean": _NONNEG,
        "relaxation_time": _POS,
        "amplitude": _NONNEG,
        "rho": {"type": "number", "minimum": -1, "maximum": 1},
        "window": _POS,
        "delay": {"type": "number"},
        "shared_noise": {"type": "boolean"},
        "format": {"enum": ["csv", "json"]},
        "out": _OUT,
        "out2": _OUT,
        "paths_out": _OUT,
    },
    "verify": {"quick": {"type": "boolean"}},
}

DEFAULTS = {
    "analytic": {"em": 1.0, "is": 1.0, "sigma": 1.0, "tmax": 5.0, "points": 500},
    "pde": {"em": 1.0, "is": 1.0, "sigma": 1.0, "tmax": 5.0, "n_cells": 2048, "dt": 1e-3, "rows": 50},
    "sample-fpt": {"em": 1.0, "is": 1.0, "sigma": 1.0, "seed": 0, "step": 1e-3, "horizon": 1e3, "n": 1000},
    "detect": {
        "em": 1.0, "sigma": 1.0, "area": 1.0, "dead_time": 0.0, "is": 1.0,
        "seed": 0, "step": 1e-3, "horizon": 100.0, "format": "csv",
    },
    "coincide": {
        "em": 1.0, "sigma": 1.0, "area": 1.0, "dead_time": 0.0,
        "seed": 0, "step": 1e-3, "horizon": 1e4,
        "mean": 1.0, "relaxation_time": 20.0, "amplitude": 0.5, "rho": 0.8,
        "window": 0.1, "delay": 0.0, "shared_noise": False, "format": "csv",
    },
    "verify": {"quick": False},
}


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _field_path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def validate(command: str, cfg: dict) -> None:
    schema = {"type": "object", "properties": SCHEMAS[command], "additionalProperties": False}
    err = best_match(jsonschema.Draft202012Validator(schema).iter_errors(cfg))
    if err is not None:
        path = list(err.absolute_path)
        if err.validator == "additionalProperties" and not path:
            extra = sorted(set(cfg) - set(SCHEMAS[command]))
            raise ConfigError(extra[0] if extra else "<root>", "unknown option")
        raise ConfigError(_field_path(path), err.message)


def load_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    if args.config:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("--config", str(exc)) from None
        if not isinstance(from_file, dict):
            raise ConfigError("<root>", "config file must hold a JSON object")
        cfg.update(from_file)
    for key, value in vars(args).items():
        if key in ("command", "config", "func") or value is None:
            continue
        if key == "signal":
            try:
                value = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ConfigError("signal", f"not valid JSON: {exc}") from None
        cfg[key.rstrip("_")] = value
    validate(command, cfg)
    return cfg


def _build(path: str, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _law(cfg: dict) -> FptLaw:
    return _build("em/is/sigma", FptLaw, cfg["em"], cfg["is"], cfg["sigma"])


def _run_config(cfg: dict) -> RunConfig:
    return _build("step", RunConfig, cfg["seed"], cfg["step"], cfg["horizon"])


def _detector(cfg: dict) -> DetectorParams:
    return _build("em/sigma", DetectorParams, cfg["em"], cfg["sigma"], cfg["area"], cfg["dead_time"])


def cmd_analytic(cfg: dict) -> int:
    law = _law(cfg)
    t = np.linspace(cfg["tmax"] / cfg["points"], cfg["tmax"], cfg["points"])
    rows = zip(t, af.cdf(law, t), af.pdf(law, t))
    write_csv(cfg.get("out"), "analytic", cfg, ["t", "cdf", "pdf"], rows)
    try:
        mean = af.mean_fpt(law)
    except InfiniteMeanError:
        mean = None
    summary = {"rate": af.rate(law), "mean_fpt": mean, "median_fpt": af.median_fpt(law)}
    print(json.dumps(summary), file=sys.stderr if cfg.get("out") in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_pde(cfg: dict) -> int:
    law = _law(cfg)
    grid = _build("n_cells", PdeGrid.for_law, law, cfg["n_cells"], cfg["dt"], cfg["tmax"])
    n_steps = grid.n_steps
    sol = solve(law, grid, store_every=max(1, n_steps // cfg["rows"]))
    energies = grid.energies
    rows = ((t, e, r) for t, row in zip(sol.times, sol.densities) for e, r in zip(energies, row))
    write_csv(cfg.get("out"), "pde", cfg, ["t", "E", "rho"], rows)
    if cfg.get("cdf_out"):
        ts = sol.times
        write_csv(
            cfg["cdf_out"], "pde", cfg, ["t", "cdf_pde", "cdf_analytic"],
            ((t, numeric_cdf(sol, t), af.cdf(law, t)) for t in ts),
        )
    return EXIT_OK


def cmd_sample_fpt(cfg: dict) -> int:
    law = _law(cfg)
    x = sample_fpt(law, _run_config(cfg), cfg["n"])
    write_csv(cfg.get("out"), "sample-fpt", cfg, ["t"], ((v,) for v in x))
    finite = x[np.isfinite(x)]
    se = float(finite.std(ddof=1) / np.sqrt(len(finite))) if len(finite) > 1 else None
    mean = float(finite.mean()) if len(finite) else float("nan")
    _summary(cfg, record(mean, se, len(finite)))
    return EXIT_OK


def _summary(cfg: dict, line: str) -> None:
    print(line, file=sys.stderr if cfg.get("out") in (None, "-") else sys.stdout)


def cmd_detect(cfg: dict) -> int:
    if "signal" in cfg:
        signal = _build("signal", signal_from_json, cfg["signal"])
    else:
        signal = _build("is", Constant, cfg["is"])
    cfg = {**cfg, "signal": signal_to_json(signal)}
    train = simulate_detector(signal, _detector(cfg), _run_config(cfg))
    write_train(cfg.get("out"), "detect", cfg, train, cfg["format"])
    _summary(cfg, empirical_rate(train).to_json())
    return EXIT_OK


def cmd_coincide(cfg: dict) -> int:
    model = _build(
        "mean/relaxation_time/amplitude/rho",
        ModulatedPair, cfg["mean"], cfg["relaxation_time"], cfg["amplitude"], cfg["rho"],
    )
    p = _detector(cfg)
    run = simulate_coincidence(model, p, p, _run_config(cfg), shared_noise=cfg["shared_noise"])
    a, b = run
    if cfg.get("out"):
        write_train(cfg["out"], "coincide", cfg, a, cfg["format"])
    if cfg.get("out2"):
        write_train(cfg["out2"], "coincide", cfg, b, cfg["format"])
    if cfg.get("paths_out"):
        path = run.path
        write_csv(cfg["paths_out"], "coincide", cfg, ["t", "I1", "I2"], zip(path.times, path.first, path.second))
    coinc = coincidence_rate(a, b, cfg["delay"], cfg["window"])
    base = shuffled_coincidence_rate(a, b, cfg["delay"], cfg["window"], seed=cfg["seed"])
    i1, i2 = run.path.first, run.path.second
    lag_corr = cross_correlation(i1, i2, cfg["delay"], run.path.step)
    print(json.dumps({
        "singles": [json.loads(empirical_rate(a).to_json()), json.loads(empirical_rate(b).to_json())],
        "coincidence": json.loads(coinc.to_json()),
        "shuffled_baseline": json.loads(base.to_json()),
        "excess_ratio": coinc.rate / base.rate if base.rate > 0 else None,
        "intensity_ratio": lag_corr / (float(np.mean(i1)) * float(np.mean(i2))),
        "valid": run.valid,
        "warnings": list(run.warnings),
    }))
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    from .verify import CHECKS, timed

    print(f"{'#':>2}  {'status':6}  {'seconds':>8}  check", flush=True)
    n_pass = 0
    for check in CHECKS:
        r = timed(check, cfg["quick"])
        n_pass += r.passed
        print(f"{r.number:>2}  {'PASS' if r.passed else 'FAIL':6}  {r.seconds:8.1f}  {r.name}: {r.detail}", flush=True)
    print(f"{n_pass}/{len(CHECKS)} checks passed" + (" (quick mode)" if cfg["quick"] else ""))
    return EXIT_OK if n_pass == len(CHECKS) else EXIT_FAILED


def _law_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--em", type=float, help="threshold energy E_m")
    p.add_argument("--is", dest="is_", type=float, help="signal intensity I_s")
    p.add_argument("--sigma", type=float, help="zeropoint noise scale")


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--step", type=float, help="simulation time step")
    p.add_argument("--horizon", type=float)


def _detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--em", type=float, help="threshold energy E_m")
    p.add_argument("--sigma", type=float, help="zeropoint noise scale")
    p.add_argument("--area", type=float)
    p.add_argument("--dead-time", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photocount", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form cdf and pdf on a time grid")
    _law_flags(p)
    p.add_argument("--tmax", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("pde", help="finite-difference density (t, E, rho)")
    _law_flags(p)
    p.add_argument("--tmax", type=float)
    p.add_argument("--n-cells", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--rows", type=int, help="approximate number of time snapshots to write")
    p.add_argument("--out")
    p.add_argument("--cdf-out", help="also write t, numeric cdf, analytic cdf")
    p.set_defaults(func=cmd_pde)

    p = sub.add_parser("sample-fpt", help="Monte Carlo first-passage times")
    _law_flags(p)
    _run_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample_fpt)

    p = sub.add_parser("detect", help="simulate one detector's count train")
    _detector_flags(p)
    _run_flags(p)
    p.add_argument("--is", dest="is_", type=float, help="constant signal intensity")
    p.add_argument("--signal", help="signal model as a JSON object (overrides --is)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("coincide", help="two detectors on a correlated pair of beams")
    _detector_flags(p)
    _run_flags(p)
    p.add_argument("--mean", type=float)
    p.add_argument("--relaxation-time", type=float)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--rho", type=float, help="cross-correlation of the two beams")
    p.add_argument("--window", type=float)
    p.add_argument("--delay", type=float)
    p.add_argument("--shared-noise", action="store_true", default=None)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="first detector's train")
    p.add_argument("--out2", help="second detector's train")
    p.add_argument("--paths-out", help="intensity paths (t, I1, I2)")
    p.set_defaults(func=cmd_coincide)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--quick", action="store_true", default=None)
    p.set_defaults(func=cmd_verify)

    for action in sub.choices.values():
        action.add_argument("--config", help="JSON file with options; flags override it")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args)
        return args.func(cfg)
    except ConfigError as exc:
        print(f"configuration error at {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ConfigurationError as exc:
        print(f"numerical precondition failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, UsageError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
