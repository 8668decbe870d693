"""Command line front end.

Subcommands: ``run`` (simulate a preset or JSON config, write a CSV trace
and a metrics JSON), ``roots`` (design roots of the gain characteristic
polynomial), ``gains`` (injection gains for a given discrete pole set) and
``certify`` (frozen-state Lyapunov certificates over a |w1| grid).

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
The environment variable ``SMDIFF_SEED`` overrides every Gaussian noise
seed in the resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analysis, harness, poly, signals, synthesis
from .differentiators import (
    DifferentiatorParams,
    ExplicitRoots,
    FromCharPoly,
    RepeatedRoot,
    resolve_roots,
)
from .errors import (
    ConfigError,
    Diverged,
    SmdiffError,
    UnknownPreset,
    UnstableMatrix,
    UnstableRoot,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

_CONFIG_KEYS = {"params", "signal", "noise", "t0", "t_end", "variant", "record_stride"}
_PARAMS_KEYS = {"n", "n_f", "tau", "gains", "lipschitz", "root_spec", "w1_floor"}


# ---------------------------------------------------------------------------
# config (de)serialization


def _fail(path: str, reason: str):
    raise ConfigError(f"{path}: {reason}")


def _expect_keys(obj: dict, allowed: set, path: str):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            _fail(path, f"unknown key {key!r}")


def _number(obj, path, positive=False):
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        _fail(path, "expected a number")
    if positive and not obj > 0:
        _fail(path, "must be positive")
    return float(obj)


def _integer(obj, path, minimum=None):
    if not isinstance(obj, int) or isinstance(obj, bool):
        _fail(path, "expected an integer")
    if minimum is not None and obj < minimum:
        _fail(path, f"must be >= {minimum}")
    return obj


def parse_root_spec(obj, path="root_spec"):
    _expect_keys(obj, {"kind", "value", "roots"}, path)
    kind = obj.get("kind")
    if kind == "from_charpoly":
        return FromCharPoly()
    if kind == "repeated":
        value = _number(obj.get("value"), f"{path}.value")
        return RepeatedRoot(value)
    if kind == "explicit":
        roots = obj.get("roots")
        if not isinstance(roots, list) or not roots:
            _fail(f"{path}.roots", "expected a non-empty list of [re, im] pairs")
        out = []
        for i, pair in enumerate(roots):
            if not isinstance(pair, list) or len(pair) != 2:
                _fail(f"{path}.roots[{i}]", "expected an [re, im] pair")
            out.append(complex(_number(pair[0], f"{path}.roots[{i}][0]"),
                               _number(pair[1], f"{path}.roots[{i}][1]")))
        return ExplicitRoots(tuple(out))
    _fail(f"{path}.kind", f"unknown root spec kind {kind!r}")


def parse_signal(obj, path="signal"):
    _expect_keys(obj, {"kind", "coeffs", "rate", "terms", "poly"}, path)
    kind = obj.get("kind")
    if kind == "polynomial":
        coeffs = obj.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            _fail(f"{path}.coeffs", "expected a non-empty list")
        return signals.PolynomialSignal(tuple(_number(c, f"{path}.coeffs") for c in coeffs))
    if kind == "ramp_cosine":
        rate = _number(obj.get("rate", 0.5), f"{path}.rate")
        return signals.RampCosine(rate=rate)
    if kind == "harmonic_mix":
        return signals.HARMONIC_MIX
    if kind == "sinusoid_mix":
        terms = obj.get("terms")
        if not isinstance(terms, list) or not terms:
            _fail(f"{path}.terms", "expected a non-empty list of [amp, omega, phase]")
        parsed = []
        for i, term in enumerate(terms):
            if not isinstance(term, list) or len(term) != 3:
                _fail(f"{path}.terms[{i}]", "expected [amplitude, omega, phase]")
            parsed.append(tuple(_number(v, f"{path}.terms[{i}]") for v in term))
        ppart = tuple(_number(c, f"{path}.poly") for c in obj.get("poly", []))
        return signals.SinusoidMix(terms=tuple(parsed), poly=ppart)
    _fail(f"{path}.kind", f"unknown signal kind {kind!r}")


def parse_noise(obj, path="noise"):
    _expect_keys(obj, {"kind", "amplitude", "omega", "sigma", "seed", "terms"}, path)
    kind = obj.get("kind")
    if kind == "none":
        return signals.NoNoise()
    if kind == "sinusoid":
        return signals.SinusoidNoise(
            amplitude=_number(obj.get("amplitude"), f"{path}.amplitude"),
            omega=_number(obj.get("omega"), f"{path}.omega"),
        )
    if kind == "gaussian":
        if "seed" not in obj:
            _fail(f"{path}.seed", "missing required key")
        return signals.GaussianNoise(
            sigma=_number(obj.get("sigma"), f"{path}.sigma"),
            seed=_integer(obj["seed"], f"{path}.seed"),
        )
    if kind == "sum":
        terms = obj.get("terms")
        if not isinstance(terms, list) or not terms:
            _fail(f"{path}.terms", "expected a non-empty list")
        return signals.SumNoise(tuple(parse_noise(t, f"{path}.terms[{i}]")
                                      for i, t in enumerate(terms)))
    _fail(f"{path}.kind", f"unknown noise kind {kind!r}")


def parse_config(doc: dict) -> harness.RunConfig:
    """Validate a JSON config document; unknown keys are rejected."""
    _expect_keys(doc, _CONFIG_KEYS, "config")
    for key in ("params", "signal", "noise", "t0", "t_end"):
        if key not in doc:
            _fail(f"config.{key}", "missing required key")
    pobj = doc["params"]
    _expect_keys(pobj, _PARAMS_KEYS, "config.params")
    for key in ("n", "n_f", "tau"):
        if key not in pobj:
            _fail(f"config.params.{key}", "missing required key")
    gains = pobj.get("gains")
    if gains is not None:
        if not isinstance(gains, list):
            _fail("config.params.gains", "expected a list")
        gains = tuple(_number(g, "config.params.gains") for g in gains)
    lip = pobj.get("lipschitz")
    if lip is not None:
        lip = _number(lip, "config.params.lipschitz", positive=True)
    spec = pobj.get("root_spec", {"kind": "from_charpoly"})
    try:
        params = DifferentiatorParams(
            n=_integer(pobj["n"], "config.params.n", minimum=0),
            n_f=_integer(pobj["n_f"], "config.params.n_f", minimum=0),
            tau=_number(pobj["tau"], "config.params.tau", positive=True),
            gains=gains,
            lipschitz=lip,
            root_spec=parse_root_spec(spec, "config.params.root_spec"),
            w1_floor=_number(pobj.get("w1_floor", synthesis.W1_FLOOR),
                             "config.params.w1_floor", positive=True),
        )
        return harness.RunConfig(
            params=params,
            signal=parse_signal(doc["signal"]),
            noise=parse_noise(doc["noise"]),
            t0=_number(doc["t0"], "config.t0"),
            t_end=_number(doc["t_end"], "config.t_end"),
            variant=doc.get("variant", "matching"),
            record_stride=_integer(doc.get("record_stride", 1), "config.record_stride", 1),
        )
    except SmdiffError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config: {exc}") from exc


def root_spec_to_dict(spec):
    if isinstance(spec, FromCharPoly):
        return {"kind": "from_charpoly"}
    if isinstance(spec, RepeatedRoot):
        return {"kind": "repeated", "value": spec.value}
    return {"kind": "explicit", "roots": [[r.real, r.imag] for r in spec.roots]}


def signal_to_dict(sig):
    if isinstance(sig, signals.PolynomialSignal):
        return {"kind": "polynomial", "coeffs": list(sig.coeffs)}
    if isinstance(sig, signals.RampCosine):
        return {"kind": "ramp_cosine", "rate": sig.rate}
    return {"kind": "sinusoid_mix", "terms": [list(t) for t in sig.terms],
            "poly": list(sig.poly)}


def noise_to_dict(noise):
    if isinstance(noise, signals.NoNoise):
        return {"kind": "none"}
    if isinstance(noise, signals.SinusoidNoise):
        return {"kind": "sinusoid", "amplitude": noise.amplitude, "omega": noise.omega}
    if isinstance(noise, signals.GaussianNoise):
        return {"kind": "gaussian", "sigma": noise.sigma, "seed": noise.seed}
    return {"kind": "sum", "terms": [noise_to_dict(t) for t in noise.terms]}


def config_to_dict(config: harness.RunConfig) -> dict:
    """Fully resolved config, embedded in every output artifact."""
    params = config.params
    return {
        "params": {
            "n": params.n,
            "n_f": params.n_f,
            "tau": params.tau,
            "gains": None if params.gains is None else list(params.gains),
            "lipschitz": params.lipschitz,
            "root_spec": root_spec_to_dict(params.root_spec),
            "w1_floor": params.w1_floor,
        },
        "signal": signal_to_dict(config.signal),
        "noise": noise_to_dict(config.noise),
        "t0": config.t0,
        "t_end": config.t_end,
        "variant": config.variant,
        "record_stride": config.record_stride,
    }


# ---------------------------------------------------------------------------
# argument helpers


def _parse_roots_flag(text: str):
    if text == "from-charpoly":
        return FromCharPoly()
    if text.startswith("repeated:"):
        try:
            return RepeatedRoot(float(text.split(":", 1)[1]))
        except ValueError:
            raise ConfigError(f"--roots: bad repeated value in {text!r}")
    raise ConfigError(f"--roots: expected 'from-charpoly' or 'repeated:<value>', got {text!r}")


def _parse_float_list(text: str, flag: str):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers, got {text!r}")


def _parse_complex_list(text: str, flag: str):
    out = []
    for item in text.split(","):
        try:
            out.append(complex(item.strip().replace("i", "j")))
        except ValueError:
            raise ConfigError(f"{flag}: cannot parse {item!r} as a complex number")
    return tuple(out)


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--w1-grid: expected 'min:max:points', got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--w1-grid: bad values in {text!r}")
    if not (0 < lo <= hi) or count < 1:
        raise ConfigError("--w1-grid: need 0 < min <= max and points >= 1")
    return tuple(np.logspace(math.log10(lo), math.log10(hi), count).tolist())


def _load_run_config(args) -> harness.RunConfig:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        config = harness.preset(args.preset)
    elif args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {args.config}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config: invalid JSON at line {exc.lineno}: {exc.msg}")
        config = parse_config(doc)
    else:
        raise ConfigError("one of --preset or --config is required")
    overrides = {}
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.t0 is not None:
        overrides["t0"] = args.t0
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.roots is not None:
        overrides["root_spec"] = _parse_roots_flag(args.roots)
    if getattr(args, "variant", None) is not None:
        overrides["variant"] = args.variant
    if getattr(args, "stride", None) is not None:
        overrides["record_stride"] = args.stride
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    env_seed = os.environ.get("SMDIFF_SEED")
    if env_seed is not None:
        try:
            overrides["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"SMDIFF_SEED: expected an integer, got {env_seed!r}")
    try:
        return harness.apply_overrides(config, **overrides)
    except SmdiffError as exc:
        raise ConfigError(f"overrides: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    config = _load_run_config(args)
    echo = config_to_dict(config)
    echo_json = json.dumps(echo, sort_keys=True)
    diverged_at = None
    try:
        records = harness.run(config)
    except Diverged as exc:
        print(f"run diverged at step {exc.step}", file=sys.stderr)
        return EXIT_NUMERIC
    harness.write_trace(args.out, records, config.params.n, config.params.n_f, echo_json)
    metrics = {
        "config": echo,
        "n_steps": config.n_steps,
        "n_records": len(records),
        "tail_fraction": args.settle_fraction,
        "diverged": diverged_at,
    }
    em = analysis.error_metrics(records, args.settle_fraction)
    metrics["tail_sup"] = list(em.tail_sup)
    metrics["settling_step"] = em.settling_step
    metrics["tail_state_norm_sup"] = em.tail_state_norm_sup
    if config.variant == "matching" and config.params.lipschitz is not None:
        metrics["neighborhood_bound"] = analysis.neighborhood_check(
            records, config.params, settle_fraction=args.settle_fraction
        )
    else:
        metrics["neighborhood_bound"] = None
    payload = json.dumps(metrics, sort_keys=True, indent=2)
    with open(args.metrics, "w") as fh:
        fh.write(payload + "\n")
    print(payload)
    return EXIT_OK


def cmd_roots(args) -> int:
    gains = _parse_float_list(args.gains, "--gains")
    try:
        char = poly.char_poly_from_gains(gains, args.lipschitz, args.m)
        roots = poly.find_roots(char)
    except SmdiffError as exc:
        raise ConfigError(str(exc)) from exc
    deg = char.degree
    payload = {
        "gains": list(gains),
        "lipschitz": args.lipschitz,
        "m": args.m,
        "coeffs": list(char.coeffs),
        "roots": [[r.real, r.imag] for r in roots],
        "residuals": [abs(char(r)) / (1.0 + abs(r) ** deg) for r in roots],
    }
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_gains(args) -> int:
    poles = _parse_complex_list(args.d, "--d")
    params = DifferentiatorParams(
        n=args.n, n_f=args.n_f, tau=args.tau, root_spec=RepeatedRoot(-1.0)
    )
    cache = synthesis.precompute(params)
    gains = synthesis.injection_gains(poles, cache)
    residual = analysis.pole_placement_residual(cache.trans, gains, poles)
    payload = {
        "n": args.n,
        "n_f": args.n_f,
        "tau": args.tau,
        "poles": [[d.real, d.imag] for d in poles],
        "gains": list(gains),
        "residual": residual,
    }
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_certify(args) -> int:
    config = _load_run_config(args)
    params = config.params
    grid = _parse_grid(args.w1_grid) if args.w1_grid else analysis.DEFAULT_W1_GRID
    roots = resolve_roots(params)
    certs = analysis.certify(params, grid, roots=roots)
    payload = {
        "config": config_to_dict(config),
        "grid": [c.as_record() for c in certs],
        "K_max": max(c.K for c in certs),
    }
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smdiff",
        description="Streaming sliding-mode differentiation: simulate, "
        "synthesize gains, certify stability.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_source(p):
        p.add_argument("--preset", help="preset name: sim1 or sim2")
        p.add_argument("--config", help="path to a JSON run configuration")
        p.add_argument("--roots", help="'from-charpoly' or 'repeated:<value>'")
        p.add_argument("--tau", type=float, help="override the sampling period")
        p.add_argument("--t0", type=float, help="override the start time")
        p.add_argument("--t-end", dest="t_end", type=float, help="override the end time")

    p_run = sub.add_parser("run", help="simulate and write trace + metrics")
    add_config_source(p_run)
    p_run.add_argument("--variant", choices=harness.VARIANTS, help="differentiator variant")
    p_run.add_argument("--stride", type=int, help="record every this many steps")
    p_run.add_argument("--seed", type=int, help="override Gaussian noise seeds")
    p_run.add_argument("--out", default="trace.csv", help="trace CSV path")
    p_run.add_argument("--metrics", default="metrics.json", help="metrics JSON path")
    p_run.add_argument("--settle-fraction", dest="settle_fraction", type=float,
                       default=0.3, help="tail window fraction for error metrics")
    p_run.set_defaults(handler=cmd_run)

    p_roots = sub.add_parser("roots", help="roots of the gain characteristic polynomial")
    p_roots.add_argument("--gains", required=True, help="comma-separated gain sequence")
    p_roots.add_argument("--lipschitz", type=float, required=True,
                         help="bound on the highest signal derivative")
    p_roots.add_argument("--m", type=int, required=True,
                         help="total order (derivative plus filtering)")
    p_roots.set_defaults(handler=cmd_roots)

    p_gains = sub.add_parser("gains", help="injection gains for given discrete poles")
    p_gains.add_argument("--n", type=int, required=True)
    p_gains.add_argument("--n-f", dest="n_f", type=int, required=True)
    p_gains.add_argument("--tau", type=float, required=True)
    p_gains.add_argument("--d", required=True,
                         help="comma-separated poles, e.g. '0,0' or '0.5+0.3i,0.5-0.3i'")
    p_gains.set_defaults(handler=cmd_gains)

    p_cert = sub.add_parser("certify", help="frozen-state Lyapunov certificates")
    add_config_source(p_cert)
    p_cert.add_argument("--w1-grid", dest="w1_grid",
                        help="log grid as 'min:max:points' (default 1e-4:1e2:13)")
    p_cert.set_defaults(handler=cmd_certify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.handler(args)
    except (ConfigError, UnknownPreset) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Diverged, UnstableRoot, UnstableMatrix) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SmdiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
