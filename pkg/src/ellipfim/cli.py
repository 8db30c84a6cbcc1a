"""Command-line front end: simulate, bounds, adaptivity, verify.

All subcommands read a JSON config (schema version 1) and write CSV plus
optional SVG artifacts.  Exit codes: 0 success, 1 check failures, 2
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.linalg import toeplitz

from . import bounds as bounds_mod
from .generators import gaussian, generalized_gaussian, student_t
from .invariants import run_invariant_suite
from .parameterize import (
    LowRankModel,
    breaking_parameterization,
    linear_split_parameterization,
    low_rank_parameterization,
    shape_scale_parameterization,
    sinusoid_steering,
    verify_adaptivity_by_fim,
)
from .matcalc import ovecs, vecs
from .scale import decompose, scale_by_name
from .simulate import SimConfig, run_simulation, write_svg_chart

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    schema = data.pop("schema", None)
    if schema != SCHEMA_VERSION:
        raise ConfigError(
            f"config schema must be {SCHEMA_VERSION}, got {schema!r}"
        )
    return data


def _generator_from_spec(spec):
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError('generator spec needs a "family" key')
    family = spec["family"]
    if family == "gaussian":
        return gaussian()
    if family in ("t", "student_t"):
        if "nu" not in spec:
            raise ConfigError("t generator needs \"nu\"")
        return student_t(float(spec["nu"]))
    if family in ("gg", "generalized_gaussian"):
        if "shape" not in spec:
            raise ConfigError("generalized gaussian generator needs \"shape\"")
        return generalized_gaussian(float(spec["shape"]))
    raise ConfigError(
        f"unknown generator family {family!r}; valid: gaussian, t, gg"
    )


def _sigma_from_spec(spec, m):
    kind = spec.get("kind", "toeplitz") if isinstance(spec, dict) else None
    if kind == "toeplitz":
        rho = float(spec.get("rho", 0.8))
        return toeplitz(rho ** np.arange(m))
    if kind == "identity":
        return np.eye(m)
    if kind == "matrix":
        mat = np.asarray(spec["values"], dtype=float)
        if mat.shape != (m, m):
            raise ConfigError(f"explicit scatter must be {m}x{m}")
        return mat
    raise ConfigError(
        f"unknown scatter kind {kind!r}; valid: toeplitz, identity, matrix"
    )


def _scale_from_name(name):
    try:
        return scale_by_name(name)
    except KeyError as exc:
        raise ConfigError(exc.args[0])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    data = _load_config(args.config)
    if args.nu:
        data["nu_grid"] = [float(v) for part in args.nu for v in part.split(",")]
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["root_seed"] = args.seed
    if args.scale is not None:
        data["scale_kind"] = args.scale
    try:
        config = SimConfig.from_dict(data)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc))
    result = run_simulation(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"simulation_{config.scale_kind}"
    csv_path = out_dir / f"{stem}.csv"
    result.to_csv(csv_path)
    result.write_metadata(out_dir / f"{stem}.meta.json")
    if args.svg:
        write_svg_chart(result, out_dir / f"{stem}.svg")
    invalid = [c for c in result.cells if not c.valid]
    for c in invalid:
        print(
            f"warning: cell nu={c.nu:g} estimator={c.estimator} had "
            f"{c.n_failed} failed trials (flagged invalid)",
            file=sys.stderr,
        )
    print(f"wrote {csv_path}")
    return 0


def cmd_bounds(args) -> int:
    data = _load_config(args.config)
    try:
        m = int(data["m"])
        scale = _scale_from_name(data.get("scale", "trace"))
        gen = _generator_from_spec(data.get("generator", {"family": "gaussian"}))
        sigma = _sigma_from_spec(data.get("sigma", {"kind": "toeplitz"}), m)
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc}")
    bset = bounds_mod.bound_set(scale, sigma, gen)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"bounds_{scale.kind}_{gen.name}.csv"
    bounds_mod.write_bounds_csv(bset, csv_path)
    v = decompose(scale, sigma).v
    report = bounds_mod.verify_chain(scale, v, [gen], m)
    print(report.format_table())
    print(f"trace(crb_shape) = {np.trace(bset.crb_shape):.12g}")
    print(f"crb_scale = {bset.crb_scale:.12g}")
    print(f"wrote {csv_path}")
    return 0 if report.passed else 1


def _parameterization_from_spec(spec):
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError('parameterization spec needs a "name" key')
    name = spec["name"]
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    if name == "split":
        m = int(spec.get("m", 4))
        q = int(spec.get("q", 2))
        h = rng.standard_normal((m, q))
        param = linear_split_parameterization(h, m)
        sigma0 = toeplitz(float(spec.get("rho", 0.7)) ** np.arange(m))
        theta0 = np.concatenate([rng.standard_normal(q), vecs(sigma0)])
        return param, theta0
    if name == "low_rank":
        m = int(spec.get("m", 6))
        p = int(spec.get("p", 2))
        gamma0 = np.asarray(spec.get("gamma", [0.6, 1.7]), dtype=float)
        if gamma0.size != p:
            raise ConfigError("low_rank needs one gamma per source")
        a_fn, a_jac = sinusoid_steering(m)
        b = rng.standard_normal((p, p))
        model = LowRankModel(
            a_fn=a_fn,
            a_jac=a_jac,
            signal_cov=b @ b.T + p * np.eye(p),
            noise_level=float(spec.get("noise", 0.8)),
            q=p,
        )
        return low_rank_parameterization(model), model.theta0(gamma0)
    if name == "shape_scale":
        m = int(spec.get("m", 4))
        scale = _scale_from_name(spec.get("scale", "trace"))
        sigma0 = toeplitz(float(spec.get("rho", 0.8)) ** np.arange(m))
        dec = decompose(scale, sigma0)
        theta0 = np.concatenate(
            [np.zeros(m), ovecs(dec.v), [float(spec.get("s", 1.5))]]
        )
        return shape_scale_parameterization(scale, m), theta0
    if name == "breaking":
        m = int(spec.get("m", 3))
        sigma0 = toeplitz(float(spec.get("rho", 0.5)) ** np.arange(m))
        return breaking_parameterization(sigma0), np.asarray(
            [float(spec.get("gamma0", 1.3))]
        )
    raise ConfigError(
        f"unknown parameterization {name!r}; valid: split, low_rank, "
        "shape_scale, breaking"
    )


def cmd_adaptivity(args) -> int:
    data = _load_config(args.config)
    param, theta0 = _parameterization_from_spec(data.get("parameterization", {}))
    gen = _generator_from_spec(data.get("generator", {"family": "t", "nu": 8}))
    report = verify_adaptivity_by_fim(param, theta0, gen)
    cond = report.condition
    print(f"parameterization: {param.name} (q={param.q}, r={param.r})")
    print(f"generator:        {gen.name}")
    print(f"condition residual (max abs): {np.abs(cond.residual).max():.3e} "
          f"(tol {cond.tol:.3e}) -> {'satisfied' if cond.satisfied else 'violated'}")
    print(f"efficient-FIM gap: {report.gap:.3e} (relative {report.gap_rel:.3e}) "
          f"-> {'adaptive' if report.adaptive else 'not adaptive'}")
    return 0


def cmd_verify(args) -> int:
    level = args.level
    if args.config is not None:
        data = _load_config(args.config)
        level = data.get("level", level)
    report = run_invariant_suite(level=level)
    print(report.format_table())
    return 0 if report.all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellipfim",
        description="Efficiency bounds and estimators for elliptical models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo estimator comparison")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--nu", action="append", help="override the nu grid")
    p_sim.add_argument("--trials", type=int)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--scale", help="first | trace | det")
    p_sim.add_argument("--out", default=".")
    p_sim.add_argument("--svg", action="store_true")
    p_sim.set_defaults(fn=cmd_simulate)

    p_b = sub.add_parser("bounds", help="bound matrices and the equality chain")
    p_b.add_argument("--config", required=True)
    p_b.add_argument("--out", default=".")
    p_b.set_defaults(fn=cmd_bounds)

    p_a = sub.add_parser("adaptivity", help="adaptivity condition checker")
    p_a.add_argument("--config", required=True)
    p_a.set_defaults(fn=cmd_adaptivity)

    p_v = sub.add_parser("verify", help="run the invariant suite")
    p_v.add_argument("--config", help="optional config carrying the level")
    p_v.add_argument("--level", choices=("fast", "full"), default="fast")
    p_v.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
