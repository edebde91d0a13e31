"""``mfconc`` command line tool.

Subcommands::

    mfconc simulate   --model M.json --N 1000 --horizon 5 [--replications R] [--aggregate]
    mfconc certify    (--params P.json | --model M.json) --xs 0.5,1,2 --N 100,10000
    mfconc legendre   --xs 0.04,1,2
    mfconc verify     --model M.json --N 10000 --R 2000 [--checks exceedance,clt]

Each accepts ``--config run.json`` (keys mirror the long flags), ``--output-dir``
and ``--threads``; flags override the config file, and ``MFC_SEED`` overrides
the configured seed. Exit status: 0 success, 1 invalid input, 2 a verify
check failed.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import bounds, convex, verify
from .errors import ModelError, OracleUnavailable
from .models.io import SCHEMA_VERSION as MODEL_SCHEMA_VERSION
from .models.io import load_model
from .particles import SimulationConfig, aggregate_rows, simulate, trajectory_rows
from .reporting import write_csv, write_manifest

EXIT_OK, EXIT_INVALID, EXIT_VERIFY_FAILED = 0, 1, 2

DEFAULT_XS = [0.5, 1.0, 2.0, 3.0]

# keys accepted in --config files, per subcommand
CONFIG_KEYS = {
    "simulate": {"model_file", "N", "horizon", "replications", "seed", "aggregate"},
    "certify": {"params_file", "model_file", "xs", "N", "horizon", "sigma_sq", "c_prime", "m"},
    "legendre": {"xs"},
    "verify": {"model_file", "N", "R", "horizon", "seed", "xs", "checks", "sigma_sq", "c_prime", "params_file"},
}
COMMON_KEYS = {"subcommand", "output_dir", "threads"}
# an optional "overrides" object may hold any of the keys above


class ConfigError(ValueError):
    pass


def _float_list(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text) -> List[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(float(v)) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _key_line(text: str, key: str) -> Optional[int]:
    for i, line in enumerate(text.splitlines(), 1):
        if re.search(rf'"{re.escape(key)}"\s*:', line):
            return i
    return None


def load_config(path, subcommand: str) -> Dict:
    """Parse a run config, rejecting unknown keys with a line reference."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: line 1: config must be a JSON object")
    if doc.get("subcommand", subcommand) != subcommand:
        raise ConfigError(
            f"{path}: line {_key_line(text, 'subcommand')}: config is for {doc['subcommand']!r}, not {subcommand!r}"
        )
    allowed = CONFIG_KEYS[subcommand] | COMMON_KEYS
    overrides = doc.pop("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigError(f"{path}: line {_key_line(text, 'overrides')}: 'overrides' must be an object")
    for key in list(doc) + list(overrides):
        if key not in allowed:
            raise ConfigError(f"{path}: line {_key_line(text, key)}: unknown key {key!r} for {subcommand}")
    doc.update(overrides)
    return doc


def _resolve(args, subcommand: str) -> Dict:
    cfg = load_config(args.config, subcommand) if args.config else {}
    cfg.pop("subcommand", None)
    for key in CONFIG_KEYS[subcommand] | {"output_dir", "threads"}:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    if "seed" in CONFIG_KEYS[subcommand]:
        env = os.environ.get("MFC_SEED")
        if getattr(args, "seed", None) is None and env is not None:
            try:
                cfg["seed"] = int(env)
            except ValueError as exc:
                raise ConfigError(f"MFC_SEED must be an integer, got {env!r}") from exc
        cfg.setdefault("seed", 0)
    cfg.setdefault("output_dir", "mfconc_out")
    return cfg


def _require(cfg, key, subcommand):
    if cfg.get(key) is None:
        raise ConfigError(f"{subcommand} needs {key!r} (flag --{key.replace('_', '-')} or config key)")
    return cfg[key]


def _out(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_params(path) -> Dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if "mixing" in doc:
        extra = set(doc) - {"mixing", "sigma_sq"}
        if extra:
            raise ConfigError(f"{path}: line {_key_line(text, sorted(extra)[0])}: unknown key {sorted(extra)[0]!r}")
        try:
            mix = bounds.MixingParams(**doc["mixing"])
        except TypeError as exc:
            raise ConfigError(f"{path}: line {_key_line(text, 'mixing')}: {exc}") from exc
        return {"mixing": mix, "sigma_sq": float(doc.get("sigma_sq", bounds.BOUND_MODE_SIGMA_SQ))}
    expected = {"r", "sigma_bar_sq", "beta_sq", "b_star"}
    extra = set(doc) - expected
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"{path}: line {_key_line(text, key)}: unknown key {key!r}")
    missing = expected - set(doc)
    if missing:
        raise ConfigError(f"{path}: line 1: missing keys {sorted(missing)}")
    return {"params": bounds.ConcentrationParams(**doc)}


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg) -> int:
    spec = load_model(_require(cfg, "model_file", "simulate"))
    N = int(cfg.get("N", 1000))
    horizon = int(cfg.get("horizon", spec.horizon))
    reps = int(cfg.get("replications", 1))
    seed = int(cfg["seed"])
    out = _out(cfg)
    files = []
    if cfg.get("aggregate"):
        funcs = spec.test_functions or verify.default_test_functions(spec.model, seed)
        names = [fid for fid, _ in funcs]
        rows = []
        for rep in range(reps):
            traj = simulate(spec.model, SimulationConfig(N, horizon, seed, rep))
            rows.extend(aggregate_rows(traj, [f for _, f in funcs], names, rep))
        write_csv(out / "statistics.csv", ("replication", "generation", "statistic", "value"), rows)
        files.append("statistics.csv")
    else:
        rows = []
        for rep in range(reps):
            traj = simulate(spec.model, SimulationConfig(N, horizon, seed, rep))
            rows.extend(trajectory_rows(traj, rep))
        write_csv(out / "trajectory.csv", ("replication", "generation", "particle_index", "state"), rows)
        files.append("trajectory.csv")
    resolved = dict(cfg, N=N, horizon=horizon, replications=reps)
    write_manifest(out, "simulate", resolved, seed, files, extra={"model_schema_version": MODEL_SCHEMA_VERSION})
    return EXIT_OK


def cmd_certify(cfg) -> int:
    xs = _float_list(cfg.get("xs", DEFAULT_XS))
    ns = _int_list(cfg.get("N", [100, 10_000]))
    if any(n < 1 for n in ns) or any(x < 0 for x in xs):
        raise ConfigError("N must be >= 1 and x >= 0")
    if cfg.get("params_file"):
        loaded = _load_params(cfg["params_file"])
    elif cfg.get("model_file"):
        spec = load_model(cfg["model_file"])
        horizon = int(cfg.get("horizon", spec.horizon))
        sigma_sq = float(cfg.get("sigma_sq", bounds.BOUND_MODE_SIGMA_SQ))
        loaded = {"params": bounds.model_params(spec.model, horizon, sigma_sq, cfg.get("c_prime"))}
    else:
        raise ConfigError("certify needs 'params_file' or 'model_file'")
    rows = []
    for n in ns:
        for x in xs:
            if "mixing" in loaded:
                mix, s2 = loaded["mixing"], loaded["sigma_sq"]
                uni = bounds.cor42_uniform_bounds(mix, s2, x, n)
                bern = bounds.bernstein_thresholds(bounds.fk_uniform_params(mix, s2).params, x, n)
                ben, hoef = uni["bennett"], uni["hoeffding"]
            else:
                p = loaded["params"]
                ev = bounds.thm12_events(p, x, n)
                bern = bounds.bernstein_thresholds(p, x, n)
                ben, hoef = ev["bennett_eta"], ev["hoeffding_eta"]
            rows.append((x, n, ben, hoef, bern["rate1_eta"], bern["rate2_eta"]))
    out = _out(cfg)
    write_csv(out / "certificates.csv", ("x", "N", "bennett", "hoeffding", "bernstein_rate1", "bernstein_rate2"), rows)
    extra = {"scale": "eta", "confidence": "1 - exp(-x)"}
    if "params" in loaded:
        extra["params"] = loaded["params"].to_dict()
    write_manifest(out, "certify", dict(cfg, xs=xs, N=ns), None, ["certificates.csv"], extra=extra)
    return EXIT_OK


def cmd_legendre(cfg) -> int:
    xs = _float_list(cfg.get("xs", DEFAULT_XS))
    if any(x < 0 for x in xs):
        raise ConfigError("x values must be nonnegative")
    out = _out(cfg)
    write_csv(out / "legendre.csv", ("x", "id", "value", "lower", "upper", "iterations"), convex.inverse_table(xs))
    write_manifest(out, "legendre", dict(cfg, xs=xs), None, ["legendre.csv"])
    return EXIT_OK


def cmd_verify(cfg) -> int:
    mspec = load_model(_require(cfg, "model_file", "verify"))
    params = None
    if cfg.get("params_file"):
        loaded = _load_params(cfg["params_file"])
        if "mixing" in loaded:
            params = bounds.fk_uniform_params(loaded["mixing"], loaded["sigma_sq"]).params
        else:
            params = loaded["params"]
    checks = cfg.get("checks")
    if isinstance(checks, str):
        checks = [c for c in checks.split(",") if c]
    spec = verify.ExperimentSpec(
        model=mspec.model,
        N=int(cfg.get("N", 10_000)),
        horizon=int(cfg.get("horizon", mspec.horizon)),
        replications=int(cfg.get("R", 1000)),
        functions=mspec.test_functions,
        x_grid=tuple(_float_list(cfg.get("xs", DEFAULT_XS))),
        master_seed=int(cfg["seed"]),
        threads=cfg.get("threads"),
        params=params,
        sigma_sq=float(cfg.get("sigma_sq", bounds.BOUND_MODE_SIGMA_SQ)),
        c_prime=cfg.get("c_prime"),
    )
    report = verify.run_checks(spec, checks)
    out = _out(cfg)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.csv").write_text(report.to_csv())
    resolved = dict(cfg, N=spec.N, horizon=spec.horizon, R=spec.replications, xs=list(spec.x_grid),
                    checks=checks or verify.applicable_checks(spec.model))
    resolved.pop("threads", None)
    write_manifest(out, "verify", resolved, spec.master_seed, ["report.json", "report.csv"],
                   schema_versions={"report.json": verify.REPORT_SCHEMA_VERSION,
                                    "report.csv": verify.REPORT_SCHEMA_VERSION},
                   extra={"passed": report.passed, "threads": cfg.get("threads")})
    for row in report.failures():
        print(f"FAIL {row['check']} n={row['generation']} f={row['function_id']} "
              f"x/m={row['x_or_m']} empirical={row['empirical']:.6g} bound={row['bound']:.6g}", file=sys.stderr)
    print(f"{len(report.rows)} checks, {len(report.failures())} failed; report in {out}")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


COMMANDS = {"simulate": cmd_simulate, "certify": cmd_certify, "legendre": cmd_legendre, "verify": cmd_verify}


def run(config: Dict) -> int:
    """Run one subcommand from an in-memory config; returns the exit status.

    ``config["subcommand"]`` selects the command and the remaining keys are
    those accepted in a ``--config`` file. ``MFC_SEED`` overrides the seed.
    """
    cfg = dict(config)
    subcommand = cfg.pop("subcommand", None)
    if subcommand not in COMMANDS:
        print(f"error: unknown subcommand {subcommand!r}", file=sys.stderr)
        return EXIT_INVALID
    cfg.update(cfg.pop("overrides", {}) or {})
    unknown = set(cfg) - CONFIG_KEYS[subcommand] - COMMON_KEYS
    if unknown:
        print(f"error: unknown key {sorted(unknown)[0]!r} for {subcommand}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if "seed" in CONFIG_KEYS[subcommand]:
            env = os.environ.get("MFC_SEED")
            if env is not None:
                cfg["seed"] = int(env)
            cfg.setdefault("seed", 0)
        cfg.setdefault("output_dir", "mfconc_out")
        return COMMANDS[subcommand](cfg)
    except (ConfigError, ModelError, OracleUnavailable, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfconc", description="Mean field particle simulation and certificates.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run config; flags override its values")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")

    p = sub.add_parser("simulate", help="simulate particle trajectories")
    common(p)
    p.add_argument("--model", dest="model_file")
    p.add_argument("--N", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--aggregate", action="store_true", help="write eta_n^N(f) statistics instead of particles")

    p = sub.add_parser("certify", help="tabulate concentration certificates")
    common(p)
    p.add_argument("--params", dest="params_file")
    p.add_argument("--model", dest="model_file")
    p.add_argument("--xs", type=_float_list)
    p.add_argument("--N", type=_int_list)
    p.add_argument("--horizon", type=int)
    p.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    p.add_argument("--c-prime", dest="c_prime", type=float)

    p = sub.add_parser("legendre", help="tabulate inverse Legendre transforms")
    common(p)
    p.add_argument("--xs", type=_float_list)

    p = sub.add_parser("verify", help="Monte Carlo verification report")
    common(p)
    p.add_argument("--model", dest="model_file")
    p.add_argument("--params", dest="params_file")
    p.add_argument("--N", type=int)
    p.add_argument("--R", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--xs", type=_float_list)
    p.add_argument("--checks", help="comma-separated subset of " + ",".join(verify.CHECKS))
    p.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    p.add_argument("--c-prime", dest="c_prime", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = _resolve(args, args.subcommand)
        return COMMANDS[args.subcommand](cfg)
    except (ConfigError, ModelError, OracleUnavailable, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
