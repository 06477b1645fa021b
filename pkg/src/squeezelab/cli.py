"""Command-line scenario runner.

    squeezelab run [config.ini]
    squeezelab print-default-config [scenario]
    squeezelab list-scenarios

The configuration is a flat INI file (one section per subsystem); every key
has a documented default, dumped by print-default-config.  Artifacts land in
the configured output directory (overridden by the SQUEEZELAB_OUT environment
variable): trajectory.csv, fidelity.csv, ensemble.csv, invariants.json and
operator_report.json as applicable.  Exit status: 0 when every hard invariant
passes, 1 on a failed invariant or a numerical failure, 2 on an invalid
configuration.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from pathlib import Path

from .scenarios import SCENARIOS, run_scenario, write_invariants

__all__ = ["main", "build_config", "DEFAULTS"]


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "run": {"scenario": "harmonic-coherent", "out_dir": "squeezelab-out",
            "seed": "20240101"},
    "constants": {"hbar": "1.0", "mass": "1.0"},
    "grid": {"x_min": "-20.0", "x_max": "20.0", "n_points": "1024"},
    "profile": {"name": "gaussian"},
    "potential": {"kind": "harmonic", "omega": "1.0", "omega_after": "2.0",
                  "switch_time": "0.0", "coefficients": ""},
    "initial": {"q_mean": "1.0", "v_mean": "0.0", "dq": "auto", "dq_dot": "0.0"},
    "integrator": {"dt": "0.001", "t_final": "auto", "record_stride": "10",
                   "dispersion_law": "projected"},
    "pde": {"enabled": "true", "dt": "0.00025", "output_stride": "400"},
    "sampler": {"n_paths": "100000", "dt": "0.001",
                "t_final": "6.283185307179586", "output_stride": "50"},
    "feedback": {"amplitude": "1.0", "angular_rate": "1.0", "dispersion": "1.0"},
    "operator": {"n_points": "512", "f_count": "11", "f_max": "1.0",
                 "dq_ratio": "2.0"},
}

# scenario-specific default overrides (applied on top of DEFAULTS)
SCENARIO_DEFAULTS = {
    "harmonic-coherent": {},
    "quench-squeeze": {"potential": {"kind": "time-harmonic"},
                       "initial": {"q_mean": "0.0"}},
    "free-spread": {"potential": {"kind": "free"},
                    "initial": {"q_mean": "0.0"},
                    "grid": {"x_min": "-48.0", "x_max": "48.0"},
                    "integrator": {"t_final": "5.0"},
                    "pde": {"enabled": "false"}},
    "feedback": {"profile": {"name": "sech2"},
                 "grid": {"x_min": "-36.0", "x_max": "36.0", "n_points": "2048"},
                 "pde": {"dt": "0.00025", "output_stride": "400"}},
    "sample": {"pde": {"enabled": "false"}},
    "operator-check": {},
}


def _merged_parser(scenario: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    parser.read_dict(DEFAULTS)
    parser.read_dict(SCENARIO_DEFAULTS.get(scenario, {}))
    parser.set("run", "scenario", scenario)
    return parser


def _get(parser, section, key, conv, predicate=None, what=""):
    try:
        raw = parser.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError) as err:
        raise ConfigError(str(err)) from err
    try:
        value = conv(raw)
    except ValueError as err:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {err}") from err
    if predicate is not None and not predicate(value):
        raise ConfigError(f"[{section}] {key} = {raw!r}: must be {what}")
    return value


def _float_or_auto(raw: str):
    return "auto" if raw.strip() == "auto" else float(raw)


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def build_config(path: str | None, scenario_override: str | None = None) -> dict:
    """Load, merge with defaults and validate; returns typed sections."""
    file_parser = configparser.ConfigParser()
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_parser.read(path)
        except configparser.Error as err:
            raise ConfigError(f"cannot parse {path}: {err}") from err
    scenario = (scenario_override
                or (file_parser.get("run", "scenario", fallback=None))
                or DEFAULTS["run"]["scenario"])
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{scenario}'; "
                          f"choose from {', '.join(sorted(SCENARIOS))}")
    parser = _merged_parser(scenario)
    parser.read_dict({s: dict(file_parser.items(s)) for s in file_parser.sections()})
    parser.set("run", "scenario", scenario)

    positive = (lambda v: v > 0, "positive")
    cfg = {
        "run": {
            "scenario": scenario,
            "out_dir": parser.get("run", "out_dir"),
            "seed": _get(parser, "run", "seed", int, lambda v: v >= 0,
                         "a non-negative integer"),
        },
        "constants": {
            "hbar": _get(parser, "constants", "hbar", float, *positive),
            "mass": _get(parser, "constants", "mass", float, *positive),
        },
        "grid": {
            "x_min": _get(parser, "grid", "x_min", float),
            "x_max": _get(parser, "grid", "x_max", float),
            "n_points": _get(parser, "grid", "n_points", int,
                             lambda v: v >= 16 and (v & (v - 1)) == 0,
                             "a power of two >= 16"),
        },
        "profile": {"name": parser.get("profile", "name")},
        "potential": {
            "kind": parser.get("potential", "kind"),
            "omega": _get(parser, "potential", "omega", float, *positive),
            "omega_after": _get(parser, "potential", "omega_after", float, *positive),
            "switch_time": _get(parser, "potential", "switch_time", float),
            "coefficients": parser.get("potential", "coefficients"),
        },
        "initial": {
            "q_mean": _get(parser, "initial", "q_mean", float),
            "v_mean": _get(parser, "initial", "v_mean", float),
            "dq": _get(parser, "initial", "dq", _float_or_auto,
                       lambda v: v == "auto" or v > 0, "positive or 'auto'"),
            "dq_dot": _get(parser, "initial", "dq_dot", float),
        },
        "integrator": {
            "dt": _get(parser, "integrator", "dt", float, *positive),
            "t_final": _get(parser, "integrator", "t_final", _float_or_auto,
                            lambda v: v == "auto" or v > 0, "positive or 'auto'"),
            "record_stride": _get(parser, "integrator", "record_stride", int,
                                  lambda v: v >= 1, ">= 1"),
            "dispersion_law": _get(parser, "integrator", "dispersion_law", str,
                                   lambda v: v in ("projected", "energy-balance"),
                                   "projected or energy-balance"),
        },
        "pde": {
            "enabled": _get(parser, "pde", "enabled", _bool),
            "dt": _get(parser, "pde", "dt", float, *positive),
            "output_stride": _get(parser, "pde", "output_stride", int,
                                  lambda v: v >= 1, ">= 1"),
        },
        "sampler": {
            "n_paths": _get(parser, "sampler", "n_paths", int,
                            lambda v: v >= 100, ">= 100"),
            "dt": _get(parser, "sampler", "dt", float, *positive),
            "t_final": _get(parser, "sampler", "t_final", float, *positive),
            "output_stride": _get(parser, "sampler", "output_stride", int,
                                  lambda v: v >= 1, ">= 1"),
        },
        "feedback": {
            "amplitude": _get(parser, "feedback", "amplitude", float),
            "angular_rate": _get(parser, "feedback", "angular_rate", float, *positive),
            "dispersion": _get(parser, "feedback", "dispersion", float, *positive),
        },
        "operator": {
            "n_points": _get(parser, "operator", "n_points", int,
                             lambda v: 16 <= v <= 2048 and (v & (v - 1)) == 0,
                             "a power of two between 16 and 2048"),
            "f_count": _get(parser, "operator", "f_count", int,
                            lambda v: v >= 1, ">= 1"),
            "f_max": _get(parser, "operator", "f_max", float, *positive),
            "dq_ratio": _get(parser, "operator", "dq_ratio", float, *positive),
        },
    }
    if not cfg["grid"]["x_max"] > cfg["grid"]["x_min"]:
        raise ConfigError("[grid] x_max must exceed x_min")
    name = cfg["profile"]["name"]
    if name.startswith("table:") and not Path(name[len("table:"):]).is_file():
        raise ConfigError(f"profile table not found: {name[len('table:'):]}")
    elif not name.startswith("table:") and name not in ("gaussian", "sech2"):
        raise ConfigError(f"unknown profile '{name}'")
    return cfg


def _cmd_run(args) -> int:
    try:
        cfg = build_config(args.config, args.scenario)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    scenario = cfg["run"]["scenario"]
    out_dir = Path(os.environ.get("SQUEEZELAB_OUT", cfg["run"]["out_dir"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    checks, error = [], None
    try:
        checks = run_scenario(scenario, cfg, out_dir)
    except Exception as err:  # noqa: BLE001 - report any numerical failure
        error = f"{type(err).__name__}: {err}"
    status = write_invariants(out_dir / "invariants.json", scenario, checks, error)
    for ch in checks:
        extra = "" if ch.value is None else f" (value {ch.value:.6g}" + (
            "" if ch.tolerance is None else f", tolerance {ch.tolerance:.6g}") + ")"
        print(f"[{ch.status:>8s}] {ch.name}{extra}")
    if error is not None:
        print(f"numerical failure: {error}", file=sys.stderr)
    print(f"artifacts in {out_dir}")
    return status


def _cmd_print_default_config(args) -> int:
    scenario = args.scenario or DEFAULTS["run"]["scenario"]
    if scenario not in SCENARIOS:
        print(f"unknown scenario '{scenario}'", file=sys.stderr)
        return 2
    _merged_parser(scenario).write(sys.stdout)
    return 0


def _cmd_list_scenarios(_args) -> int:
    for name in SCENARIOS:
        print(name)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="squeezelab",
        description="Numerical laboratory for generalized coherent and "
                    "squeezed states with time-dependent dispersion.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario from an INI config")
    p_run.add_argument("config", nargs="?", default=None,
                       help="INI configuration file (defaults apply when omitted)")
    p_run.add_argument("--scenario", default=None, choices=sorted(SCENARIOS),
                       help="override the scenario named in the config")
    p_run.set_defaults(func=_cmd_run)

    p_def = sub.add_parser("print-default-config",
                           help="dump the merged default configuration")
    p_def.add_argument("scenario", nargs="?", default=None)
    p_def.set_defaults(func=_cmd_print_default_config)

    p_list = sub.add_parser("list-scenarios", help="list available scenarios")
    p_list.set_defaults(func=_cmd_list_scenarios)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
