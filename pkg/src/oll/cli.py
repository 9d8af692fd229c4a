"""Scenario runner: `oll <scenario> [--config cfg.toml] [--seed N]
[--threads N] [--out DIR]`, plus `oll list` and `oll describe <name>`.

Each run writes series.csv (with #-prefixed metadata lines), summary.json
(key results, resolved config, seed, wall time) and figure.png into the
output directory.  Given the same config and seed the CSV is
byte-identical; timestamps live only in summary.json.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import time
from pathlib import Path

try:
    import tomllib
except ImportError:                                   # python < 3.11
    import tomli as tomllib

from . import __version__
from .scenarios import REGISTRY

DEFAULT_SEED = 1234


class ConfigError(ValueError):
    pass


def resolve_config(scenario, overrides):
    cfg = dict(scenario.defaults)
    for key, value in overrides.items():
        if key not in cfg:
            raise ConfigError(
                f"unknown config key {key!r} for scenario {scenario.name!r}; "
                f"known keys: {sorted(cfg)}")
        if isinstance(cfg[key], float) and isinstance(value, int):
            value = float(value)
        if cfg[key] is not None and not isinstance(value, type(cfg[key])):
            raise ConfigError(
                f"config key {key!r} expects {type(cfg[key]).__name__}, "
                f"got {type(value).__name__}")
        cfg[key] = value
    return cfg


def _fmt(value):
    value = float(value)
    if value != value:                 # NaN (e.g. undefined winding)
        return "nan"
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_series(path, scenario_name, seed, cfg, out):
    lines = [f"# oll {__version__} scenario={scenario_name} seed={seed}",
             f"# config: {json.dumps(cfg, sort_keys=True)}",
             ",".join(out.columns)]
    for row in out.rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _jsonable(value):
    import numpy as np
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def write_summary(path, scenario_name, seed, cfg, out, wall_time):
    payload = {
        "scenario": scenario_name,
        "artifact_version": __version__,
        "seed": seed,
        "config": _jsonable(cfg),
        "results": _jsonable(out.results),
        "wall_time_s": wall_time,
        "finished_at": datetime.datetime.now(datetime.timezone.utc)
        .isoformat(),
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_figure(path, scenario_name, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    x = out.rows[:, 0]
    for k, name in enumerate(out.columns[1:], start=1):
        y = out.rows[:, k]
        if out.plot == "steps":
            ax.step(x, y, where="mid", label=name)
        elif out.plot == "profile":
            ax.plot(x, y, "-o", ms=2.5, lw=1.0, label=name)
        else:
            ax.plot(x, y, lw=1.4, label=name)
    ax.set_xlabel(out.columns[0])
    ax.set_ylabel(out.ylabel or "value")
    ax.set_title(scenario_name)
    if len(out.columns) > 2 or out.columns[1] != out.ylabel:
        ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def list_scenarios(file=None):
    file = file or sys.stdout
    width = max(len(name) for name in REGISTRY)
    for name in sorted(REGISTRY):
        print(f"{name:<{width}}  {REGISTRY[name].description}", file=file)


def describe(name, file=None):
    file = file or sys.stdout
    sc = REGISTRY[name]
    print(f"{sc.name}: {sc.description}", file=file)
    print(f"reproduces: {sc.figure_analog}", file=file)
    print(f"default seed: {DEFAULT_SEED}", file=file)
    print("parameters:", file=file)
    for key, value in sc.defaults.items():
        print(f"  {key} = {value!r}", file=file)


def run_scenario(name, config_path=None, seed=DEFAULT_SEED, threads=1,
                 out_dir=".", figure=True):
    sc = REGISTRY[name]
    overrides = {}
    if config_path is not None:
        with open(config_path, "rb") as fh:
            overrides = tomllib.load(fh)
        # allow a [scenario-name] or flat table
        if name in overrides and isinstance(overrides[name], dict):
            overrides = overrides[name]
    cfg = resolve_config(sc, overrides)
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    output = sc.runner(cfg, seed, threads)
    wall = time.perf_counter() - start
    write_series(out_path / "series.csv", name, seed, cfg, output)
    write_summary(out_path / "summary.json", name, seed, cfg, output, wall)
    if figure:
        write_figure(out_path / "figure.png", name, output)
    return output


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="oll",
        description="Desk-scale driven-dissipative many-body scenarios")
    parser.add_argument("command",
                        help="scenario name, 'list', or 'describe'")
    parser.add_argument("target", nargs="?",
                        help="scenario name for 'describe'")
    parser.add_argument("--config", default=None, help="TOML config file")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("OLL_THREADS", "1")))
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--no-figure", action="store_true",
                        help="skip rendering figure.png")
    args = parser.parse_args(argv)

    if args.command == "list":
        list_scenarios()
        return 0
    if args.command == "describe":
        if args.target not in REGISTRY:
            print(f"unknown scenario {args.target!r}", file=sys.stderr)
            return 2
        describe(args.target)
        return 0
    if args.command not in REGISTRY:
        print(f"unknown scenario {args.command!r}; try 'oll list'",
              file=sys.stderr)
        return 2
    try:
        output = run_scenario(args.command, args.config, args.seed,
                              args.threads, args.out,
                              figure=not args.no_figure)
    except (ConfigError, tomllib.TOMLDecodeError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:                      # numerical failure
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    for key, value in output.results.items():
        print(f"{key} = {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
