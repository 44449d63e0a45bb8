"""``sphbt``: run a benchmark scenario and write CSV tables plus a run manifest.

Usage::

    sphbt <subcommand> [--config FILE] [--key value ...] [--serial] [--out DIR]

Keys are dotted paths into the scenario defaults (``--grid.dr 0.2``); a bare
leaf name works when it is unambiguous (``--dr 0.2``).  Values are parsed
as YAML scalars, and a comma-separated value becomes a list.
"""

from __future__ import annotations

import argparse
import contextlib
import copy
import json
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .errors import ConfigurationError, ConvergenceError, NumericError
from .scenarios import SCENARIOS, Result, Table, defaults_for

__all__ = ["RunConfig", "parse_config", "run", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CONVERGENCE = 0, 2, 3, 4

#: Environment variable holding the BLAS/FFT thread cap.
THREADS_ENV = "SPHBT_THREADS"

# leaves that may be zero or negative
_SIGNED = {"pulse.ir_delay"}
_CHOICES = {
    "potential.kind": {"coulomb", "effective", "two-center"},
    "imaginary.estimator": {"rayleigh", "decay"},
    "gauge": {"velocity", "length"},
}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    out: Path
    serial: bool = False
    sources: list[str] = field(default_factory=list)


def _leaves(tree: dict, prefix: str = ""):
    for key, val in tree.items():
        path = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _leaves(val, path + ".")
        else:
            yield path, val


def _coerce(path: str, value, default):
    """Convert ``value`` to the type of ``default``; lists may be given as scalars."""
    if isinstance(default, list):
        items = value if isinstance(value, (list, tuple)) else [value]
        proto = default[0] if default else None
        out = [_coerce(path, v, proto) if proto is not None else v for v in items]
        if not out:
            raise ConfigurationError(f"{path}: empty list")
        return out
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "yes", "no", "1", "0"):
            return value.lower() in ("true", "yes", "1")
        raise ConfigurationError(f"{path}: expected true/false, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, bool) or not float(_number(path, value)).is_integer():
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return int(_number(path, value))
    if isinstance(default, float):
        return float(_number(path, value))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _number(path: str, value):
    if isinstance(value, bool):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}") from None


def _validate(path: str, value) -> None:
    items = value if isinstance(value, list) else [value]
    for v in items:
        if isinstance(v, (int, float)) and not isinstance(v, bool) and path not in _SIGNED:
            if not v > 0 or not np.isfinite(v):
                raise ConfigurationError(f"{path}: must be positive and finite, got {v!r}")
        if path in _CHOICES and v not in _CHOICES[path]:
            raise ConfigurationError(f"{path}: must be one of {sorted(_CHOICES[path])}, got {v!r}")


def _set(tree: dict, defaults: dict, path: str, value) -> None:
    keys = path.split(".")
    node, dnode = tree, defaults
    for i, key in enumerate(keys):
        where = ".".join(keys[: i + 1])
        if not isinstance(dnode, dict) or key not in dnode:
            raise ConfigurationError(f"{where}: unknown key")
        if i == len(keys) - 1:
            if isinstance(dnode[key], dict):
                raise ConfigurationError(f"{where}: is a section, give one of its keys")
            node[key] = _coerce(where, value, dnode[key])
        else:
            node, dnode = node[key], dnode[key]


def _merge(tree: dict, defaults: dict, data: dict, prefix: str = "") -> None:
    if not isinstance(data, dict):
        raise ConfigurationError(f"{prefix.rstrip('.') or '<root>'}: expected a mapping")
    for key, val in data.items():
        path = f"{prefix}{key}"
        if isinstance(val, dict):
            sub = defaults
            for k in path.split("."):
                if not isinstance(sub, dict) or k not in sub:
                    raise ConfigurationError(f"{path}: unknown key")
                sub = sub[k]
            _merge(tree, defaults, val, path + ".")
        else:
            _set(tree, defaults, path, val)


def _resolve_key(defaults: dict, key: str) -> str:
    paths = [p for p, _ in _leaves(defaults)]
    if key in paths:
        return key
    hits = [p for p in paths if p.rsplit(".", 1)[-1] == key]
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        raise ConfigurationError(f"{key}: ambiguous, use one of {hits}")
    if isinstance(defaults.get(key), dict):
        raise ConfigurationError(f"{key}: is a section, give one of its keys")
    raise ConfigurationError(f"{key}: unknown key")


def _parse_value(text: str):
    if "," in text and not text.strip().startswith("["):
        return [yaml.safe_load(t) for t in text.split(",") if t.strip()]
    return yaml.safe_load(text)


def parse_config(
    subcommand: str,
    source: str | os.PathLike | None = None,
    overrides: list[tuple[str, str]] | dict | None = None,
    out: str | os.PathLike | None = None,
    serial: bool = False,
) -> RunConfig:
    """Defaults, then the config file (JSON or YAML), then flag overrides."""
    defaults = defaults_for(subcommand)
    params = copy.deepcopy(defaults)
    sources = ["defaults"]
    if source is not None:
        path = Path(source)
        try:
            data = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ConfigurationError(f"config file {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config file {path}: malformed ({exc})") from None
        _merge(params, defaults, data or {})
        sources.append(str(path))
    items = overrides.items() if isinstance(overrides, dict) else (overrides or [])
    for key, value in items:
        path = _resolve_key(defaults, key)
        _set(params, defaults, path, _parse_value(value) if isinstance(value, str) else value)
        sources.append(f"--{path}")
    for path, value in _leaves(params):
        _validate(path, value)
    out_dir = Path(out) if out is not None else Path("sphbt-out") / subcommand
    return RunConfig(subcommand, params, out_dir, serial, sources)


# --- output ------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(table: Table, directory: Path, subcommand: str) -> Path:
    path = directory / f"{table.name}.csv"
    lines = [f"# sphbt {subcommand}: {table.name}", "# units: atomic units"]
    lines += [f"# {k}: {v}" for k, v in table.meta.items()]
    lines.append(",".join(table.columns))
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_manifest(cfg: RunConfig, result: Result, files: list[Path]) -> Path:
    manifest = {
        "subcommand": cfg.subcommand,
        "parameters": cfg.params,
        "sources": cfg.sources,
        "serial": cfg.serial,
        "threads": os.environ.get(THREADS_ENV),
        "files": [p.name for p in files],
        "summary": {k: float(v) if isinstance(v, (float, np.floating)) else v for k, v in result.summary.items()},
        "software": {
            "sphbt": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    path = cfg.out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _thread_limit(cfg: RunConfig):
    limit = 1 if cfg.serial else os.environ.get(THREADS_ENV)
    if limit is None:
        return contextlib.nullcontext()
    try:
        limit = int(limit)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {limit!r}") from None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=limit)


def run(cfg: RunConfig) -> tuple[Result, list[Path]]:
    """Execute the scenario and write its tables and manifest into ``cfg.out``."""
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"out: cannot create {cfg.out} ({exc.strerror})") from None
    if not os.access(cfg.out, os.W_OK):
        raise ConfigurationError(f"out: {cfg.out} is not writable")
    with _thread_limit(cfg):
        result = SCENARIOS[cfg.subcommand](cfg.params)
    files = [write_table(t, cfg.out, cfg.subcommand) for t in result.tables]
    files.append(write_manifest(cfg, result, files))
    return result, files


# --- entry point -------------------------------------------------------------------------


def _split_overrides(extra: list[str]) -> list[tuple[str, str]]:
    pairs = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or tok == "--":
            raise ConfigurationError(f"unexpected argument {tok!r}; overrides look like --key value")
        if "=" in tok:
            key, value = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigurationError(f"{tok[2:]}: missing value")
            key, value = tok[2:], extra[i + 1]
            i += 2
        pairs.append((key, value))
    return pairs


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sphbt",
        description="Fast spherical Bessel transform benchmarks and TDSE scenarios.",
        epilog=f"Any default can be overridden with --key value. {THREADS_ENV} caps the thread count.",
    )
    ap.add_argument("subcommand", choices=sorted(SCENARIOS))
    ap.add_argument("--config", help="JSON or YAML file with parameter overrides")
    ap.add_argument("--out", help="output directory (default sphbt-out/<subcommand>)")
    ap.add_argument("--serial", action="store_true", help="single-threaded, deterministic ordering")
    ap.add_argument("--show-defaults", action="store_true", help="print the resolved parameters and exit")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    args, extra = ap.parse_known_args(argv)
    try:
        cfg = parse_config(args.subcommand, args.config, _split_overrides(extra), args.out, args.serial)
        if args.show_defaults:
            print(yaml.safe_dump(cfg.params, sort_keys=False), end="")
            return EXIT_OK
        result, files = run(cfg)
    except ConfigurationError as exc:
        print(f"sphbt {args.subcommand}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"sphbt {args.subcommand}: did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except NumericError as exc:
        print(f"sphbt {args.subcommand}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"sphbt {args.subcommand}: invalid value: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in files:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
