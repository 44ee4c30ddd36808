"""Command-line entry point.

Usage::

    perfpac <command> [--config FILE.toml] [--<field> VALUE ...]

Commands: ``gen``, ``sweep``, ``rerm``, ``bounds``, ``lowerbound``,
``ingest-check``. A config file is TOML with the command's fields at top level
(an optional ``[<command>]`` table overrides top-level keys). Each field can
also be set with ``--field-name VALUE``; the value is read as a TOML literal
(``0.5``, ``true``, ``[0, 0.5, 1]``, ``"x"``) and falls back to a bare string.

Outputs: ``<out>.json`` (sorted keys, resolved config, config hash, seeds) and,
for ``sweep``, ``rerm`` and ``gen``, a flat ``<out>.csv``.

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric divergence.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import typing
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import experiment as E
from .data import emit_csv
from .errors import (
    ConstraintViolation,
    DomainError,
    Infeasible,
    NonFiniteLoss,
    PerfpacError,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def parse_literal(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _coerce(cls, name, value):
    hint = typing.get_type_hints(cls).get(name)
    base = typing.get_args(hint)[0] if typing.get_origin(hint) is typing.Union else hint
    if value is None:
        return None
    if base is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if base is float and not isinstance(value, (int, float)) or base is int and (
            not isinstance(value, int) or isinstance(value, bool)):
        raise ConfigError(f"field {name!r} expects {base.__name__}, got {value!r}")
    if base is bool and not isinstance(value, bool):
        raise ConfigError(f"field {name!r} expects true/false, got {value!r}")
    if base is list and not isinstance(value, list):
        raise ConfigError(f"field {name!r} expects a list, got {value!r}")
    if base is list:
        return [float(v) if isinstance(v, int) and name in ("grid", "params", "split", "exact_probs") else v
                for v in value]
    return value


def build_config(command: str, config_path=None, overrides=()):
    cls = E.CONFIG_TYPES[command]
    names = set(E.config_fields(cls))
    raw = {}
    if config_path:
        try:
            doc = tomllib.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        section = doc.pop(command, {})
        raw.update({k: v for k, v in doc.items() if not isinstance(v, dict)})
        raw.update(section)
    it = iter(overrides)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            try:
                val = next(it)
            except StopIteration:
                raise ConfigError(f"flag {tok} needs a value") from None
        raw[key.replace("-", "_")] = parse_literal(val)
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"unknown field(s) for {command}: {', '.join(unknown)}")
    kw = {k: _coerce(cls, k, v) for k, v in raw.items()}
    return cls(**kw)


def _write_json(path, record):
    Path(path).write_text(json.dumps(record, sort_keys=True, indent=1, allow_nan=False) + "\n", encoding="utf-8")


def _write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _ensure_parent(out):
    parent = Path(out).parent
    parent.mkdir(parents=True, exist_ok=True)


def run(command: str, cfg) -> int:
    _ensure_parent(cfg.out)
    code = EXIT_OK
    if command == "sweep":
        res = E.run_sweep(cfg)
        _write_csv(cfg.out + ".csv", E.sweep_csv_rows(res))
        code = EXIT_NUMERIC if res["failed"] else EXIT_OK
    elif command == "rerm":
        res = E.run_rerm(cfg)
        _write_csv(cfg.out + ".csv", E.rerm_csv_rows(res))
    elif command == "bounds":
        res = E.report_bounds(cfg)
    elif command == "lowerbound":
        res = E.demo_lower_bound(cfg)
    elif command == "gen":
        ds, res = E.generate(cfg)
        emit_csv(ds, cfg.out + ".csv")
    else:
        res = E.ingest_check(cfg)
    _write_json(cfg.out + ".json", res)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="perfpac", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(E.CONFIG_TYPES))
    parser.add_argument("--config", default=None, help="TOML config file")
    args, rest = parser.parse_known_args(argv)
    try:
        cfg = build_config(args.command, args.config, rest)
        if hasattr(cfg, "resolve"):
            cfg.resolve()
    except (ConfigError, ConstraintViolation, DomainError, Infeasible, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(args.command, cfg)
    except (ConstraintViolation, DomainError, Infeasible) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteLoss as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PerfpacError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
