"""
Command line parsing and the optional JSON configuration file.

Precedence is flags > config file > built-in defaults. Config-file values are
turned back into strings and installed as parser defaults, so they go through
the same range-checking converters as flags.
"""
from __future__ import annotations

import argparse
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

from constants import (
    BA_MAX_ITER,
    BA_TOLERANCE,
    DEFAULT_SEED,
    ORACLE_PHASES,
    ORACLE_RADII,
    ORACLE_RADIUS_FACTOR,
    RATE_TABLE_SIZE,
    OutputFormat,
)
from errors import DomainError
from policy import FixedPsk, RatePolicy, parse_policy

COMMANDS = ("transition", "capacity", "figure1", "verify", "outage", "oracle")

# options that do not change the primary output and stay out of the provenance header
NOT_ECHOED = {"out", "exponent_out", "workers", "verbose", "config", "format"}


def bits_type(text: str) -> int:
    value = _parse(int, text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"bits must be >= 1, got {value}")
    return value


def real_type(text: str) -> float:
    value = _parse(float, text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def nonnegative_float(text: str) -> float:
    value = real_type(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a value >= 0, got {value}")
    return value


def positive_float(text: str) -> float:
    value = real_type(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a value > 0, got {value}")
    return value


def nonnegative_int(text: str) -> int:
    value = _parse(int, text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {value}")
    return value


def positive_int(text: str) -> int:
    value = _parse(int, text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def seed_type(text: str) -> int:
    """Decimal or 0x-prefixed seed below 2^64."""
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {value}")
    return value


def db_grid(text: str) -> tuple[float, ...]:
    """
    "start:stop:step" (stop included when it lands on the grid) or a comma
    separated list of dB values.
    """
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (real_type(part) for part in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"empty grid {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + k * step for k in range(count))
    values = tuple(real_type(part) for part in text.split(",") if part.strip())
    if not values:
        raise argparse.ArgumentTypeError("empty SNR grid")
    return values


def window_type(text: str) -> tuple[float, float]:
    parts = text.replace(",", ":").split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"window must be low:high, got {text!r}")
    low, high = sorted(real_type(part) for part in parts)
    return low, high


def table_size_type(text: str) -> tuple[int, int]:
    """"256" or "256x128"."""
    parts = text.lower().split("x")
    if len(parts) not in (1, 2):
        raise argparse.ArgumentTypeError(f"bad table size {text!r}")
    sizes = [positive_int(part) for part in parts]
    if min(sizes) < 3:
        raise argparse.ArgumentTypeError(f"table needs at least 3 entries per axis, got {text!r}")
    return (sizes[0], sizes[-1])


def policy_type(text: str) -> RatePolicy:
    try:
        return parse_policy(text)
    except DomainError as error:
        raise argparse.ArgumentTypeError(str(error)) from None


def format_type(text: str) -> OutputFormat:
    try:
        return OutputFormat[text.upper()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"format must be csv or json, got {text!r}") from None


def _parse(kind: type, text: str):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected {kind.__name__}, got {text!r}") from None


@dataclass
class RunConfig:
    """Parsed options of one command."""

    command: str
    options: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.options[key]

    @property
    def verbose(self) -> bool:
        return bool(self.options.get("verbose"))

    @property
    def output_format(self) -> OutputFormat:
        return self.options.get("format", OutputFormat.CSV)

    def provenance(self) -> dict[str, str]:
        """Options that determine the output, rendered for file headers."""
        echo = {"command": self.command}
        for key, value in self.options.items():
            if key in NOT_ECHOED:
                continue
            if isinstance(value, RatePolicy):
                value = value.name
            elif isinstance(value, tuple):
                value = ",".join(f"{v:g}" if isinstance(v, float) else str(v) for v in value)
            echo[key] = str(value)
        return echo


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of defaults keyed by command")
    common.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level on stderr")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", type=format_type, default="csv", help="csv or json (default: %(default)s)")
    common.add_argument("--seed", type=seed_type, default=hex(DEFAULT_SEED), help="random seed (default: %(default)s)")
    common.add_argument("--workers", type=positive_int, default="1", help="worker threads (default: %(default)s)")
    return common


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Capacity and outage of the phase-quantized complex AWGN channel.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common_options()
    sub = {}

    p = commands.add_parser("transition", parents=[common], help="transition row and H(Y|U) of one input point")
    p.add_argument("--bits", type=bits_type, default="2", help="quantizer bits (default: %(default)s)")
    p.add_argument("--alpha", type=nonnegative_float, default="1", help="input SNR |u|^2 (default: %(default)s)")
    p.add_argument("--theta", type=real_type, default="0", help="input phase in radians (default: %(default)s)")
    p.add_argument("--mc-samples", type=nonnegative_int, default="0",
                   help="also run the sampling oracle with this many draws (default: %(default)s)")
    sub["transition"] = p

    p = commands.add_parser("capacity", parents=[common], help="closed-form capacity over an SNR grid")
    p.add_argument("--bits", type=bits_type, default="3", help="quantizer bits (default: %(default)s)")
    p.add_argument("--snr-db", type=db_grid, default="-10:30:1", help="SNR grid in dB (default: %(default)s)")
    sub["capacity"] = p

    p = commands.add_parser("figure1", parents=[common], help="rates of PSK, Gaussian and optimal inputs")
    p.add_argument("--bits", type=bits_type, default="3", help="quantizer bits (default: %(default)s)")
    p.add_argument("--snr-db", type=db_grid, default="-10:30:1", help="SNR grid in dB (default: %(default)s)")
    sub["figure1"] = p

    p = commands.add_parser("verify", parents=[common], help="numerical certificate for one (bits, SNR)")
    p.add_argument("--bits", type=bits_type, default="3", help="quantizer bits (default: %(default)s)")
    p.add_argument("--snr", type=positive_float, default="10", help="linear SNR P' (default: %(default)s)")
    p.add_argument("--inject-wrong-bisector", action="store_true",
                   help="test the PSK rotated onto the sector edges instead (negative control)")
    p.add_argument("--probe-samples", type=nonnegative_int, default="200000",
                   help="draws per point of the outage exponent probe, 0 skips it (default: %(default)s)")
    sub["verify"] = p

    p = commands.add_parser("outage", parents=[common], help="Rayleigh fading outage curve and exponent")
    p.add_argument("--bits", type=bits_type, default="2", help="quantizer bits (default: %(default)s)")
    p.add_argument("--snr-db", type=db_grid, default="0:40:5", help="average SNR grid in dB (default: %(default)s)")
    p.add_argument("--rate", type=nonnegative_float, default="1", help="target rate in bits (default: %(default)s)")
    p.add_argument("--policy", type=policy_type, default="genie",
                   help="genie or fixed-psk:<m>[:<rotation>] (default: %(default)s)")
    p.add_argument("--samples", type=positive_int, default="1000000", help="draws per SNR (default: %(default)s)")
    p.add_argument("--window-db", type=window_type, default="20:40", help="exponent fit window (default: %(default)s)")
    p.add_argument("--table-size", type=table_size_type, default="x".join(map(str, RATE_TABLE_SIZE)),
                   help="rate table size for fixed-psk (default: %(default)s)")
    p.add_argument("--exponent-out", help="exponent JSON file (default: next to --out)")
    sub["outage"] = p

    p = commands.add_parser("oracle", parents=[common], help="Blahut-Arimoto on the bisector-aligned grid")
    p.add_argument("--bits", type=bits_type, default="2", help="quantizer bits (default: %(default)s)")
    p.add_argument("--snr", type=positive_float, default="1", help="power budget P' (default: %(default)s)")
    p.add_argument("--phases", type=positive_int, default=str(ORACLE_PHASES), help="grid phases (default: %(default)s)")
    p.add_argument("--radii", type=positive_int, default=str(ORACLE_RADII),
                   help="grid radii including 0 (default: %(default)s)")
    p.add_argument("--radius-factor", type=positive_float, default=str(ORACLE_RADIUS_FACTOR),
                   help="largest radius over sqrt(P') (default: %(default)s)")
    p.add_argument("--tol", type=positive_float, default=repr(BA_TOLERANCE), help="bound gap in bits (default: %(default)s)")
    p.add_argument("--max-iter", type=positive_int, default=str(BA_MAX_ITER), help="iteration cap (default: %(default)s)")
    sub["oracle"] = p
    return parser, sub


def _config_value(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def apply_config_file(path: str, parser: argparse.ArgumentParser, sub: dict[str, argparse.ArgumentParser]) -> None:
    """Install the values of a JSON config file as defaults of each command."""
    try:
        with open(path) as handle:
            content = json.load(handle)
    except (OSError, json.JSONDecodeError) as error:
        parser.error(f"cannot read config file {path}: {error}")
    if not isinstance(content, dict):
        parser.error(f"config file {path} must hold a JSON object keyed by command")
    for command, values in content.items():
        if command not in sub or not isinstance(values, dict):
            parser.error(f"config file {path}: unknown command section {command!r}")
        known = {action.dest for action in sub[command]._actions}
        defaults = {}
        for key, value in values.items():
            dest = key.replace("-", "_")
            if dest not in known or dest in ("help", "config"):
                parser.error(f"config file {path}: unknown option {key!r} for {command}")
            defaults[dest] = _config_value(value)
        sub[command].set_defaults(**defaults)


def load_config(argv: Sequence[str] | None = None) -> RunConfig:
    """
    Parse argv (default sys.argv[1:]).

    :raises SystemExit: usage errors, with status 2.
    """
    parser, sub = build_parser()
    locator = argparse.ArgumentParser(add_help=False)
    locator.add_argument("--config")
    located, _ = locator.parse_known_args(argv)
    if located.config:
        apply_config_file(located.config, parser, sub)
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    if command == "outage" and isinstance(args["policy"], FixedPsk):
        args["policy"] = replace(args["policy"], table_size=args["table_size"])
    return RunConfig(command, args)
