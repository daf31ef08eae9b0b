"""
Command line front end.

    python main.py transition --bits 2 --alpha 1 --theta 0.785
    python main.py capacity --bits 3 --snr-db -10:30:1
    python main.py figure1 --bits 3 --out figure1.csv
    python main.py verify --bits 3 --snr 10
    python main.py outage --bits 3 --rate 1 --policy genie --out outage.csv
    python main.py oracle --bits 2 --snr 1 --format json

Exit status: 0 on success, 1 on a numeric failure or a failed verification,
2 on a usage or domain error.
"""
from __future__ import annotations

import logging
import math
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from capacity_oracle import InputGrid, blahut_arimoto, default_families, rate_sweep
from constants import OutputFormat
from errors import DomainError, InsufficientDataError, NumericError
from fading_outage import FadingScenario, outage_curve, outage_exponent_fit, outage_semianalytic
from info_metrics import capacity, entropy_bits
from policy import GenieRotatedCapacity
from quantizer import ChannelParams, ComplexPoint, PhaseQuantizer, mc_transition_oracle, transition_row
from run_config import RunConfig, load_config
from serialize import (
    ExponentReportSerializer,
    OracleResultSerializer,
    VerificationReportSerializer,
    dumps,
    table_to_csv,
)
from utils import db_to_linear
from verification import run_verification

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2


def emit(text: str, path: str | None) -> None:
    """Write one complete output, to a file or stdout."""
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def emit_table(frame: pd.DataFrame, config: RunConfig, extra: dict | None = None) -> None:
    header = {**config.provenance(), **(extra or {})}
    if config.output_format is OutputFormat.JSON:
        emit(dumps({**(extra or {}), "rows": frame.to_dict(orient="records")}, header), config["out"])
    else:
        emit(table_to_csv(frame, header), config["out"])


def cmd_transition(config: RunConfig) -> int:
    q = PhaseQuantizer(config["bits"])
    point = ComplexPoint.from_alpha(config["alpha"], config["theta"])
    row = transition_row(q, point)
    frame = pd.DataFrame({
        "b": q.bits,
        "alpha": point.alpha,
        "theta": point.phase,
        "y": np.arange(q.sectors),
        "probability": row,
    })
    n_samples = config["mc_samples"]
    if n_samples > 0:
        frame["freq"] = mc_transition_oracle(q, point, n_samples, config["seed"], config["workers"])
        frame["n_samples"] = n_samples
        frame["seed"] = config["seed"]
    emit_table(frame, config, {"conditional_entropy_bits": f"{entropy_bits(row):.16e}"})
    return EXIT_OK


def cmd_capacity(config: RunConfig) -> int:
    grid = config["snr_db"]
    rates = [capacity(ChannelParams(float(snr), config["bits"])) for snr in db_to_linear(list(grid))]
    emit_table(pd.DataFrame({"snr_db": grid, "capacity_bits": rates}), config)
    return EXIT_OK


def cmd_figure1(config: RunConfig) -> int:
    q = PhaseQuantizer(config["bits"])
    frame = rate_sweep(q, default_families(q), config["snr_db"], workers=config["workers"])
    emit_table(frame, config)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    report = run_verification(
        config["bits"],
        config["snr"],
        inject_wrong_bisector=config["inject_wrong_bisector"],
        probe_samples=config["probe_samples"],
        seed=config["seed"],
        workers=config["workers"],
    )
    if config.output_format is OutputFormat.JSON:
        emit(dumps(VerificationReportSerializer(report).data, config.provenance()), config["out"])
    else:
        frame = pd.DataFrame(
            [(c.name, c.status.name, c.margin, c.detail) for c in report.checks],
            columns=["check", "status", "margin", "detail"],
        )
        emit_table(frame, config, {"passed": str(report.passed)})
    for failure in report.failures:
        logger.error("check %s failed, margin %.3e: %s", failure.name, failure.margin, failure.detail)
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_outage(config: RunConfig) -> int:
    policy = config["policy"]
    curve = outage_curve(
        config["bits"],
        config["snr_db"],
        config["rate"],
        policy,
        n_samples=config["samples"],
        seed=config["seed"],
        workers=config["workers"],
    )
    try:
        exponent = ExponentReportSerializer(outage_exponent_fit(curve, config["window_db"])).data
    except InsufficientDataError as error:
        logger.warning("exponent fit skipped: %s", error)
        exponent = {"window_db": list(config["window_db"]), "error": str(error)}

    extra = {}
    if isinstance(policy, GenieRotatedCapacity) and config["rate"] < config["bits"]:
        scenario = FadingScenario(config["bits"], 0.0, config["rate"], policy, config["samples"], config["seed"])
        extra["p_semianalytic"] = [
            outage_semianalytic(scenario.at_snr(float(rho))) for rho in db_to_linear(list(curve.snr_db))
        ]

    frame = curve.to_frame()
    if config.output_format is OutputFormat.JSON:
        payload = {"rows": frame.to_dict(orient="records"), "exponent": exponent, **extra}
        emit(dumps(payload, config.provenance()), config["out"])
        return EXIT_OK

    emit(table_to_csv(frame, config.provenance()), config["out"])
    exponent_text = dumps({"exponent": exponent, **extra}, config.provenance())
    if config["exponent_out"]:
        emit(exponent_text, config["exponent_out"])
    elif config["out"]:
        emit(exponent_text, str(Path(config["out"]).with_suffix(".exponent.json")))
    else:
        sys.stdout.write("".join(f"# {line}\n" for line in exponent_text.splitlines()))
    return EXIT_OK


def cmd_oracle(config: RunConfig) -> int:
    q = PhaseQuantizer(config["bits"])
    snr = config["snr"]
    grid = InputGrid.aligned(q, snr, config["phases"], config["radii"], config["radius_factor"])
    result = blahut_arimoto(q, grid, snr, tol=config["tol"], max_iter=config["max_iter"])
    reference = capacity(ChannelParams(snr, q.bits))
    if config.output_format is OutputFormat.JSON:
        payload = {"result": OracleResultSerializer(result).data, "capacity_bits": reference}
        emit(dumps(payload, config.provenance()), config["out"])
    else:
        frame = pd.DataFrame({
            "amplitude": [p.amplitude for p in result.points],
            "phase": [p.phase for p in result.points],
            "weight": result.weights,
        })
        summary = {
            "rate_bits": f"{result.rate:.16e}",
            "capacity_bits": f"{reference:.16e}",
            "multiplier": f"{result.multiplier:.16e}",
            "iterations": result.iterations,
            "converged": result.converged,
            "feasible": result.feasible,
        }
        emit_table(frame, config, summary)
    if not result.converged or not math.isfinite(result.rate):
        return EXIT_NUMERIC
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "transition": cmd_transition,
    "capacity": cmd_capacity,
    "figure1": cmd_figure1,
    "verify": cmd_verify,
    "outage": cmd_outage,
    "oracle": cmd_oracle,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = load_config(argv)
    except SystemExit as exit_request:
        return exit_request.code if isinstance(exit_request.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if config.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[config.command](config)
    except NumericError as error:
        logger.error("%s", error)
        return EXIT_NUMERIC
    except DomainError as error:
        logger.error("%s", error)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
