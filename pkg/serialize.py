from __future__ import annotations

import dataclasses
import json
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd
import serpy

from constants import CSV_FLOAT_FORMAT, GOLDEN_DIR
from errors import DomainError

GOLDEN_COLUMNS = ["b", "alpha", "theta", "y", "freq", "n_samples", "seed"]


class EnhancedJSONEncoder(json.JSONEncoder):
    """json encoder that also knows dataclasses, enums, numpy values and complex numbers."""

    def default(self, o):
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            res = dataclasses.asdict(o)
            self.remove_private(res)
            return res
        if isinstance(o, Enum):
            return o.name.lower()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, complex):
            return {"real": o.real, "imag": o.imag}
        return super().default(o)

    def remove_private(self, obj):
        if isinstance(obj, dict):
            rm_keys = [key for key in obj if str(key).startswith("_")]
            for key in rm_keys:
                del obj[key]
            for key in obj:
                self.remove_private(obj[key])
        if isinstance(obj, list):
            for o in obj:
                self.remove_private(o)


class ComplexPointSerializer(serpy.Serializer):
    amplitude = serpy.FloatField()
    phase = serpy.FloatField()


class OracleResultSerializer(serpy.Serializer):
    rate = serpy.FloatField()
    multiplier = serpy.FloatField()
    iterations = serpy.IntField()
    converged = serpy.BoolField()
    feasible = serpy.BoolField()
    power = serpy.FloatField()
    points = ComplexPointSerializer(many=True)
    weights = serpy.MethodField()
    bound_history = serpy.MethodField()

    def get_weights(self, obj) -> list[float]:
        return [float(w) for w in obj.weights]

    def get_bound_history(self, obj) -> list[float]:
        return [float(v) for v in obj.bound_history]


class ExponentReportSerializer(serpy.Serializer):
    window_db = serpy.MethodField()
    slope = serpy.FloatField()
    stderr = serpy.FloatField()
    points_used = serpy.IntField()

    def get_window_db(self, obj) -> list[float]:
        return [float(edge) for edge in obj.window_db]


class CheckResultSerializer(serpy.Serializer):
    name = serpy.StrField()
    status = serpy.MethodField()
    margin = serpy.FloatField()
    detail = serpy.StrField()

    def get_status(self, obj) -> str:
        return obj.status.name


class VerificationReportSerializer(serpy.Serializer):
    bits = serpy.IntField()
    snr = serpy.FloatField()
    inject_wrong_bisector = serpy.BoolField()
    passed = serpy.BoolField()
    checks = CheckResultSerializer(many=True)


def dumps(payload: Any, config: Mapping[str, Any] | None = None) -> str:
    """JSON text for payload, with the effective configuration under "config"."""
    if config is not None:
        payload = {"config": dict(config), **payload}
    return json.dumps(payload, cls=EnhancedJSONEncoder, indent=2) + "\n"


def comment_header(config: Mapping[str, Any]) -> str:
    return "".join(f"# {key} = {value}\n" for key, value in config.items())


def table_to_csv(frame: pd.DataFrame, config: Mapping[str, Any] | None = None) -> str:
    """CSV text with full-precision floats, preceded by the configuration as comments."""
    header = comment_header(config) if config else ""
    return header + frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def read_table(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def golden_path(name: str) -> Path:
    return Path(__file__).resolve().parent / GOLDEN_DIR / name


def read_golden(name: str) -> pd.DataFrame:
    frame = read_table(golden_path(name))
    missing = set(GOLDEN_COLUMNS) - set(frame.columns)
    if missing:
        raise DomainError(f"golden file {name} lacks columns {sorted(missing)}")
    return frame
