import io
import json
import math
import os
import tempfile
import unittest
from dataclasses import dataclass, field
from unittest import mock

import numpy as np
import pandas as pd

from test_utils.decorators import number

from capacity_oracle import OracleResult
from constants import CheckStatus, OutputFormat
from errors import DomainError
from fading_outage import ExponentReport
from quantizer import ComplexPoint
from serialize import (
    CheckResultSerializer,
    EnhancedJSONEncoder,
    ExponentReportSerializer,
    OracleResultSerializer,
    dumps,
    read_golden,
    read_table,
    table_to_csv,
)
from verification import CheckResult, VerificationReport


@dataclass
class Sample:
    label: str
    values: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict)


class TestSerialize(unittest.TestCase):

    @number("5.20")
    def test_encoder(self):
        text = json.dumps(
            {
                "sample": Sample("a", [1, 2], {"x": 1}),
                "format": OutputFormat.JSON,
                "array": np.arange(3),
                "scalar": np.float64(0.5),
                "gain": complex(1, -2),
            },
            cls=EnhancedJSONEncoder,
        )
        decoded = json.loads(text)
        self.assertEqual(decoded["sample"], {"label": "a", "values": [1, 2]})
        self.assertEqual(decoded["format"], "json")
        self.assertEqual(decoded["array"], [0, 1, 2])
        self.assertEqual(decoded["scalar"], 0.5)
        self.assertEqual(decoded["gain"], {"real": 1.0, "imag": -2.0})
        self.assertRaises(TypeError, lambda: json.dumps({"x": object()}, cls=EnhancedJSONEncoder))

    @number("5.21")
    def test_dumps(self):
        text = dumps({"rate": 1.5}, {"command": "oracle"})
        self.assertTrue(text.endswith("\n"))
        decoded = json.loads(text)
        self.assertEqual(list(decoded), ["config", "rate"])
        self.assertEqual(json.loads(dumps({"rate": 1.5})), {"rate": 1.5})

    @number("5.22")
    def test_csv(self):
        frame = pd.DataFrame({"snr_db": [0.0, 10.0], "rate_bits": [math.pi, 1 / 3]})
        text = table_to_csv(frame, {"command": "capacity", "bits": "3"})
        lines = text.splitlines()
        self.assertEqual(lines[:2], ["# command = capacity", "# bits = 3"])
        self.assertEqual(lines[2], "snr_db,rate_bits")
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "table.csv")
            with open(path, "w") as handle:
                handle.write(text)
            back = read_table(path)
        # 17 significant digits survive the round trip exactly
        self.assertEqual(list(back.rate_bits), [math.pi, 1 / 3])
        self.assertEqual(table_to_csv(frame), frame.to_csv(index=False, float_format="%.16e", lineterminator="\n"))

    @number("5.23")
    def test_golden(self):
        golden = read_golden("transition_oracle.csv")
        self.assertGreater(len(golden), 0)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "broken.csv")
            pd.DataFrame({"b": [1], "alpha": [1.0]}).to_csv(path, index=False)
            with mock.patch("serialize.golden_path", return_value=path):
                self.assertRaises(DomainError, lambda: read_golden("broken.csv"))

    @number("5.24")
    def test_serializers(self):
        result = OracleResult(
            rate=0.75,
            weights=np.array([0.25, 0.75]),
            multiplier=0.1,
            iterations=12,
            converged=True,
            bound_history=[0.5, 0.7],
            points=[ComplexPoint(0.0), ComplexPoint(2.0, 1.0)],
        )
        data = OracleResultSerializer(result).data
        self.assertEqual(data["weights"], [0.25, 0.75])
        self.assertAlmostEqual(data["power"], 3.0)
        self.assertEqual(data["points"][1], {"amplitude": 2.0, "phase": 1.0})
        self.assertTrue(data["feasible"])
        json.loads(dumps({"result": data}))

        exponent = ExponentReportSerializer(ExponentReport((20.0, 40.0), -1.02, 0.01, 5)).data
        self.assertEqual(exponent["window_db"], [20.0, 40.0])
        self.assertEqual(exponent["points_used"], 5)

        check = CheckResultSerializer(CheckResult("kkt_support", CheckStatus.FAIL, -0.13, "gap")).data
        self.assertEqual(check["status"], "FAIL")
        report = VerificationReport(2, 1.0, True)
        report.add(CheckResult("kkt_support", CheckStatus.FAIL, -0.13, "gap"))
        self.assertFalse(report.passed)
        self.assertEqual([c.name for c in report.failures], ["kkt_support"])
        text = io.StringIO(dumps({"checks": [check]})).read()
        self.assertIn('"FAIL"', text)
