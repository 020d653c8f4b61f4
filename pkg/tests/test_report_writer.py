import io
import json
import math

import numpy as np

import config
from utils.custom_types import PolyBasis
from utils.hermite import ComplexParam, CPoly
from utils.report_writer import CSV_HEADER, build_report, dump_json, to_jsonable, write_json, write_region_csv


def sample_region():
    cell = {"radius": 0.5, "angle": 0.0, "error": None}
    return {
        "cells": [
            dict(cell, re=0.5, im=0.0, min_margin=0.25, admissible=True),
            dict(cell, re=-0.5, im=0.125, min_margin=-1.84, admissible=False),
            dict(cell, re=0.0, im=0.5, min_margin=math.nan, admissible=False, error="overflow"),
        ],
        "error_cells": 1,
    }


class TestToJsonable:
    def test_non_finite_floats(self):
        assert to_jsonable([math.nan, math.inf, -np.inf, 1.5]) == [None, None, None, 1.5]

    def test_numpy_and_complex(self):
        value = {"a": np.float64(2.0), "b": np.array([1, 2]), "c": np.bool_(True), "z": 1 - 2j}
        assert to_jsonable(value) == {"a": 2.0, "b": [1, 2], "c": True, "z": {"re": 1.0, "im": -2.0}}

    def test_domain_types(self):
        assert to_jsonable(ComplexParam(0.3, -0.4)) == {"re": 0.3, "im": -0.4}
        assert to_jsonable(PolyBasis.HERMITE) == "hermite"
        encoded = to_jsonable(CPoly(1, {(1,): 0.5}, PolyBasis.HERMITE))
        assert encoded["dimension"] == 1
        assert encoded["basis"] == "hermite"

    def test_keys_become_strings(self):
        assert to_jsonable({1: "x"}) == {"1": "x"}


class TestEnvelope:
    def test_keys(self):
        report = build_report("check-local", {"z": ComplexParam(0.5, 0.0)}, {"holds": True}, {"margin": 1e-9})
        assert set(report) == {"schema", "tool", "version", "command", "config", "tolerances", "assumptions", "result"}
        assert report["schema"] == config.SCHEMA_VERSION
        assert report["tool"] == config.TOOL_NAME
        assert report["config"]["z"] == {"re": 0.5, "im": 0.0}
        assert "convexity_wording" in report["assumptions"]

    def test_assumptions_merge(self):
        report = build_report("lens", {}, {}, assumptions={"growth_condition_verified": False})
        assert report["assumptions"]["growth_condition_verified"] is False
        assert "convexity_wording" in report["assumptions"]

    def test_deterministic_dump(self):
        first = dump_json(build_report("rstar", {"b": 1, "a": 2}, {"r_star": math.nan}))
        second = dump_json(build_report("rstar", {"a": 2, "b": 1}, {"r_star": math.nan}))
        assert first == second
        assert json.loads(first)["result"]["r_star"] is None
        assert first.endswith("\n")

    def test_write_to_stream_and_path(self, tmp_path):
        report = build_report("rstar", {}, {"r_star": 0.5})
        stream = io.StringIO()
        write_json(report, None, stream)
        target = tmp_path / "nested" / "report.json"
        write_json(report, target)
        assert target.read_text(encoding="utf-8") == stream.getvalue()


class TestRegionCsv:
    def test_rows(self):
        stream = io.StringIO()
        write_region_csv(sample_region(), stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == ",".join(CSV_HEADER) == "re,im,min_margin,admissible"
        assert lines[1] == "0.5,0,0.25,true"
        assert lines[2] == "-0.5,0.125,-1.8400000000000001,false"
        assert lines[3] == "0,0.5,nan,false"

    def test_path(self, tmp_path):
        target = tmp_path / "out" / "region.csv"
        write_region_csv(sample_region(), target)
        assert target.read_text(encoding="utf-8").startswith("re,im,min_margin,admissible\n")
