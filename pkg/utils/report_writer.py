"""
Deterministic JSON and CSV serialization of verification reports.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, IO, Optional, Union
import csv
import json
import logging
import math

import numpy as np

import config
from utils.conditions import CONVEXITY_NOTE
from utils.custom_types import RegionGrid
from utils.hermite import ComplexParam, CPoly

logger = logging.getLogger(__name__)

CSV_HEADER = ["re", "im", "min_margin", "admissible"]


def to_jsonable(value: Any) -> Any:
    """
    Convert report values into plain JSON types.

    Non-finite floats become None, complex numbers {"re", "im"}, numpy
    scalars and arrays Python floats and lists, enums their value.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    if isinstance(value, ComplexParam):
        return {"re": to_jsonable(value.re), "im": to_jsonable(value.im)}
    if isinstance(value, CPoly):
        return {"dimension": value.dimension, "basis": value.basis.value, "terms": to_jsonable(value.to_records())}
    if isinstance(value, Enum):
        return value.value
    return value


def build_report(
    command: str,
    run_config: Dict[str, Any],
    result: Any,
    tolerances: Optional[Dict[str, float]] = None,
    assumptions: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Wrap a result in the versioned report envelope.

    Args:
        command: CLI subcommand name
        run_config: fully resolved configuration (specs, z, grids, orders, seed)
        result: the checker's report
        tolerances: tolerances that decided pass/fail
        assumptions: declared, unverified hypotheses (growth flags)

    Returns:
        The envelope dict; contains no timestamps or host data
    """
    merged_assumptions = {"convexity_wording": CONVEXITY_NOTE}
    merged_assumptions.update(assumptions or {})
    return {
        "schema": config.SCHEMA_VERSION,
        "tool": config.TOOL_NAME,
        "version": config.TOOL_VERSION,
        "command": command,
        "config": to_jsonable(run_config),
        "tolerances": to_jsonable(tolerances or {}),
        "assumptions": to_jsonable(merged_assumptions),
        "result": to_jsonable(result),
    }


def dump_json(report: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(report: Dict[str, Any], path: Optional[Union[str, Path]], stream: Optional[IO[str]] = None) -> None:
    """Write to `path`, or to `stream` when no path is given."""
    text = dump_json(report)
    if path is None:
        stream.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Report written to {path}")


def _format_float(value: Optional[float]) -> str:
    if value is None or not math.isfinite(value):
        return "nan"
    return format(value, ".17g")


def write_region_csv(region: RegionGrid, target: Union[str, Path, IO[str]]) -> None:
    """Row-major cells under the header re,im,min_margin,admissible."""
    if isinstance(target, (str, Path)):
        path = Path(target)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            write_region_csv(region, handle)
        logger.info(f"Region grid written to {path}")
        return

    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for cell in region["cells"]:
        writer.writerow(
            [
                _format_float(cell["re"]),
                _format_float(cell["im"]),
                _format_float(cell["min_margin"]),
                "true" if cell["admissible"] else "false",
            ]
        )
