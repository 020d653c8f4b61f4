from markdown_pdf import MarkdownPdf, Section
from pathlib import Path
from typing import Any, Dict, List, Tuple
import json
import logging

logger = logging.getLogger(__name__)

# Result fields surfaced in the summary table, in display order
HEADLINE_FIELDS = [
    "holds",
    "passed",
    "monotone",
    "min_margin",
    "argmin_t",
    "min_increment",
    "admissible_fraction",
    "admissible_cells",
    "error_cells",
    "c_P",
    "contains_z",
    "r_star",
    "binding",
    "min_global_margin",
    "mean_square",
    "probe",
    "second_order_coefficient",
    "relative_gap",
    "Fpp_positive",
    "ratio_concave",
    "hessian_psd",
    "flagged",
    "flag_reason",
]

# Nested result records rendered as their own table
HEADLINE_GROUPS = ["endpoints", "two_point", "boundary", "lens"]

REPORT_PARTS = [
    ("config", "Configuration"),
    ("tolerances", "Tolerances"),
    ("assumptions", "Assumptions"),
]

TABLE_CSS = "table {border-collapse: collapse;} th, td {border: 1px solid #999; padding: 2px 6px;}"


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, (dict, list)):
        return f"`{json.dumps(value, sort_keys=True)}`"
    return str(value)


def _table(rows: Dict[str, Any]) -> List[str]:
    lines = ["| key | value |", "|---|---|"]
    for key in sorted(rows):
        lines.append(f"| {key} | {_cell(rows[key])} |")
    return lines


def _result_lines(result: Any) -> List[str]:
    if not isinstance(result, dict):
        return [_cell(result)]
    headline = {key: result[key] for key in HEADLINE_FIELDS if key in result}
    lines = _table(headline) if headline else ["(no headline fields)"]
    for group in HEADLINE_GROUPS:
        if isinstance(result.get(group), dict):
            lines.extend(["", f"### {group}", "", *_table(result[group])])
    return lines


def render_report_sections(report: Dict[str, Any]) -> List[Tuple[str, str]]:
    """
    Split a report envelope into titled markdown parts.

    Args:
        report: envelope produced by build_report (already JSON-safe)

    Returns:
        (title, markdown) pairs: a heading part, then config, tolerances,
        assumptions and the headline result
    """
    heading = f"# {report['tool']} {report['command']}\n\nVersion {report['version']}, schema {report['schema']}.\n"
    sections = [(f"{report['tool']} {report['command']}", heading)]
    for key, title in REPORT_PARTS:
        body = "\n".join([f"## {title}", "", *_table(report.get(key, {}))])
        sections.append((title, body + "\n"))
    body = "\n".join(["## Result", "", *_result_lines(report.get("result"))])
    sections.append(("Result", body + "\n"))
    return sections


def render_markdown_summary(report: Dict[str, Any]) -> str:
    """The report parts joined into one markdown document."""
    return "\n".join(text for _, text in render_report_sections(report))


def write_report_pdf(
    report: Dict[str, Any],
    output_path: str,
    paper_size: str = "A4",
    optimize: bool = True,
) -> bool:
    """
    Save the report summary as a PDF with one page section per report part.

    Args:
        report: envelope produced by build_report
        output_path: where the PDF is written (parent directories are created)
        paper_size: paper size of every section
        optimize: whether markdown-pdf optimizes the output

    Returns:
        bool: True if the PDF was written, False otherwise
    """
    title = f"{report['tool']} {report['command']}"
    try:
        pdf = MarkdownPdf(toc_level=2, optimize=optimize)
        for index, (_, text) in enumerate(render_report_sections(report)):
            pdf.add_section(Section(text, toc=index > 0, paper_size=paper_size), user_css=TABLE_CSS)

        pdf.meta["title"] = title
        pdf.meta["author"] = report["tool"]
        pdf.meta["subject"] = f"{report['command']} report, schema {report['schema']}"

        output_file = Path(output_path)
        output_file.parent.mkdir(parents=True, exist_ok=True)
        pdf.save(str(output_file))

        logger.info(f"Report summary written to PDF: {output_path}")
        return True

    except Exception as e:
        logger.error(f"Error writing report PDF {output_path}: {str(e)}")
        return False
