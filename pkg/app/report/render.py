"""
Report rendering.
Text output goes through jinja2 templates in app/templates; JSON is the
pydantic serialization; CSV is flat enough for spreadsheets.
"""

import csv
import io
from enum import Enum
from typing import Iterable, List, Sequence, Tuple, Union

from jinja2 import Environment, PackageLoader, StrictUndefined

from ..ingest.parser import render_gadget
from ..metrics.schemas import GadgetScore
from ..models import Gadget
from .schemas import AnalysisReport, ComparisonReport, CountDelta


class OutputFormat(str, Enum):
    TEXT = "text"
    CSV = "csv"
    JSON = "json"


def thousands(value: Union[int, float]) -> str:
    return f"{value:,}"


def pair(first: int, second: int) -> str:
    """Table cell with clean and side-effect counts"""
    return f"{first:,} / {second:,}"


def percent(value: float) -> str:
    return f"{value:.1f}%"


def change(delta: CountDelta) -> str:
    if delta.percent == "new":
        return "new"
    return f"{delta.percent:+.1f}%"


def score(value) -> str:
    return "-" if value is None else f"{value:g}"


_environment = Environment(
    loader=PackageLoader("app", "templates"),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
    autoescape=False,
)
_environment.filters.update(thousands=thousands, pair=pair, percent=percent, change=change, score=score)


def _csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def analysis_row(report: AnalysisReport) -> Tuple[List[str], List]:
    """Header and values for one corpus, one column per metric"""
    header: List[str] = ["label", "total", "unique"]
    values: List = [report.source_label, report.corpus.total, report.corpus.unique]
    for entry in report.distribution.categories:
        header += [f"{entry.category.value}_total", f"{entry.category.value}_unique"]
        values += [entry.total, entry.unique]
    header += ["uncategorized_total", "uncategorized_unique"]
    values += [report.distribution.uncategorized_total, report.distribution.uncategorized_unique]
    for entry in report.env_setup.registers:
        header += [f"{entry.name}_clean", f"{entry.name}_side_effect"]
        values += [entry.clean, entry.side_effect]
    header += ["pivot_clean", "pivot_side_effect", "call", "useful", "q", "mean_score", "config_digest"]
    values += [
        report.env_setup.pivot_clean,
        report.env_setup.pivot_side_effect,
        report.env_setup.call_count,
        report.useful.count,
        report.quality.q_count,
        report.quality.mean_score,
        report.config.digest,
    ]
    return header, values


def analyses_to_csv(reports: Sequence[AnalysisReport]) -> bytes:
    """One row per corpus; all reports must share the same register targets"""
    header = analysis_row(reports[0])[0] if reports else []
    return _csv_bytes(header, (analysis_row(r)[1] for r in reports))


def comparison_rows(report: ComparisonReport) -> List[Tuple[str, CountDelta]]:
    rows = [("corpus_total", report.corpus_total), ("corpus_unique", report.corpus_unique)]
    for entry in report.categories:
        rows += [(f"{entry.category.value}_total", entry.total), (f"{entry.category.value}_unique", entry.unique)]
    rows.append(("uncategorized_total", report.uncategorized))
    for entry in report.registers:
        rows += [(f"{entry.name}_clean", entry.clean), (f"{entry.name}_side_effect", entry.side_effect)]
    rows += [
        ("pivot_clean", report.pivot_clean),
        ("pivot_side_effect", report.pivot_side_effect),
        ("call", report.call),
        ("useful", report.useful),
        ("q", report.q),
    ]
    return rows


def render(report: Union[AnalysisReport, ComparisonReport], fmt: OutputFormat = OutputFormat.TEXT) -> bytes:
    """Render a report in the requested format"""
    fmt = OutputFormat(fmt)
    if fmt is OutputFormat.JSON:
        return (report.model_dump_json(indent=2) + "\n").encode("utf-8")

    if isinstance(report, ComparisonReport):
        if fmt is OutputFormat.CSV:
            return _csv_bytes(
                ["metric", "before", "after", "delta", "percent"],
                ([name, d.before, d.after, d.delta, d.percent] for name, d in comparison_rows(report)),
            )
        text = _environment.get_template("comparison.txt.j2").render(report=report)
        return text.encode("utf-8")

    if fmt is OutputFormat.CSV:
        return analyses_to_csv([report])
    text = _environment.get_template("analysis.txt.j2").render(report=report)
    return text.encode("utf-8")


def render_scores(scored: Iterable[Tuple[Gadget, GadgetScore]]) -> bytes:
    """Per-gadget Metric 4 scores as CSV"""
    return _csv_bytes(
        ["address", "gadget", "graded", "score", "sps", "penalties"],
        (
            [
                f"0x{gadget.address:x}",
                render_gadget(gadget, with_address=False),
                gadget_score.graded,
                gadget_score.score,
                "" if gadget_score.sps is None else gadget_score.sps,
                " ".join(f"{p.rule.value}+{p.increment:g}" for p in gadget_score.penalty_trace),
            ]
            for gadget, gadget_score in scored
        ),
    )
