"""
Command line for gadgetgrade.

    gadgetgrade analyze <dump> [<dump> ...] [--merge] [options]
    gadgetgrade compare <before> <after> [options]
    gadgetgrade serve [--host H] [--port P]

Exit codes: 0 success, 1 unreadable dump or nothing parsed, 2 bad
configuration, mismatched reports or bad usage.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from loguru import logger
from pydantic import TypeAdapter

from .config import AnalysisConfig, load_config
from .errors import ConfigError, ConfigMismatchError, EmptyCorpusError, GadgetGradeError
from .ingest.parser import dedupe, merge_corpora, parse_dump
from .logging_config import setup_logging
from .metrics.quality import grade_useful
from .metrics.setup import metric3_useful
from .models import Corpus, PreservationMode
from .report.analysis import analyze, compare, thresholds_for
from .report.render import OutputFormat, analyses_to_csv, render, render_scores
from .report.schemas import AnalysisReport

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2


class DumpReadError(GadgetGradeError):
    """Raised when a dump file cannot be read as UTF-8 text"""


def _read_dump(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DumpReadError(f"Cannot read dump {path}: {e}") from e


def _label_for(path: str, labels: Sequence[str], position: int) -> str:
    return labels[position] if position < len(labels) else Path(path).name


def _config_from_args(ns: argparse.Namespace) -> AnalysisConfig:
    return load_config(
        config_file=ns.config,
        unique_only=ns.unique_only,
        preservation=PreservationMode.STRICT if ns.strict_preservation else None,
        q_threshold=ns.q_threshold,
        sps_limit=ns.sps_limit,
        max_gadget_len=ns.max_gadget_len,
    )


def _write(data: bytes, out: Optional[str]) -> None:
    if out:
        Path(out).write_bytes(data)
        logger.info(f"Wrote {len(data)} bytes to {out}")
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _parse_all(ns: argparse.Namespace, config: AnalysisConfig) -> List[Corpus]:
    labels = ns.label or []
    corpora = [
        parse_dump(_read_dump(path), config, _label_for(path, labels, i))
        for i, path in enumerate(ns.dumps)
    ]
    if ns.merge and len(corpora) > 1:
        merged_label = labels[0] if labels and len(labels) == 1 else ""
        corpora = [merge_corpora(corpora, merged_label)]
    return corpora


def run_analyze(ns: argparse.Namespace) -> int:
    config = _config_from_args(ns)
    corpora = _parse_all(ns, config)
    reports = [analyze(corpus, config) for corpus in corpora]

    fmt = OutputFormat(ns.format)
    if len(reports) == 1:
        data = render(reports[0], fmt)
    elif fmt is OutputFormat.JSON:
        data = TypeAdapter(List[AnalysisReport]).dump_json(reports, indent=2) + b"\n"
    elif fmt is OutputFormat.CSV:
        data = analyses_to_csv(reports)
    else:
        data = b"\n".join(render(report, fmt) for report in reports)
    _write(data, ns.out)

    if ns.scores:
        table = config.category_table
        scored = []
        for corpus in corpora:
            if config.unique_only:
                corpus = dedupe(corpus)
            useful = metric3_useful(corpus, config.preservation, table)
            scored += grade_useful(useful, thresholds_for(config), table)
        Path(ns.scores).write_bytes(render_scores(scored))
        logger.info(f"Wrote {len(scored)} gadget scores to {ns.scores}")
    return EXIT_OK


def run_compare(ns: argparse.Namespace) -> int:
    config = _config_from_args(ns)
    labels = ns.label or []
    before_path, after_path = ns.before, ns.after
    before = analyze(parse_dump(_read_dump(before_path), config, _label_for(before_path, labels, 0)), config)
    after = analyze(parse_dump(_read_dump(after_path), config, _label_for(after_path, labels, 1)), config)
    _write(render(compare(before, after), OutputFormat(ns.format)), ns.out)
    return EXIT_OK


def run_serve(ns: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("main:app", host=ns.host, port=ns.port, reload=ns.reload, log_level="info")
    return EXIT_OK


def _analysis_options() -> argparse.ArgumentParser:
    """Flags shared by analyze and compare"""
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", "-f", choices=[f.value for f in OutputFormat], default=OutputFormat.TEXT.value,
                   help="Output format (default: text)")
    p.add_argument("--unique-only", action="store_true", default=None,
                   help="Count each distinct instruction sequence once")
    p.add_argument("--strict-preservation", action="store_true", default=None,
                   help="Metric 3 treats any data move, arithmetic or shift/rotate write to r_d as destructive")
    p.add_argument("--q-threshold", type=float, help="Scores at or below this count toward Q (default 1.0)")
    p.add_argument("--sps-limit", type=int, help="Stack-pointer displacement considered large (default 4096)")
    p.add_argument("--max-gadget-len", type=int, help="Longest gadget kept, in instructions (default 15)")
    p.add_argument("--config", "-c", help="Key-value file with category overrides and settings")
    p.add_argument("--label", action="append", help="Name for a corpus, in dump order; repeatable")
    p.add_argument("--out", "-o", help="Write the report here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gadgetgrade", description="Gadget-quality metrics for ROP gadget dumps")
    p.add_argument("--log-level", default="WARNING",
                   choices=("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"))
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    p.add_argument("--log-file", help="Also log to this file (rotated)")
    sub = p.add_subparsers(dest="command", required=True)

    options = _analysis_options()
    a = sub.add_parser("analyze", parents=[options], help="Compute all four metrics for gadget dumps")
    a.add_argument("dumps", nargs="+", metavar="dump", help="Gadget dump file(s)")
    a.add_argument("--merge", action="store_true", help="Analyze all dumps as one corpus")
    a.add_argument("--scores", help="Write per-gadget quality scores as CSV to this file")
    a.set_defaults(handler=run_analyze)

    c = sub.add_parser("compare", parents=[options], help="Compare a baseline dump against a transformed one")
    c.add_argument("before", help="Baseline gadget dump")
    c.add_argument("after", help="Gadget dump of the transformed binary")
    c.set_defaults(handler=run_compare)

    s = sub.add_parser("serve", help="Run the HTTP service")
    s.add_argument("--host", default=os.getenv("HOST", "127.0.0.1"))
    s.add_argument("--port", type=int, default=int(os.getenv("PORT", 8000)))
    s.add_argument("--reload", action="store_true")
    s.set_defaults(handler=run_serve)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    ns = build_parser().parse_args(argv)

    level = ns.log_level
    if ns.verbose:
        level = "DEBUG" if ns.verbose > 1 else "INFO"
    setup_logging(level, ns.log_file)

    try:
        return ns.handler(ns)
    except (DumpReadError, EmptyCorpusError) as e:
        logger.error(str(e))
        return EXIT_INPUT
    except (ConfigError, ConfigMismatchError) as e:
        logger.error(str(e))
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
