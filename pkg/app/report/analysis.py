"""
Analysis orchestration.
Runs the four metric passes over a corpus with one shared configuration
and compares two resulting reports.
"""

from typing import Optional

from loguru import logger

from ..config import AnalysisConfig
from ..errors import ConfigMismatchError, EmptyCorpusError
from ..ingest.parser import dedupe, parse_dump
from ..metrics.distribution import distribution
from ..metrics.quality import QualityThresholds, metric4_summary
from ..metrics.schemas import UsefulSummary
from ..metrics.setup import metric2_env_setup, metric3_useful
from ..models import Corpus
from .schemas import (
    AnalysisReport,
    CategoryDelta,
    ComparisonReport,
    CorpusStats,
    CountDelta,
    RegisterDelta,
)


def thresholds_for(config: AnalysisConfig) -> QualityThresholds:
    return QualityThresholds(
        q_threshold=config.q_threshold,
        sps_limit=config.sps_limit,
        alignment=config.alignment,
    )


def analyze(corpus: Corpus, config: Optional[AnalysisConfig] = None) -> AnalysisReport:
    """Compute Metrics 1-4 for a parsed corpus"""
    config = config or AnalysisConfig()
    if not corpus.gadgets:
        raise EmptyCorpusError(corpus.source_label, corpus.parse_stats)
    if config.unique_only:
        corpus = dedupe(corpus)
    table = config.category_table
    label = corpus.source_label or "corpus"

    dist = distribution(corpus, table)
    logger.info(f"{label}: distribution over {dist.corpus_size} gadgets, {dist.uncategorized_total} uncategorized")
    env = metric2_env_setup(corpus, config.target_registers, table)
    logger.info(f"{label}: {env.pivot_clean + env.pivot_side_effect} pivots, {env.call_count} call gadgets")
    useful = metric3_useful(corpus, config.preservation, table)
    logger.info(f"{label}: {useful.useful_count} useful gadgets")
    quality = metric4_summary(useful, thresholds_for(config), table)
    logger.info(f"{label}: {quality.q_count} gadgets scoring <= {config.q_threshold}")

    stats = corpus.parse_stats
    return AnalysisReport(
        source_label=corpus.source_label,
        corpus=CorpusStats(
            total=len(corpus.gadgets),
            unique=len({g.instructions for g in corpus.gadgets}),
            discarded_privileged=stats.discarded_privileged,
            discarded_unparseable=stats.discarded_unparseable,
            discarded_too_long=stats.discarded_too_long,
            skipped_lines=stats.skipped_lines,
        ),
        distribution=dist,
        env_setup=env,
        useful=UsefulSummary(count=useful.useful_count, by_mnemonic=useful.by_mnemonic),
        quality=quality,
        config=config.fingerprint(),
    )


def analyze_text(text: str, config: Optional[AnalysisConfig] = None, source_label: str = "") -> AnalysisReport:
    """Parse a dump and analyze it"""
    config = config or AnalysisConfig()
    return analyze(parse_dump(text, config, source_label), config)


def compare(before: AnalysisReport, after: AnalysisReport) -> ComparisonReport:
    """Deltas (after - before) between two reports made with the same configuration"""
    if before.config.digest != after.config.digest:
        raise ConfigMismatchError(before.config.digest, after.config.digest)

    categories = []
    for old, new in zip(before.distribution.categories, after.distribution.categories):
        categories.append(CategoryDelta(
            category=old.category,
            total=CountDelta.between(old.total, new.total),
            unique=CountDelta.between(old.unique, new.unique),
            before_share=old.percent,
            after_share=new.percent,
        ))

    registers = [
        RegisterDelta(
            name=old.name,
            clean=CountDelta.between(old.clean, new.clean),
            side_effect=CountDelta.between(old.side_effect, new.side_effect),
        )
        for old, new in zip(before.env_setup.registers, after.env_setup.registers)
    ]

    return ComparisonReport(
        before_label=before.source_label,
        after_label=after.source_label,
        corpus_total=CountDelta.between(before.corpus.total, after.corpus.total),
        corpus_unique=CountDelta.between(before.corpus.unique, after.corpus.unique),
        categories=categories,
        uncategorized=CountDelta.between(
            before.distribution.uncategorized_total, after.distribution.uncategorized_total
        ),
        registers=registers,
        pivot_clean=CountDelta.between(before.env_setup.pivot_clean, after.env_setup.pivot_clean),
        pivot_side_effect=CountDelta.between(before.env_setup.pivot_side_effect, after.env_setup.pivot_side_effect),
        call=CountDelta.between(before.env_setup.call_count, after.env_setup.call_count),
        useful=CountDelta.between(before.useful.count, after.useful.count),
        q=CountDelta.between(before.quality.q_count, after.quality.q_count),
    )
