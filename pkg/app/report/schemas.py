"""
Pydantic schemas for analysis and comparison reports.
Both are versioned; JSON produced from them parses back into equal models.
"""

from typing import List, Literal, Union

from pydantic import BaseModel, model_validator

from ..config import ConfigFingerprint
from ..models import Category
from ..metrics.schemas import DistributionReport, EnvSetupReport, QualityReport, UsefulSummary

SCHEMA_VERSION = 1

# Percent change, or "new" when the baseline count is zero
PercentChange = Union[float, Literal["new"]]


class CorpusStats(BaseModel):
    total: int
    unique: int
    discarded_privileged: int = 0
    discarded_unparseable: int = 0
    discarded_too_long: int = 0
    skipped_lines: int = 0


class AnalysisReport(BaseModel):
    """All four metrics for one corpus under one configuration"""
    schema_version: int = SCHEMA_VERSION
    source_label: str = ""
    corpus: CorpusStats
    distribution: DistributionReport
    env_setup: EnvSetupReport
    useful: UsefulSummary
    quality: QualityReport
    config: ConfigFingerprint

    @model_validator(mode="after")
    def validate_quality_accounting(self):
        graded = self.quality.graded_count + self.quality.discarded_count
        if self.useful.count != graded:
            raise ValueError("useful count must equal graded plus discarded gadgets")
        return self


class CountDelta(BaseModel):
    before: int
    after: int
    delta: int
    percent: PercentChange

    @classmethod
    def between(cls, before: int, after: int) -> "CountDelta":
        if before:
            percent: PercentChange = (after - before) * 100.0 / before
        else:
            percent = 0.0 if after == 0 else "new"
        return cls(before=before, after=after, delta=after - before, percent=percent)


class CategoryDelta(BaseModel):
    """Growth of one category, plus its share of each distribution"""
    category: Category
    total: CountDelta
    unique: CountDelta
    before_share: float
    after_share: float


class RegisterDelta(BaseModel):
    name: str
    clean: CountDelta
    side_effect: CountDelta


class ComparisonReport(BaseModel):
    """Differences between two analyses of the same kind of corpus"""
    schema_version: int = SCHEMA_VERSION
    before_label: str = ""
    after_label: str = ""
    corpus_total: CountDelta
    corpus_unique: CountDelta
    categories: List[CategoryDelta]
    uncategorized: CountDelta
    registers: List[RegisterDelta]
    pivot_clean: CountDelta
    pivot_side_effect: CountDelta
    call: CountDelta
    useful: CountDelta
    q: CountDelta

    def count_deltas(self) -> List[CountDelta]:
        deltas = [self.corpus_total, self.corpus_unique, self.uncategorized]
        for entry in self.categories:
            deltas += [entry.total, entry.unique]
        for entry in self.registers:
            deltas += [entry.clean, entry.side_effect]
        deltas += [self.pivot_clean, self.pivot_side_effect, self.call, self.useful, self.q]
        return deltas

    @property
    def is_zero(self) -> bool:
        return all(d.delta == 0 for d in self.count_deltas())
