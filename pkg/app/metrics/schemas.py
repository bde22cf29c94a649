"""
Pydantic schemas for the four metric results.
"""

from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..models import Category, Gadget


class CategoryCount(BaseModel):
    """Metric 1 tally for one category"""
    category: Category
    total: int = 0
    unique: int = 0
    percent: float = 0.0
    unique_percent: float = 0.0


class DistributionReport(BaseModel):
    """Metric 1: gadgets partitioned by the category of their first instruction"""
    categories: List[CategoryCount]
    uncategorized_total: int = 0
    uncategorized_unique: int = 0
    privileged_discarded: int = 0
    corpus_size: int = 0

    def count(self, category: Category) -> CategoryCount:
        for entry in self.categories:
            if entry.category is category:
                return entry
        raise KeyError(category)

    @property
    def categorized_total(self) -> int:
        return sum(entry.total for entry in self.categories)


class RegisterLoadCount(BaseModel):
    name: str
    clean: int = 0
    side_effect: int = 0


class PivotForm(str, Enum):
    XCHG = "xchg"
    MOV = "mov"
    ADD_SUB = "add_sub"
    POP_RSP = "pop_rsp"
    LEAVE = "leave"


class EnvSetupReport(BaseModel):
    """Metric 2: argument loaders, stack pivots and call gadgets"""
    registers: List[RegisterLoadCount]
    pivot_clean: int = 0
    pivot_side_effect: int = 0
    pivot_forms: Dict[PivotForm, int] = Field(default_factory=lambda: {form: 0 for form in PivotForm})
    call_count: int = 0
    call_forms: Dict[str, int] = Field(default_factory=lambda: {"call": 0, "jmp": 0})

    def loads(self, register: str) -> RegisterLoadCount:
        for entry in self.registers:
            if entry.name == register:
                return entry
        raise KeyError(register)


class UsefulReport(BaseModel):
    """Metric 3: gadgets usable for computing values at runtime"""
    model_config = ConfigDict(frozen=True)

    useful_count: int = 0
    useful_gadgets: Tuple[Gadget, ...] = ()
    indices: Tuple[int, ...] = ()  # positions in the analyzed corpus
    by_mnemonic: Dict[str, int] = Field(default_factory=dict)


class UsefulSummary(BaseModel):
    """The part of Metric 3 carried in a serialized report"""
    count: int = 0
    by_mnemonic: Dict[str, int] = Field(default_factory=dict)


class PenaltyRule(str, Enum):
    REGISTER_WRITE = "register_write"
    INDETERMINATE_RSP_CHANGE = "indeterminate_rsp_change"
    MEMORY_DESTINATION = "memory_destination"
    NEGATIVE_SPS = "negative_sps"
    LARGE_OR_UNALIGNED_SPS = "large_or_unaligned_sps"


class ScoreTarget(str, Enum):
    RSP = "rsp"
    RD = "rd"
    OTHER = "other"


class Penalty(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: Optional[int]  # None for the stack-pointer penalties applied after the walk
    rule: PenaltyRule
    target: Optional[ScoreTarget] = None
    increment: float


class GadgetScore(BaseModel):
    """Metric 4 result for one gadget; sps None means Indeterminate"""
    model_config = ConfigDict(frozen=True)

    score: float = 0.0
    sps: Optional[int] = 0
    penalty_trace: Tuple[Penalty, ...] = ()
    graded: bool = True

    @model_validator(mode="after")
    def validate_score(self):
        if self.score != sum(p.increment for p in self.penalty_trace):
            raise ValueError("score must equal the sum of the penalty trace")
        return self


class HistogramBucket(BaseModel):
    score: float
    count: int


class QualityReport(BaseModel):
    """Metric 4 summary over all useful gadgets"""
    graded_count: int = 0
    discarded_count: int = 0
    q_count: int = 0
    q_threshold: float = 1.0
    histogram: List[HistogramBucket] = Field(default_factory=list)
    mean_score: float = 0.0
    min_score: Optional[float] = None
    max_score: Optional[float] = None
    indeterminate_sps_count: int = 0

    @model_validator(mode="after")
    def validate_counts(self):
        if self.q_count > self.graded_count:
            raise ValueError("q_count cannot exceed graded_count")
        return self
