"""
Metric 4: gadget quality.
Every useful gadget starts at score 0. Instructions after the first add to
it for side-effects and preconditions according to their category and
target (rsp, r_d, other register); the stack-pointer score (SPS) tracks
where rsp ends up and adds penalties when it is negative, large or
unaligned. Higher scores mean worse gadgets.
"""

from collections import Counter
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Tuple

from ..errors import UnknownSemantics
from ..isa.categories import DEFAULT_CATEGORY_TABLE, CategoryTable
from ..isa.semantics import active_registers, write_effects
from ..models import Category, Gadget, MemoryOperand, RegisterOperand, RegisterRef, TerminatorKind
from .schemas import (
    GadgetScore,
    HistogramBucket,
    Penalty,
    PenaltyRule,
    QualityReport,
    ScoreTarget,
    UsefulReport,
)


class Weights(NamedTuple):
    rsp: float
    rd: float
    other: float


# Categories missing here do not affect the score
GRADING_TABLE: Dict[Category, Weights] = {
    Category.DATA_MOVE: Weights(rsp=2.0, rd=1.0, other=0.5),
    Category.ARITHMETIC: Weights(rsp=2.0, rd=1.0, other=0.5),
    Category.SHIFT_ROTATE: Weights(rsp=3.0, rd=2.0, other=0.5),
}

NEGATIVE_SPS_PENALTY = 2.0
LARGE_OR_UNALIGNED_SPS_PENALTY = 1.0


class QualityThresholds(NamedTuple):
    q_threshold: float = 1.0
    sps_limit: int = 4096
    alignment: int = 8


def _weight(category: Category, target: ScoreTarget) -> float:
    weights = GRADING_TABLE.get(category)
    return getattr(weights, target.value) if weights else 0.0


def track_sps(gadget: Gadget, table: CategoryTable = DEFAULT_CATEGORY_TABLE) -> Optional[int]:
    """Net stack-pointer displacement in bytes, or None when it cannot be known

    pop adds and push subtracts the slot size; `ret n` subtracts n; rsp
    arithmetic with an immediate adds its value. leave, pop rsp and
    register-amount rsp arithmetic make the score indeterminate.
    """
    sps = 0
    for insn in gadget.instructions[:-1]:
        try:
            effects = write_effects(insn, table)
        except UnknownSemantics:
            dest = insn.destination
            if isinstance(dest, RegisterOperand) and dest.ref.canonical == "rsp":
                return None
            continue
        for effect in effects:
            if effect.is_stack_change:
                if effect.delta is None:
                    return None
                sps += effect.delta
    if gadget.terminator.kind is TerminatorKind.RET:
        sps -= gadget.terminator.stack_adjust
    return sps


def _sps_penalties(sps: Optional[int], thresholds: QualityThresholds) -> List[Penalty]:
    if sps is None:
        return []
    penalties = []
    if sps < 0:
        penalties.append(Penalty(index=None, rule=PenaltyRule.NEGATIVE_SPS, increment=NEGATIVE_SPS_PENALTY))
    # one increment even when the value is both large and unaligned
    if abs(sps) > thresholds.sps_limit or sps % thresholds.alignment:
        penalties.append(
            Penalty(index=None, rule=PenaltyRule.LARGE_OR_UNALIGNED_SPS, increment=LARGE_OR_UNALIGNED_SPS_PENALTY)
        )
    return penalties


def grade_gadget(
    gadget: Gadget,
    rd_set: FrozenSet[RegisterRef],
    thresholds: QualityThresholds = QualityThresholds(),
    table: CategoryTable = DEFAULT_CATEGORY_TABLE,
) -> GadgetScore:
    """Score one gadget's side-effects and preconditions"""
    sps = track_sps(gadget, table)
    categories = [table.categorize(insn.mnemonic) for insn in gadget.instructions]
    if Category.UNCATEGORIZED in categories:
        return GadgetScore(score=0.0, sps=sps, penalty_trace=(), graded=False)

    rd_names = {ref.canonical for ref in rd_set}
    trace: List[Penalty] = []

    def penalize(index: int, rule: PenaltyRule, target: ScoreTarget, category: Category):
        increment = _weight(category, target)
        if increment:
            trace.append(Penalty(index=index, rule=rule, target=target, increment=increment))

    # the first instruction defines the gadget and the terminator is covered by SPS
    for index in range(1, len(gadget.instructions) - 1):
        insn, category = gadget.instructions[index], categories[index]
        if insn.mnemonic == "push":
            continue
        for effect in write_effects(insn, table):
            if effect.is_stack_change:
                if effect.delta is not None:
                    continue
                # leave retargets rsp from rbp, closest to a data move
                grading = Category.DATA_MOVE if insn.mnemonic == "leave" else category
                penalize(index, PenaltyRule.INDETERMINATE_RSP_CHANGE, ScoreTarget.RSP, grading)
            elif isinstance(effect.target, MemoryOperand):
                penalize(index, PenaltyRule.MEMORY_DESTINATION, ScoreTarget.OTHER, category)
            elif insn.mnemonic != "leave":
                target = ScoreTarget.RD if effect.target.canonical in rd_names else ScoreTarget.OTHER
                penalize(index, PenaltyRule.REGISTER_WRITE, target, category)

    trace.extend(_sps_penalties(sps, thresholds))
    return GadgetScore(
        score=sum(p.increment for p in trace),
        sps=sps,
        penalty_trace=tuple(trace),
        graded=True,
    )


def grade_useful(
    useful: UsefulReport,
    thresholds: QualityThresholds = QualityThresholds(),
    table: CategoryTable = DEFAULT_CATEGORY_TABLE,
) -> List[Tuple[Gadget, GadgetScore]]:
    """Grade every useful gadget; identical instruction sequences are graded once"""
    memo: Dict[tuple, GadgetScore] = {}
    graded = []
    for gadget in useful.useful_gadgets:
        key = gadget.instructions
        if key not in memo:
            memo[key] = grade_gadget(gadget, active_registers(gadget.first, table), thresholds, table)
        graded.append((gadget, memo[key]))
    return graded


def metric4_summary(
    useful: UsefulReport,
    thresholds: QualityThresholds = QualityThresholds(),
    table: CategoryTable = DEFAULT_CATEGORY_TABLE,
) -> QualityReport:
    """Summarize scores over the useful gadgets: Q count, histogram, mean"""
    return summarize_scores([score for _, score in grade_useful(useful, thresholds, table)], thresholds)


def summarize_scores(scores: List[GadgetScore], thresholds: QualityThresholds = QualityThresholds()) -> QualityReport:
    graded = [s for s in scores if s.graded]
    values = [s.score for s in graded]
    # scores move in steps of 0.5, so each value is its own bucket
    buckets = Counter(values)
    return QualityReport(
        graded_count=len(graded),
        discarded_count=len(scores) - len(graded),
        q_count=sum(1 for v in values if v <= thresholds.q_threshold),
        q_threshold=thresholds.q_threshold,
        histogram=[HistogramBucket(score=score, count=buckets[score]) for score in sorted(buckets)],
        mean_score=sum(values) / len(values) if values else 0.0,
        min_score=min(values) if values else None,
        max_score=max(values) if values else None,
        indeterminate_sps_count=sum(1 for s in graded if s.sps is None),
    )
