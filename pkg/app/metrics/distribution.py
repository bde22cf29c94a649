"""
Metric 1: gadget distribution.
Each gadget is assigned the category of its first instruction, since
every suffix of a gadget is itself a gadget and is categorized on its own.
"""

from collections import Counter
from typing import Dict, Set, Tuple

from ..isa.categories import DEFAULT_CATEGORY_TABLE, CategoryTable
from ..models import STANDARD_CATEGORIES, Category, Corpus, Instruction
from .schemas import CategoryCount, DistributionReport


def _percent(part: int, whole: int) -> float:
    return part * 100.0 / whole if whole else 0.0


def distribution(corpus: Corpus, table: CategoryTable = DEFAULT_CATEGORY_TABLE) -> DistributionReport:
    """Total and unique gadget counts per category; Uncategorized kept apart"""
    totals: Counter = Counter()
    uniques: Dict[Category, Set[Tuple[Instruction, ...]]] = {category: set() for category in Category}
    for gadget in corpus.gadgets:
        category = table.categorize(gadget.first.mnemonic)
        totals[category] += 1
        # uniqueness is on the instruction sequence; addresses do not matter
        uniques[category].add(gadget.instructions)

    categorized_total = sum(totals[c] for c in STANDARD_CATEGORIES)
    categorized_unique = sum(len(uniques[c]) for c in STANDARD_CATEGORIES)
    entries = [
        CategoryCount(
            category=category,
            total=totals[category],
            unique=len(uniques[category]),
            percent=_percent(totals[category], categorized_total),
            unique_percent=_percent(len(uniques[category]), categorized_unique),
        )
        for category in STANDARD_CATEGORIES
    ]
    return DistributionReport(
        categories=entries,
        uncategorized_total=totals[Category.UNCATEGORIZED],
        uncategorized_unique=len(uniques[Category.UNCATEGORIZED]),
        privileged_discarded=corpus.parse_stats.discarded_privileged,
        corpus_size=len(corpus.gadgets),
    )
