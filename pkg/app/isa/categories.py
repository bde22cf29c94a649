"""
Gadget category table.
The default table lists the twelve standard categories and their mnemonics;
family rules cover conditional jumps, setcc, cmovcc and the sized
string-instruction spellings. Anything else is Uncategorized.
"""

import hashlib
import re
from typing import Dict, Iterable, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, PrivateAttr

from ..models import Category, Instruction

DEFAULT_CATEGORY_MNEMONICS: Dict[Category, Tuple[str, ...]] = {
    Category.DATA_MOVE: ("pop", "push", "mov", "xchg", "lea", "cmov", "movabs"),
    Category.ARITHMETIC: (
        "add", "sub", "inc", "dec", "sbb", "adc", "mul", "div", "imul", "idiv",
        # xor, neg and not are how exploit writers use them: to encode values
        "xor", "neg", "not",
    ),
    Category.LOGIC: ("cmp", "and", "or", "test"),
    Category.CONTROL_FLOW: (
        "call", "sysenter", "enter", "int", "jmp", "je", "jne", "jo", "jp", "js",
        "lcall", "ljmp", "jg", "jge", "ja", "jae", "jb", "jbe", "jl", "jle",
        "jno", "jnp", "jns", "loop", "jrcxz",
    ),
    Category.SHIFT_ROTATE: ("shl", "shr", "sar", "sal", "ror", "rol", "rcr", "rcl"),
    Category.SETTING_FLAGS: ("xlatb", "std", "stc", "lahf", "cwde", "cmc", "cld", "clc", "cdq"),
    Category.STRING: ("stosd", "stosb", "scas", "salc", "sahf", "lods", "movs"),
    Category.FLOATING_POINT: (
        "divps", "mulps", "movups", "movaps", "addps", "rcpss", "sqrtss", "maxps",
        "minps", "andps", "orps", "xorps", "cmpps", "vsubpd", "vpsubsb", "vmulss",
        "vminsd", "ucomiss", "subss", "subps", "subsd", "divss", "addss", "addsd",
        "cvtpi2ps", "cvtps2pd", "cvtsd2ss", "cvtsi2sd", "cvtsi2ss", "cvtss2sd",
        "mulsd", "mulss", "fmul", "fdiv", "fcomp", "fadd",
    ),
    Category.MISC: ("wait", "set", "leave"),
    Category.MMX: ("pxor", "movd", "movq"),
    Category.NOP: ("nop",),
    Category.RET: ("ret",),
}

# Checked in order, after the exact lookup misses
FAMILY_RULES: Tuple[Tuple[re.Pattern, Category], ...] = (
    (re.compile(r"cmov[a-z]+"), Category.DATA_MOVE),
    (re.compile(r"set[a-z]+"), Category.MISC),
    (re.compile(r"j[a-z]+"), Category.CONTROL_FLOW),
    (re.compile(r"loop[a-z]*"), Category.CONTROL_FLOW),
    (re.compile(r"(?:lods|stos|scas|movs)[bwdq]"), Category.STRING),
)


def normalize_category_name(name: str) -> Category:
    """Accept `data_move`, `DataMove`, `datamove` or `Data move` for a category"""
    wanted = re.sub(r"[\s_&-]+", "", name).lower()
    for category in Category:
        if category.value.replace("_", "") == wanted:
            return category
    raise ValueError(f"Unknown category {name!r}")


class CategoryTable(BaseModel):
    """Mnemonic to category mapping, with family-prefix fallback"""
    model_config = ConfigDict(frozen=True)

    mapping: Dict[str, Category]

    _cache: Dict[str, Category] = PrivateAttr(default_factory=dict)

    @classmethod
    def from_table(cls, table: Mapping[Category, Iterable[str]]) -> "CategoryTable":
        mapping: Dict[str, Category] = {}
        for category, mnemonics in table.items():
            for mnemonic in mnemonics:
                mapping[mnemonic.strip().lower()] = category
        return cls(mapping=mapping)

    def with_overrides(self, overrides: Mapping[Category, Iterable[str]]) -> "CategoryTable":
        """Move the listed mnemonics into the given categories"""
        mapping = dict(self.mapping)
        for category, mnemonics in overrides.items():
            for mnemonic in mnemonics:
                mapping[mnemonic.strip().lower()] = category
        return CategoryTable(mapping=mapping)

    def categorize(self, mnemonic: str) -> Category:
        cached = self._cache.get(mnemonic)
        if cached is not None:
            return cached
        category = self.mapping.get(mnemonic)
        if category is None:
            category = Category.UNCATEGORIZED
            for pattern, family in FAMILY_RULES:
                if pattern.fullmatch(mnemonic):
                    category = family
                    break
        self._cache[mnemonic] = category
        return category

    def grouped(self) -> Dict[Category, Tuple[str, ...]]:
        groups: Dict[Category, list] = {}
        for mnemonic, category in sorted(self.mapping.items()):
            groups.setdefault(category, []).append(mnemonic)
        return {category: tuple(groups.get(category, ())) for category in Category if category in groups}

    def digest(self) -> str:
        payload = ";".join(f"{m}={c.value}" for m, c in sorted(self.mapping.items()))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


DEFAULT_CATEGORY_TABLE = CategoryTable.from_table(DEFAULT_CATEGORY_MNEMONICS)


def categorize_instruction(insn: Instruction, table: CategoryTable = DEFAULT_CATEGORY_TABLE) -> Category:
    """Category of one instruction: exact lookup, then family rules"""
    return table.categorize(insn.mnemonic)


def load_category_table(overrides: Optional[Mapping[Category, Iterable[str]]] = None) -> CategoryTable:
    """Default table with config overrides applied"""
    if not overrides:
        return DEFAULT_CATEGORY_TABLE
    return DEFAULT_CATEGORY_TABLE.with_overrides(overrides)
