"""
x86-64 register alias table.
Maps every recognized general-purpose register spelling to its canonical
64-bit register and access width, and back.
"""

import re
from typing import Dict, Optional

from ..models import RegisterRef, Width

_LEGACY = {
    # canonical: (64, 32, 16, 8-low, 8-high)
    "rax": ("rax", "eax", "ax", "al", "ah"),
    "rbx": ("rbx", "ebx", "bx", "bl", "bh"),
    "rcx": ("rcx", "ecx", "cx", "cl", "ch"),
    "rdx": ("rdx", "edx", "dx", "dl", "dh"),
    "rsi": ("rsi", "esi", "si", "sil", None),
    "rdi": ("rdi", "edi", "di", "dil", None),
    "rbp": ("rbp", "ebp", "bp", "bpl", None),
    "rsp": ("rsp", "esp", "sp", "spl", None),
}

_WIDTHS = (Width.QWORD, Width.DWORD, Width.WORD, Width.LOW_BYTE, Width.HIGH_BYTE)


def _build_alias_table() -> Dict[str, RegisterRef]:
    table: Dict[str, RegisterRef] = {}
    for canonical, names in _LEGACY.items():
        for name, width in zip(names, _WIDTHS):
            if name is not None:
                table[name] = RegisterRef(canonical=canonical, width=width)
    for number in range(8, 16):
        canonical = f"r{number}"
        table[canonical] = RegisterRef(canonical=canonical, width=Width.QWORD)
        table[f"{canonical}d"] = RegisterRef(canonical=canonical, width=Width.DWORD)
        table[f"{canonical}w"] = RegisterRef(canonical=canonical, width=Width.WORD)
        table[f"{canonical}b"] = RegisterRef(canonical=canonical, width=Width.LOW_BYTE)
    return table


REGISTER_ALIASES: Dict[str, RegisterRef] = _build_alias_table()
REGISTER_NAMES: Dict[RegisterRef, str] = {ref: name for name, ref in REGISTER_ALIASES.items()}

# Registers outside the general-purpose file; recognized but not modeled
SPECIAL_REGISTER = re.compile(
    r"(?:[xyz]mm\d{1,2}|mm[0-7]|st(?:\([0-7]\))?|bnd[0-3]|k[0-7]"
    r"|[cdefgs]s|cr\d{1,2}|dr[0-7])"
)


def resolve_register(name: str) -> Optional[RegisterRef]:
    """Resolve a general-purpose register spelling, or None if it is not one"""
    return REGISTER_ALIASES.get(name)


def register_name(ref: RegisterRef) -> str:
    """Spell a register reference the way a disassembler would"""
    return REGISTER_NAMES[ref]


def is_special_register(name: str) -> bool:
    return SPECIAL_REGISTER.fullmatch(name) is not None
