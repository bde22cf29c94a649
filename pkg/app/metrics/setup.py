"""
Metrics 2 and 3: environment setup capabilities.
Metric 2 looks for the gadgets a Windows x64 API call needs (argument
loaders for rcx/rdx/r8/r9, stack pivots, call gadgets). Metric 3 counts the
gadgets that can compute values at runtime when injected data is
restricted. Both only count a gadget when its r_d survives to the end.
"""

from collections import Counter
from typing import Iterable, Optional

from ..errors import UnknownSemantics
from ..isa.categories import DEFAULT_CATEGORY_TABLE, CategoryTable
from ..isa.semantics import OVERWRITE_KINDS, EffectKind, active_registers, write_effects
from ..models import (
    Category,
    Corpus,
    Gadget,
    Instruction,
    PreservationMode,
    RegisterOperand,
    RegisterRef,
    TerminatorKind,
    Width,
)
from .schemas import EnvSetupReport, PivotForm, RegisterLoadCount, UsefulReport

# Relaxed mode: only these overwrite a loaded argument beyond repair
RELAXED_DESTRUCTIVE = frozenset({"pop", "mov", "movabs"})
STRICT_DESTRUCTIVE_CATEGORIES = frozenset({Category.DATA_MOVE, Category.ARITHMETIC, Category.SHIFT_ROTATE})

LOADER_MNEMONICS = frozenset({"pop", "mov", "movabs"})

USEFUL_MNEMONICS = frozenset({
    "pop", "push", "add", "sub", "adc", "dec", "inc", "neg", "not", "mov", "sbb", "xchg", "xor",
})


def preserves_rd(
    gadget: Gadget,
    rd: RegisterRef,
    mode: PreservationMode = PreservationMode.RELAXED,
    table: CategoryTable = DEFAULT_CATEGORY_TABLE,
) -> bool:
    """Whether no instruction after the first destroys rd

    Relaxed: pop or mov into rd at 64/32-bit width destroys it (a 32-bit
    write zero-extends). Strict: any data move, arithmetic or shift/rotate
    write to rd at 64/32-bit width does. xchg with rd destroys in both.
    rsp as rd is only destroyed through an rsp destination operand; the
    implicit stack movement of push, pop, call and leave keeps it.
    """
    for insn in gadget.instructions[1:]:
        try:
            effects = write_effects(insn, table)
        except UnknownSemantics:
            continue
        for effect in effects:
            target = effect.register
            if target is None or target.canonical != rd.canonical:
                continue
            if effect.is_stack_change and not effect.explicit:
                continue
            if effect.effect is EffectKind.EXCHANGE_SWAP or insn.mnemonic == "xchg":
                return False
            if not target.is_full_width:
                continue
            overwrites = effect.effect in OVERWRITE_KINDS or effect.is_stack_change
            if insn.mnemonic in RELAXED_DESTRUCTIVE and overwrites:
                return False
            if mode is PreservationMode.STRICT and table.categorize(insn.mnemonic) in STRICT_DESTRUCTIVE_CATEGORIES:
                return False
    return True


def _is_clean(gadget: Gadget) -> bool:
    """Exactly `<instruction> ; ret` with no stack adjustment"""
    return (
        len(gadget.instructions) == 2
        and gadget.terminator.kind is TerminatorKind.RET
        and gadget.terminator.stack_adjust == 0
    )


def loaded_register(first: Instruction, targets: Iterable[str]) -> Optional[RegisterRef]:
    """Target register an argument-loading first instruction writes, if any"""
    if first.mnemonic not in LOADER_MNEMONICS or len(first.operands) < 1:
        return None
    ref = first.destination_register()
    if ref is None or ref.canonical not in targets or not ref.is_full_width:
        return None
    if first.mnemonic == "pop" and ref.width is not Width.QWORD:
        return None
    return ref


def _is_register(operand, canonical: Optional[str] = None) -> bool:
    if not isinstance(operand, RegisterOperand) or operand.ref.width is not Width.QWORD:
        return False
    return canonical is None or operand.ref.canonical == canonical


def pivot_form(first: Instruction) -> Optional[PivotForm]:
    """Which stack-pivot form the first instruction is, if any"""
    ops = first.operands
    m = first.mnemonic
    if m == "leave" and not ops:
        return PivotForm.LEAVE
    if m == "pop" and len(ops) == 1 and _is_register(ops[0], "rsp"):
        return PivotForm.POP_RSP
    if len(ops) != 2:
        return None
    if m == "xchg" and _is_register(ops[0]) and _is_register(ops[1]):
        names = {ops[0].ref.canonical, ops[1].ref.canonical}
        if "rsp" in names and len(names) == 2:
            return PivotForm.XCHG
    if m == "mov" and _is_register(ops[0], "rsp") and _is_register(ops[1]):
        return PivotForm.MOV
    if m in ("add", "sub") and _is_register(ops[0], "rsp") and _is_register(ops[1]):
        return PivotForm.ADD_SUB
    return None


def metric2_env_setup(
    corpus: Corpus,
    target_registers: Iterable[str] = ("rcx", "rdx", "r8", "r9"),
    table: CategoryTable = DEFAULT_CATEGORY_TABLE,
) -> EnvSetupReport:
    """Count argument loaders per register, stack pivots and call gadgets"""
    targets = tuple(target_registers)
    clean_loads: Counter = Counter()
    side_loads: Counter = Counter()
    pivots: Counter = Counter()
    forms: Counter = Counter()
    calls: Counter = Counter()

    for gadget in corpus.gadgets:
        first = gadget.first
        clean = _is_clean(gadget)

        ref = loaded_register(first, targets)
        if ref is not None and preserves_rd(gadget, ref, PreservationMode.RELAXED, table):
            (clean_loads if clean else side_loads)[ref.canonical] += 1

        form = pivot_form(first)
        if form is not None:
            forms[form] += 1
            pivots["clean" if clean else "side_effect"] += 1

        if gadget.terminator.kind is TerminatorKind.INDIRECT_CALL:
            calls["call"] += 1
        elif gadget.terminator.kind is TerminatorKind.INDIRECT_JMP:
            calls["jmp"] += 1

    return EnvSetupReport(
        registers=[
            RegisterLoadCount(name=name, clean=clean_loads[name], side_effect=side_loads[name])
            for name in targets
        ],
        pivot_clean=pivots["clean"],
        pivot_side_effect=pivots["side_effect"],
        pivot_forms={form: forms[form] for form in PivotForm},
        call_count=calls["call"] + calls["jmp"],
        call_forms={"call": calls["call"], "jmp": calls["jmp"]},
    )


def is_useful(
    gadget: Gadget,
    mode: PreservationMode = PreservationMode.RELAXED,
    table: CategoryTable = DEFAULT_CATEGORY_TABLE,
) -> bool:
    if gadget.first.mnemonic not in USEFUL_MNEMONICS:
        return False
    return all(preserves_rd(gadget, rd, mode, table) for rd in active_registers(gadget.first, table))


def metric3_useful(
    corpus: Corpus,
    mode: PreservationMode = PreservationMode.RELAXED,
    table: CategoryTable = DEFAULT_CATEGORY_TABLE,
) -> UsefulReport:
    """Gadgets whose first mnemonic is in the useful set and whose r_d survives"""
    verdicts = {}
    useful, indices = [], []
    by_mnemonic: Counter = Counter()
    for position, gadget in enumerate(corpus.gadgets):
        key = gadget.instructions
        if key not in verdicts:
            verdicts[key] = is_useful(gadget, mode, table)
        if verdicts[key]:
            useful.append(gadget)
            indices.append(position)
            by_mnemonic[gadget.first.mnemonic] += 1
    return UsefulReport(
        useful_count=len(useful),
        useful_gadgets=tuple(useful),
        indices=tuple(indices),
        by_mnemonic=dict(sorted(by_mnemonic.items())),
    )
