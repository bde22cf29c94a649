"""
Destination-operand semantics.
What each categorized instruction writes, how it writes it (overwrite,
zero-extending overwrite, partial write, in-place modification, swap) and
what it does to rsp. CPU flags are not modeled.
"""

from functools import lru_cache
from enum import Enum
from typing import FrozenSet, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from ..errors import UnknownSemantics
from ..models import (
    Category,
    ImmediateOperand,
    Instruction,
    MemoryOperand,
    RegisterOperand,
    RegisterRef,
    Width,
)
from .categories import DEFAULT_CATEGORY_TABLE, CategoryTable

RSP = RegisterRef(canonical="rsp")
RBP = RegisterRef(canonical="rbp")


class EffectKind(str, Enum):
    FULL_OVERWRITE = "full_overwrite"
    ZERO_EXTENDING_OVERWRITE = "zero_extending_overwrite"
    PARTIAL_WRITE = "partial_write"
    ARITHMETIC_MODIFY = "arithmetic_modify"
    SHIFT_ROTATE_MODIFY = "shift_rotate_modify"
    EXCHANGE_SWAP = "exchange_swap"
    STACK_POINTER_CHANGE = "stack_pointer_change"


OVERWRITE_KINDS = frozenset({EffectKind.FULL_OVERWRITE, EffectKind.ZERO_EXTENDING_OVERWRITE})


class WriteEffect(BaseModel):
    """One location written by an instruction; delta=None on an rsp change means Unknown

    `explicit` marks an rsp change made through an rsp destination operand
    (`pop rsp`, `mov rsp, rbp`, `add rsp, 0x8`), as opposed to the implicit
    stack movement of push, pop, call, ret and leave.
    """
    model_config = ConfigDict(frozen=True)

    target: Union[RegisterRef, MemoryOperand]
    effect: EffectKind
    delta: Optional[int] = None
    explicit: bool = False

    @property
    def is_stack_change(self) -> bool:
        return self.effect is EffectKind.STACK_POINTER_CHANGE

    @property
    def register(self) -> Optional[RegisterRef]:
        return self.target if isinstance(self.target, RegisterRef) else None


def _stack_change(delta: Optional[int]) -> WriteEffect:
    return WriteEffect(target=RSP, effect=EffectKind.STACK_POINTER_CHANGE, delta=delta)


def _rsp_write(operand: RegisterOperand, delta: Optional[int] = None) -> WriteEffect:
    return WriteEffect(target=operand.ref, effect=EffectKind.STACK_POINTER_CHANGE, delta=delta, explicit=True)


def _overwrite_kind(ref: RegisterRef) -> EffectKind:
    if ref.width is Width.QWORD:
        return EffectKind.FULL_OVERWRITE
    if ref.width is Width.DWORD:
        # writing a 32-bit subregister zero-extends into the full register
        return EffectKind.ZERO_EXTENDING_OVERWRITE
    return EffectKind.PARTIAL_WRITE


def _is_rsp(operand) -> bool:
    return isinstance(operand, RegisterOperand) and operand.ref.canonical == "rsp"


def _overwrite(operand) -> List[WriteEffect]:
    if _is_rsp(operand):
        return [_rsp_write(operand)]
    if isinstance(operand, RegisterOperand):
        return [WriteEffect(target=operand.ref, effect=_overwrite_kind(operand.ref))]
    if isinstance(operand, MemoryOperand):
        return [WriteEffect(target=operand, effect=EffectKind.FULL_OVERWRITE)]
    return []


def _modify(operand, kind: EffectKind, rsp_delta: Optional[int] = None) -> List[WriteEffect]:
    if _is_rsp(operand):
        return [_rsp_write(operand, rsp_delta)]
    if isinstance(operand, (RegisterOperand, MemoryOperand)):
        target = operand.ref if isinstance(operand, RegisterOperand) else operand
        return [WriteEffect(target=target, effect=kind)]
    return []


def _slot_size(operand) -> int:
    """Bytes moved by push/pop for this operand"""
    if isinstance(operand, RegisterOperand) and operand.ref.width is Width.WORD:
        return 2
    if isinstance(operand, MemoryOperand) and operand.size == "word":
        return 2
    return 8


def _immediate(operand) -> Optional[int]:
    return operand.value if isinstance(operand, ImmediateOperand) else None


def _data_move(insn: Instruction) -> List[WriteEffect]:
    ops = insn.operands
    m = insn.mnemonic
    if m == "push":
        return [_stack_change(-_slot_size(ops[0]) if ops else -8)]
    if m == "pop":
        if not ops:
            return [_stack_change(8)]
        if _is_rsp(ops[0]):
            return [_rsp_write(ops[0])]
        return _overwrite(ops[0]) + [_stack_change(_slot_size(ops[0]))]
    if m == "xchg" and len(ops) == 2:
        effects = []
        for operand in ops:
            if _is_rsp(operand):
                effects.append(_rsp_write(operand))
            else:
                effects.extend(_modify(operand, EffectKind.EXCHANGE_SWAP))
        return effects
    if m == "lea" and ops and _is_rsp(ops[0]):
        source = ops[1] if len(ops) > 1 else None
        if (
            isinstance(source, MemoryOperand)
            and source.base is not None
            and source.base.canonical == "rsp"
            and source.index is None
        ):
            return [_rsp_write(ops[0], source.displacement)]
        return [_rsp_write(ops[0])]
    return _overwrite(ops[0]) if ops else []


def _arithmetic(insn: Instruction) -> List[WriteEffect]:
    ops = insn.operands
    m = insn.mnemonic
    if not ops:
        return []
    if m in ("mul", "div", "idiv") or (m == "imul" and len(ops) == 1):
        source = ops[0]
        width = source.ref.width if isinstance(source, RegisterOperand) else _memory_width(source)
        if width in (Width.LOW_BYTE, Width.HIGH_BYTE):
            return [WriteEffect(target=RegisterRef(canonical="rax", width=Width.WORD), effect=EffectKind.ARITHMETIC_MODIFY)]
        return [
            WriteEffect(target=RegisterRef(canonical="rax", width=width), effect=EffectKind.ARITHMETIC_MODIFY),
            WriteEffect(target=RegisterRef(canonical="rdx", width=width), effect=EffectKind.ARITHMETIC_MODIFY),
        ]
    rsp_delta = None
    if _is_rsp(ops[0]):
        if m in ("add", "sub") and len(ops) == 2:
            amount = _immediate(ops[1])
            if amount is not None:
                rsp_delta = amount if m == "add" else -amount
        elif m == "inc":
            rsp_delta = 1
        elif m == "dec":
            rsp_delta = -1
    return _modify(ops[0], EffectKind.ARITHMETIC_MODIFY, rsp_delta)


def _memory_width(operand) -> Width:
    size = operand.size if isinstance(operand, MemoryOperand) else None
    return {"byte": Width.LOW_BYTE, "word": Width.WORD, "dword": Width.DWORD}.get(size, Width.QWORD)


def _control_flow(insn: Instruction) -> List[WriteEffect]:
    m = insn.mnemonic
    if m in ("call", "lcall"):
        return [_stack_change(-8)]
    if m == "enter":
        return [_stack_change(None), WriteEffect(target=RBP, effect=EffectKind.FULL_OVERWRITE)]
    if m.startswith("loop"):
        return [WriteEffect(target=RegisterRef(canonical="rcx"), effect=EffectKind.ARITHMETIC_MODIFY)]
    return []


def _setting_flags(insn: Instruction) -> List[WriteEffect]:
    implicit = {
        "cwde": RegisterRef(canonical="rax", width=Width.DWORD),
        "cdq": RegisterRef(canonical="rdx", width=Width.DWORD),
        "lahf": RegisterRef(canonical="rax", width=Width.HIGH_BYTE),
        "xlatb": RegisterRef(canonical="rax", width=Width.LOW_BYTE),
    }
    ref = implicit.get(insn.mnemonic)
    return [WriteEffect(target=ref, effect=_overwrite_kind(ref))] if ref else []


_STRING_WIDTHS = {"b": Width.LOW_BYTE, "w": Width.WORD, "d": Width.DWORD, "q": Width.QWORD}


def _string(insn: Instruction) -> List[WriteEffect]:
    m = insn.mnemonic
    ops = insn.operands
    rsi = RegisterRef(canonical="rsi")
    rdi = RegisterRef(canonical="rdi")
    if any(op.kind == "special" for op in ops):
        # SSE movsd shares its spelling with the string move
        return _overwrite(ops[0])
    if m == "salc":
        return [WriteEffect(target=RegisterRef(canonical="rax", width=Width.LOW_BYTE), effect=EffectKind.PARTIAL_WRITE)]
    destination = ops[0] if ops and isinstance(ops[0], MemoryOperand) else MemoryOperand(base=rdi)
    if m.startswith("stos"):
        return [
            WriteEffect(target=destination, effect=EffectKind.FULL_OVERWRITE),
            WriteEffect(target=rdi, effect=EffectKind.ARITHMETIC_MODIFY),
        ]
    if m.startswith("movs"):
        return [
            WriteEffect(target=destination, effect=EffectKind.FULL_OVERWRITE),
            WriteEffect(target=rsi, effect=EffectKind.ARITHMETIC_MODIFY),
            WriteEffect(target=rdi, effect=EffectKind.ARITHMETIC_MODIFY),
        ]
    if m.startswith("lods"):
        width = _STRING_WIDTHS.get(m[4:], Width.DWORD)
        loaded = RegisterRef(canonical="rax", width=width)
        return [
            WriteEffect(target=loaded, effect=_overwrite_kind(loaded)),
            WriteEffect(target=rsi, effect=EffectKind.ARITHMETIC_MODIFY),
        ]
    if m.startswith("scas"):
        return [WriteEffect(target=rdi, effect=EffectKind.ARITHMETIC_MODIFY)]
    return []


def _vector(insn: Instruction) -> List[WriteEffect]:
    ops = insn.operands
    # x87 operates on its register stack; memory operands there are sources
    if insn.mnemonic.startswith("f") or len(ops) < 2:
        return []
    return _overwrite(ops[0])


def _misc(insn: Instruction) -> List[WriteEffect]:
    if insn.mnemonic == "leave":
        return [_stack_change(None), WriteEffect(target=RBP, effect=EffectKind.FULL_OVERWRITE)]
    if insn.mnemonic.startswith("set") and insn.operands:
        return _overwrite(insn.operands[0])
    return []


def _ret(insn: Instruction) -> List[WriteEffect]:
    adjust = _immediate(insn.operands[0]) if insn.operands else 0
    return [_stack_change(8 + (adjust or 0))]


def _logic(insn: Instruction) -> List[WriteEffect]:
    # cmp and test only set flags
    if insn.mnemonic in ("cmp", "test") or not insn.operands:
        return []
    return _modify(insn.operands[0], EffectKind.ARITHMETIC_MODIFY)


def _shift_rotate(insn: Instruction) -> List[WriteEffect]:
    if not insn.operands:
        return []
    return _modify(insn.operands[0], EffectKind.SHIFT_ROTATE_MODIFY)


_HANDLERS = {
    Category.DATA_MOVE: _data_move,
    Category.ARITHMETIC: _arithmetic,
    Category.LOGIC: _logic,
    Category.CONTROL_FLOW: _control_flow,
    Category.SHIFT_ROTATE: _shift_rotate,
    Category.SETTING_FLAGS: _setting_flags,
    Category.STRING: _string,
    Category.FLOATING_POINT: _vector,
    Category.MMX: _vector,
    Category.MISC: _misc,
    Category.NOP: lambda insn: [],
    Category.RET: _ret,
}


@lru_cache(maxsize=32768)
def _effects_for(insn: Instruction, category: Category) -> Tuple[WriteEffect, ...]:
    handler = _HANDLERS.get(category)
    if handler is None:
        raise UnknownSemantics(insn.mnemonic)
    return tuple(handler(insn))


def write_effects(insn: Instruction, table: CategoryTable = DEFAULT_CATEGORY_TABLE) -> Tuple[WriteEffect, ...]:
    """Locations written by insn; raises UnknownSemantics for uncategorized mnemonics"""
    return _effects_for(insn, table.categorize(insn.mnemonic))


def active_registers(first_insn: Instruction, table: CategoryTable = DEFAULT_CATEGORY_TABLE) -> FrozenSet[RegisterRef]:
    """r_d: the registers the first instruction of a gadget writes, canonicalized

    Memory destinations and push give an empty set; xchg gives both
    registers. rsp counts only when named as a destination operand.
    """
    try:
        effects = write_effects(first_insn, table)
    except UnknownSemantics:
        return frozenset()
    return frozenset(
        effect.register.widened()
        for effect in effects
        if effect.register is not None and (effect.explicit or not effect.is_stack_change)
    )
