"""
Tests for instruction categorization and write-effect semantics.
"""

import pytest

from app.errors import UnknownSemantics
from app.ingest.parser import parse_instruction
from app.ingest.registers import REGISTER_ALIASES
from app.isa.categories import (
    DEFAULT_CATEGORY_TABLE,
    DEFAULT_CATEGORY_MNEMONICS,
    categorize_instruction,
    load_category_table,
    normalize_category_name,
)
from app.isa.semantics import EffectKind, WriteEffect, active_registers, write_effects
from app.models import Category, MemoryOperand, RegisterRef, Width


def _effects(text):
    return write_effects(parse_instruction(text))


def test_every_table_mnemonic_maps_to_its_category():
    for category, mnemonics in DEFAULT_CATEGORY_MNEMONICS.items():
        for mnemonic in mnemonics:
            assert DEFAULT_CATEGORY_TABLE.categorize(mnemonic) is category, mnemonic


@pytest.mark.parametrize("mnemonic, category", [
    ("add", Category.ARITHMETIC),
    ("xor", Category.ARITHMETIC),
    ("cmova", Category.DATA_MOVE),
    ("cmovne", Category.DATA_MOVE),
    ("setne", Category.MISC),
    ("jz", Category.CONTROL_FLOW),
    ("loopne", Category.CONTROL_FLOW),
    ("stosq", Category.STRING),
    ("lodsb", Category.STRING),
    ("vfmadd231ps", Category.UNCATEGORIZED),
    ("movzx", Category.UNCATEGORIZED),
])
def test_categorize(mnemonic, category):
    assert DEFAULT_CATEGORY_TABLE.categorize(mnemonic) is category


def test_categorize_instruction_uses_mnemonic():
    assert categorize_instruction(parse_instruction("pop rax")) is Category.DATA_MOVE


def test_overrides_move_mnemonics():
    table = load_category_table({Category.DATA_MOVE: ("movzx", "movsx")})
    assert table.categorize("movzx") is Category.DATA_MOVE
    assert table.categorize("pop") is Category.DATA_MOVE
    assert DEFAULT_CATEGORY_TABLE.categorize("movzx") is Category.UNCATEGORIZED
    assert table.digest() != DEFAULT_CATEGORY_TABLE.digest()
    assert load_category_table() is DEFAULT_CATEGORY_TABLE


@pytest.mark.parametrize("name", ["data_move", "DataMove", "datamove", "Data move"])
def test_normalize_category_name(name):
    assert normalize_category_name(name) is Category.DATA_MOVE


def test_normalize_unknown_category():
    with pytest.raises(ValueError):
        normalize_category_name("vector")


def test_pop_rbp():
    assert _effects("pop rbp") == (
        WriteEffect(target=RegisterRef(canonical="rbp"), effect=EffectKind.FULL_OVERWRITE),
        WriteEffect(target=RegisterRef(canonical="rsp"), effect=EffectKind.STACK_POINTER_CHANGE, delta=8),
    )


def test_mov_32_bit_zero_extends():
    assert _effects("mov eax, 0x1") == (
        WriteEffect(target=RegisterRef(canonical="rax", width=Width.DWORD), effect=EffectKind.ZERO_EXTENDING_OVERWRITE),
    )


def test_add_rsp_immediate():
    (effect,) = _effects("add rsp, 0x10")
    assert effect.is_stack_change
    assert effect.delta == 16


def test_memory_destination():
    (effect,) = _effects("mov [rdx], 0xfffa")
    assert effect.effect is EffectKind.FULL_OVERWRITE
    assert effect.target == MemoryOperand(base=RegisterRef(canonical="rdx"))


@pytest.mark.parametrize("name, ref", sorted(REGISTER_ALIASES.items()))
def test_mov_width_determines_effect_kind(name, ref):
    if ref.canonical == "rsp":
        pytest.skip("rsp writes are stack-pointer changes")
    (effect,) = _effects(f"mov {name}, 0x1")
    expected = {
        Width.QWORD: EffectKind.FULL_OVERWRITE,
        Width.DWORD: EffectKind.ZERO_EXTENDING_OVERWRITE,
    }.get(ref.width, EffectKind.PARTIAL_WRITE)
    assert effect.effect is expected
    assert effect.register == ref


@pytest.mark.parametrize("text, delta", [
    ("push rax", -8),
    ("push ax", -2),
    ("pop rax", 8),
    ("sub rsp, 0x20", -32),
    ("inc rsp", 1),
    ("lea rsp, [rsp+0x18]", 24),
    ("call rax", -8),
    ("ret", 8),
    ("ret 0x10", 24),
])
def test_known_stack_changes(text, delta):
    changes = [e for e in _effects(text) if e.is_stack_change]
    assert [e.delta for e in changes] == [delta]


@pytest.mark.parametrize("text", ["pop rsp", "leave", "mov rsp, rbp", "add rsp, rcx", "xchg rax, rsp", "enter 0x10, 0x0"])
def test_indeterminate_stack_changes(text):
    changes = [e for e in _effects(text) if e.is_stack_change]
    assert len(changes) == 1
    assert changes[0].delta is None


def test_xchg_swaps_both():
    effects = _effects("xchg rax, rdx")
    assert {e.register.canonical for e in effects} == {"rax", "rdx"}
    assert all(e.effect is EffectKind.EXCHANGE_SWAP for e in effects)


def test_mul_writes_rax_and_rdx():
    effects = _effects("mul rcx")
    assert {e.register.canonical for e in effects} == {"rax", "rdx"}
    assert all(e.effect is EffectKind.ARITHMETIC_MODIFY for e in effects)
    (byte_form,) = _effects("mul cl")
    assert byte_form.register == RegisterRef(canonical="rax", width=Width.WORD)


def test_shift_rotate_modifies_destination():
    (effect,) = _effects("shl rdx, 0x2")
    assert effect.effect is EffectKind.SHIFT_ROTATE_MODIFY
    assert effect.register.canonical == "rdx"


def test_compare_writes_nothing():
    assert _effects("cmp rax, rbx") == ()
    assert _effects("test eax, eax") == ()
    assert _effects("nop") == ()


def test_logic_modifies_destination():
    (effect,) = _effects("and rax, rcx")
    assert effect.effect is EffectKind.ARITHMETIC_MODIFY


def test_string_ops_use_implicit_operands():
    targets = {e.register.canonical for e in _effects("stosq") if e.register is not None}
    assert targets == {"rdi"}
    loaded = _effects("lodsb")[0]
    assert loaded.register == RegisterRef(canonical="rax", width=Width.LOW_BYTE)


def test_implicit_setting_flags_writes():
    (cdq,) = _effects("cdq")
    assert cdq.register == RegisterRef(canonical="rdx", width=Width.DWORD)
    assert _effects("clc") == ()


def test_leave_overwrites_rbp():
    effects = _effects("leave")
    assert WriteEffect(target=RegisterRef(canonical="rbp"), effect=EffectKind.FULL_OVERWRITE) in effects


def test_vector_moves():
    (effect,) = _effects("movq rax, mm0")
    assert effect.register == RegisterRef(canonical="rax")
    assert _effects("fadd st(0), st(1)") == ()


def test_uncategorized_has_no_semantics():
    with pytest.raises(UnknownSemantics):
        _effects("vfmadd231ps xmm0, xmm1, xmm2")


@pytest.mark.parametrize("text, expected", [
    ("pop rax", {"rax"}),
    ("mov [rdi+0x34fa], rsp", set()),
    ("xchg rax, rdx", {"rax", "rdx"}),
    ("mov eax, 0x1", {"rax"}),
    ("push rcx", set()),
    ("pop rsp", {"rsp"}),
    ("xchg rax, rsp", {"rax", "rsp"}),
    ("mov esp, eax", {"rsp"}),
    ("sub rsp, 0x8", {"rsp"}),
    ("push rsp", set()),
    ("cmp rsp, rax", set()),
    ("leave", {"rbp"}),
    ("movzx eax, al", set()),
])
def test_active_registers(text, expected):
    active = active_registers(parse_instruction(text))
    assert {ref.canonical for ref in active} == expected
    assert all(ref.width is Width.QWORD for ref in active)
