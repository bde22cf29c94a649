"""
Tests for dump parsing, the register alias table and canonical rendering.
"""

import pytest

from app.config import AnalysisConfig
from app.errors import EmptyCorpusError, UnparseableInstruction
from app.ingest.parser import (
    dedupe,
    merge_corpora,
    parse_dump,
    parse_instruction,
    render_gadget,
    render_instruction,
    split_operands,
    terminator_for,
)
from app.ingest.registers import REGISTER_ALIASES, register_name, resolve_register
from app.models import (
    ImmediateOperand,
    MemoryOperand,
    RegisterOperand,
    RegisterRef,
    SpecialRegisterOperand,
    TerminatorKind,
    Width,
)

LONG_GADGET = "0x400000 : pop rax ; push rsp ; pop rbp ; mov [rdi+0x34fa], rsp ; ret 0x2dbf1"


def test_minimal_line():
    corpus = parse_dump("0x401234 : pop rax ; ret")
    assert len(corpus) == 1
    gadget = corpus.gadgets[0]
    assert gadget.address == 0x401234
    assert len(gadget.instructions) == 2
    assert gadget.terminator.kind is TerminatorKind.RET
    assert gadget.terminator.stack_adjust == 0


def test_long_gadget_keeps_ret_adjust():
    gadget = parse_dump(LONG_GADGET).gadgets[0]
    assert len(gadget.instructions) == 5
    assert gadget.terminator.kind is TerminatorKind.RET
    assert gadget.terminator.stack_adjust == 0x2dbf1


def test_duplicates_are_kept():
    corpus = parse_dump("0x401000 : pop rax ; ret\n0x402000 : pop rax ; ret")
    assert len(corpus) == 2
    assert corpus.gadgets[0].instructions == corpus.gadgets[1].instructions


def test_privileged_gadget_discarded():
    text = "0x401000 : hlt ; ret\n0x401010 : pop rax ; ret"
    corpus = parse_dump(text)
    assert len(corpus) == 1
    assert corpus.parse_stats.discarded_privileged == 1
    assert corpus.diagnostics[0].line_number == 1


def test_only_privileged_is_empty_corpus():
    with pytest.raises(EmptyCorpusError) as excinfo:
        parse_dump("0x401000 : hlt ; ret", source_label="trap.txt")
    assert excinfo.value.parse_stats.discarded_privileged == 1
    assert "trap.txt" in str(excinfo.value)


def test_privileged_list_is_configurable():
    config = AnalysisConfig(privileged="wait, hlt")
    corpus = parse_dump("0x1 : wait ; ret\n0x2 : cli ; ret", config)
    assert corpus.parse_stats.discarded_privileged == 1
    assert corpus.gadgets[0].first.mnemonic == "cli"


def test_too_long_gadgets_counted():
    body = " ; ".join(["nop"] * 15 + ["ret"])
    corpus = parse_dump(f"0x1 : {body}\n0x2 : nop ; ret")
    assert len(corpus) == 1
    assert corpus.parse_stats.discarded_too_long == 1

    relaxed = parse_dump(f"0x1 : {body}", AnalysisConfig(max_gadget_len=16))
    assert len(relaxed) == 1


def test_bad_lines_become_diagnostics():
    text = "\n".join([
        "Gadgets information",
        "0x10 : mov rax, [rbx+zz] ; ret",
        "0x20 : pop rax ; pop rbx",
        "0x30 : pop rax ;  ; ret",
        "0x40 : pop rax ; ret",
    ])
    corpus = parse_dump(text)
    assert len(corpus) == 1
    assert corpus.parse_stats.skipped_lines == 1
    assert corpus.parse_stats.discarded_unparseable == 3
    reasons = [d.reason for d in corpus.diagnostics]
    assert "unknown register 'zz'" in reasons[0]
    assert "no terminator" in reasons[1]
    assert [d.line_number for d in corpus.diagnostics] == [2, 3, 4]


def test_mixed_case_is_lowercased():
    gadget = parse_dump("0x40ABCD : POP RAX ; RET").gadgets[0]
    assert gadget.address == 0x40ABCD
    assert gadget.first.mnemonic == "pop"


def test_indirect_terminators():
    corpus = parse_dump("0x1 : pop rcx ; call rax\n0x2 : jmp qword ptr [rbx]\n0x3 : bnd jmp rdx")
    kinds = [g.terminator.kind for g in corpus.gadgets]
    assert kinds == [TerminatorKind.INDIRECT_CALL, TerminatorKind.INDIRECT_JMP, TerminatorKind.INDIRECT_JMP]
    assert corpus.gadgets[2].first.prefixes == ("bnd",)


def test_direct_jump_is_not_a_terminator():
    assert terminator_for(parse_instruction("jmp 0x401000")) is None
    assert terminator_for(parse_instruction("add rax, rbx")) is None


def test_parse_pop():
    insn = parse_instruction("pop rax")
    assert insn.mnemonic == "pop"
    assert insn.operands == (RegisterOperand(ref=RegisterRef(canonical="rax")),)


def test_parse_memory_destination():
    insn = parse_instruction("mov [rdi+0x34fa], rsp")
    assert insn.mnemonic == "mov"
    memory, source = insn.operands
    assert memory == MemoryOperand(base=RegisterRef(canonical="rdi"), displacement=0x34fa)
    assert source == RegisterOperand(ref=RegisterRef(canonical="rsp"))


def test_parse_ret_and_immediate():
    assert parse_instruction("ret").operands == ()
    insn = parse_instruction("add r8, 0x10")
    assert insn.operands[1] == ImmediateOperand(value=16)
    assert insn.operands[0].ref == RegisterRef(canonical="r8")


def test_retn_normalizes_to_ret():
    assert parse_instruction("retn 0x8").mnemonic == "ret"


def test_full_memory_form():
    insn = parse_instruction("lea rax, qword ptr fs:[rbx + rcx*4 - 0x10]")
    memory = insn.operands[1]
    assert memory.base.canonical == "rbx"
    assert memory.index.canonical == "rcx"
    assert memory.scale == 4
    assert memory.displacement == -0x10
    assert memory.size == "qword"
    assert memory.segment == "fs"


def test_rip_relative_memory():
    memory = parse_instruction("lea rax, [rip+0x200]").operands[1]
    assert memory.rip_relative
    assert memory.base is None
    assert memory.displacement == 0x200


def test_immediate_wraps_to_signed():
    insn = parse_instruction("mov rax, 0xffffffffffffffff")
    assert insn.operands[1].value == -1


def test_special_register_operands():
    insn = parse_instruction("fadd st(0), st(1)")
    assert insn.operands == (SpecialRegisterOperand(name="st(0)"), SpecialRegisterOperand(name="st(1)"))
    assert split_operands("st(0), [rax+rbx*2]") == ["st(0)", "[rax+rbx*2]"]


@pytest.mark.parametrize("segment", ["mov rax, [rbx+zz]", "mov rax, [rax*3]", "1mov rax, rbx", "mov a, b, c, d"])
def test_unparseable_segments(segment):
    with pytest.raises(UnparseableInstruction):
        parse_instruction(segment)


def test_alias_examples():
    assert resolve_register("eax") == RegisterRef(canonical="rax", width=Width.DWORD)
    assert resolve_register("r8d") == RegisterRef(canonical="r8", width=Width.DWORD)
    assert resolve_register("sil") == RegisterRef(canonical="rsi", width=Width.LOW_BYTE)
    assert resolve_register("ah") == RegisterRef(canonical="rax", width=Width.HIGH_BYTE)
    assert resolve_register("xmm0") is None


def test_alias_table_is_bijective():
    refs = list(REGISTER_ALIASES.values())
    assert len(set(refs)) == len(refs)
    for name, ref in REGISTER_ALIASES.items():
        assert register_name(ref) == name
    # sixteen registers with four widths, plus ah/bh/ch/dh
    assert len(REGISTER_ALIASES) == 16 * 4 + 4


def test_render_round_trip(golden_corpus):
    for gadget in golden_corpus.gadgets:
        reparsed = parse_dump(render_gadget(gadget)).gadgets[0]
        assert reparsed == gadget


def test_render_canonical_text():
    gadget = parse_dump(LONG_GADGET).gadgets[0]
    assert render_gadget(gadget) == LONG_GADGET
    assert render_instruction(parse_instruction("lock add qword ptr [rax], 1")) == "lock add qword ptr [rax], 0x1"


def test_dedupe_keeps_first_occurrence():
    corpus = parse_dump("0x1 : pop rax ; ret\n0x2 : pop rax ; ret\n0x3 : ret")
    unique = dedupe(corpus)
    assert [g.address for g in unique.gadgets] == [0x1, 0x3]


def test_merge_corpora_sums_stats():
    first = parse_dump("0x1 : pop rax ; ret\n0x2 : hlt ; ret", source_label="a")
    second = parse_dump("0x3 : ret\njunk", source_label="b")
    merged = merge_corpora([first, second])
    assert len(merged) == 2
    assert merged.source_label == "a+b"
    assert merged.parse_stats.discarded_privileged == 1
    assert merged.parse_stats.skipped_lines == 1
    assert merged.parse_stats.accepted == 2


@pytest.mark.parametrize("body", [
    "pop rax ; ret ; ret",
    "pop rax ; ret 0x8 ; pop rbx ; ret",
    "pop rax ; call rbx ; ret",
    "jmp rax ; pop rbx ; ret",
])
def test_terminator_before_end_is_rejected(body):
    with pytest.raises(EmptyCorpusError) as excinfo:
        parse_dump(f"0x10 : {body}")
    assert excinfo.value.parse_stats.discarded_unparseable == 1


def test_terminator_before_end_is_diagnosed():
    corpus = parse_dump("0x10 : pop rax ; ret ; ret\n0x20 : pop rax ; jmp 0x401000 ; ret")
    assert len(corpus) == 1
    assert "terminator before end" in corpus.diagnostics[0].reason
