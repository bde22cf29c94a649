"""
Gadget dump parser.
Reads the `0x<address> : insn ; insn ; ...` lines written by gadget
discovery tools into Gadget values. Bad lines are counted and reported,
never fatal; duplicates are kept.
"""

import re
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Tuple

from loguru import logger

from ..errors import EmptyCorpusError, UnparseableInstruction
from ..models import (
    INT64_MAX,
    INT64_MIN,
    UINT64_MAX,
    Corpus,
    Gadget,
    ImmediateOperand,
    Instruction,
    LineDiagnostic,
    MemoryOperand,
    ParseStats,
    RegisterOperand,
    SpecialRegisterOperand,
    Terminator,
    TerminatorKind,
)
from .registers import is_special_register, register_name, resolve_register

GADGET_LINE = re.compile(r"^0x([0-9a-f]+)\s*:\s*(.*?)\s*$")
MNEMONIC = re.compile(r"[a-z][a-z0-9_.]*")
NUMBER = re.compile(r"([+-]?)(0x[0-9a-f]+|[0-9]+)")
MEMORY = re.compile(
    r"(?:(?P<size>byte|word|dword|qword|tbyte|fword|oword|xmmword|ymmword|zmmword)\s+ptr\s+)?"
    r"(?:(?P<segment>[cdefgs]s)\s*:\s*)?"
    r"\[(?P<expr>[^\[\]]*)\]"
)
IDENTIFIER = re.compile(r"[a-z_][a-z0-9_]*")

PREFIXES = frozenset({"lock", "rep", "repe", "repz", "repne", "repnz", "bnd", "notrack"})
MNEMONIC_ALIASES = {"retn": "ret", "retq": "ret", "callq": "call", "jmpq": "jmp"}


def _to_signed64(value: int, segment: str) -> int:
    if INT64_MIN <= value <= INT64_MAX:
        return value
    if INT64_MAX < value <= UINT64_MAX:
        return value - (UINT64_MAX + 1)
    raise UnparseableInstruction(segment, "value does not fit in 64 bits")


def _parse_number(text: str, segment: str) -> Optional[int]:
    match = NUMBER.fullmatch(text)
    if not match:
        return None
    sign, digits = match.groups()
    value = int(digits, 16) if digits.startswith("0x") else int(digits)
    return _to_signed64(-value if sign == "-" else value, segment)


def split_operands(text: str) -> List[str]:
    """Split on commas that are not inside brackets or parentheses"""
    parts, depth, current = [], 0, []
    for char in text:
        if char in "[(":
            depth += 1
        elif char in "])":
            depth -= 1
        if char == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(char)
    parts.append("".join(current).strip())
    return parts


def _parse_memory(match: re.Match, segment: str) -> MemoryOperand:
    expr = re.sub(r"\s+", "", match.group("expr"))
    seg = match.group("segment")
    inner_segment = re.match(r"([cdefgs]s):", expr)
    if inner_segment:
        seg = seg or inner_segment.group(1)
        expr = expr[inner_segment.end():]
    if not expr:
        raise UnparseableInstruction(segment, "empty memory expression")

    base = index = None
    scale = 1
    displacement = 0
    rip_relative = False
    for term in re.findall(r"[+-]?[^+-]+", expr):
        sign = -1 if term.startswith("-") else 1
        body = term.lstrip("+-")
        if "*" in body:
            left, _, right = body.partition("*")
            reg_text, scale_text = (left, right) if not left[:1].isdigit() else (right, left)
            ref = resolve_register(reg_text)
            scale_value = _parse_number(scale_text, segment)
            if ref is None or scale_value not in (1, 2, 4, 8) or sign < 0 or index is not None:
                raise UnparseableInstruction(segment, f"bad scaled index {body!r}")
            index, scale = ref, scale_value
            continue
        value = _parse_number(body, segment)
        if value is not None:
            displacement += sign * value
            continue
        if sign < 0:
            raise UnparseableInstruction(segment, f"negated register {body!r}")
        if body == "rip":
            if rip_relative or base is not None:
                raise UnparseableInstruction(segment, "rip must be the only base")
            rip_relative = True
            continue
        ref = resolve_register(body)
        if ref is None:
            if IDENTIFIER.fullmatch(body):
                raise UnparseableInstruction(segment, f"unknown register {body!r}")
            raise UnparseableInstruction(segment, f"bad memory term {body!r}")
        if base is None and not rip_relative:
            base = ref
        elif index is None:
            index = ref
        else:
            raise UnparseableInstruction(segment, "too many registers in memory expression")

    return MemoryOperand(
        base=base,
        index=index,
        scale=scale,
        displacement=_to_signed64(displacement, segment),
        size=match.group("size"),
        segment=seg,
        rip_relative=rip_relative,
    )


def parse_operand(text: str, segment: str = ""):
    """One operand: register, immediate, memory expression or special register"""
    segment = segment or text
    ref = resolve_register(text)
    if ref is not None:
        return RegisterOperand(ref=ref)
    if is_special_register(text):
        return SpecialRegisterOperand(name=text)
    value = _parse_number(text, segment)
    if value is not None:
        return ImmediateOperand(value=value)
    match = MEMORY.fullmatch(text)
    if match:
        return _parse_memory(match, segment)
    raise UnparseableInstruction(segment, f"unrecognized operand {text!r}")


@lru_cache(maxsize=65536)
def parse_instruction(token_text: str) -> Instruction:
    """Parse one `;`-separated segment of a gadget line"""
    text = token_text.strip().lower()
    if not text:
        raise UnparseableInstruction(token_text, "empty instruction")
    words = text.split(None, 1)
    prefixes = []
    while words[0] in PREFIXES and len(words) > 1:
        prefixes.append(words[0])
        words = words[1].split(None, 1)
    mnemonic = MNEMONIC_ALIASES.get(words[0], words[0])
    if not MNEMONIC.fullmatch(mnemonic):
        raise UnparseableInstruction(token_text, f"bad mnemonic {mnemonic!r}")

    operands = ()
    if len(words) > 1:
        pieces = split_operands(words[1])
        if len(pieces) > 3:
            raise UnparseableInstruction(token_text, "more than three operands")
        operands = tuple(parse_operand(piece, token_text) for piece in pieces)
    return Instruction(mnemonic=mnemonic, operands=operands, prefixes=tuple(prefixes))


def terminator_for(insn: Instruction) -> Optional[Terminator]:
    """Terminator described by the last instruction, or None if it is not one"""
    ops = insn.operands
    if insn.mnemonic == "ret":
        if not ops:
            return Terminator(kind=TerminatorKind.RET)
        if len(ops) == 1 and isinstance(ops[0], ImmediateOperand) and ops[0].value >= 0:
            return Terminator(kind=TerminatorKind.RET, stack_adjust=ops[0].value)
        return None
    if insn.mnemonic in ("call", "jmp") and len(ops) == 1 and isinstance(ops[0], (RegisterOperand, MemoryOperand)):
        kind = TerminatorKind.INDIRECT_CALL if insn.mnemonic == "call" else TerminatorKind.INDIRECT_JMP
        return Terminator(kind=kind)
    return None


@lru_cache(maxsize=65536)
def _parse_body(segments: Tuple[str, ...]) -> Tuple[Tuple[Instruction, ...], Terminator]:
    instructions = tuple(parse_instruction(segment) for segment in segments)
    terminator = terminator_for(instructions[-1])
    if terminator is None:
        raise UnparseableInstruction(segments[-1], "no terminator")
    for segment, insn in zip(segments[:-1], instructions[:-1]):
        # control leaves at the first terminator
        if terminator_for(insn) is not None:
            raise UnparseableInstruction(segment, "terminator before end")
    return instructions, terminator


def _leading_mnemonic(segment: str) -> str:
    words = segment.split()
    while len(words) > 1 and words[0] in PREFIXES:
        words = words[1:]
    return words[0] if words else ""


def parse_dump(text: str, config=None, source_label: str = "") -> Corpus:
    """Parse a whole dump file into a Corpus

    `config` supplies `max_gadget_len` and `privileged`; the defaults of
    AnalysisConfig apply when it is omitted.
    """
    if config is None:
        from ..config import AnalysisConfig
        config = AnalysisConfig()
    privileged = frozenset(config.privileged)
    max_len = config.max_gadget_len

    gadgets: List[Gadget] = []
    diagnostics: List[LineDiagnostic] = []
    counts: Dict[str, int] = dict.fromkeys(ParseStats.model_fields, 0)

    def reject(bucket: str, line_number: int, reason: str, line: str):
        counts[bucket] += 1
        diagnostics.append(LineDiagnostic(line_number=line_number, reason=reason, text=line))
        logger.debug(f"{source_label or 'dump'}:{line_number}: {reason}")

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip().lower()
        match = GADGET_LINE.match(line)
        if not match:
            counts["skipped_lines"] += 1
            continue
        address = int(match.group(1), 16)
        segments = tuple(segment.strip() for segment in match.group(2).split(";"))
        if address > UINT64_MAX:
            reject("discarded_unparseable", line_number, "address does not fit in 64 bits", line)
            continue
        if any(not segment for segment in segments):
            reject("discarded_unparseable", line_number, "empty instruction", line)
            continue
        trapping = [m for m in map(_leading_mnemonic, segments) if m in privileged]
        if trapping:
            reject("discarded_privileged", line_number, f"privileged instruction {trapping[0]}", line)
            continue
        if len(segments) > max_len:
            reject("discarded_too_long", line_number, f"{len(segments)} instructions exceed {max_len}", line)
            continue
        try:
            instructions, terminator = _parse_body(segments)
        except UnparseableInstruction as e:
            reject("discarded_unparseable", line_number, str(e), line)
            continue
        # parts are validated already; skip re-validation on the hot path
        gadgets.append(Gadget.model_construct(address=address, instructions=instructions, terminator=terminator))

    counts["accepted"] = len(gadgets)
    stats = ParseStats(**counts)
    logger.info(
        f"Parsed {source_label or 'dump'}: {stats.accepted} gadgets, "
        f"{stats.discarded_privileged} privileged, {stats.discarded_unparseable} unparseable, "
        f"{stats.discarded_too_long} too long, {stats.skipped_lines} other lines"
    )
    if not gadgets:
        raise EmptyCorpusError(source_label, stats)
    return Corpus(
        gadgets=tuple(gadgets),
        source_label=source_label,
        parse_stats=stats,
        diagnostics=tuple(diagnostics),
    )


def dedupe(corpus: Corpus) -> Corpus:
    """Keep the first gadget for every distinct instruction sequence"""
    seen = set()
    unique = []
    for gadget in corpus.gadgets:
        if gadget.instructions not in seen:
            seen.add(gadget.instructions)
            unique.append(gadget)
    return corpus.model_copy(update={"gadgets": tuple(unique)})


def merge_corpora(corpora: Iterable[Corpus], source_label: str = "") -> Corpus:
    """Concatenate corpora; stats and diagnostics are summed"""
    corpora = list(corpora)
    totals = dict.fromkeys(ParseStats.model_fields, 0)
    for corpus in corpora:
        for key in totals:
            totals[key] += getattr(corpus.parse_stats, key)
    return Corpus(
        gadgets=tuple(g for corpus in corpora for g in corpus.gadgets),
        source_label=source_label or "+".join(c.source_label for c in corpora if c.source_label),
        parse_stats=ParseStats(**totals),
        diagnostics=tuple(d for corpus in corpora for d in corpus.diagnostics),
    )


def render_operand(operand) -> str:
    if isinstance(operand, RegisterOperand):
        return register_name(operand.ref)
    if isinstance(operand, ImmediateOperand):
        return hex(operand.value) if operand.value >= 0 else "-" + hex(-operand.value)
    if isinstance(operand, SpecialRegisterOperand):
        return operand.name
    terms = []
    if operand.rip_relative:
        terms.append("rip")
    elif operand.base is not None:
        terms.append(register_name(operand.base))
    if operand.index is not None:
        terms.append(f"{register_name(operand.index)}*{operand.scale}")
    expr = "+".join(terms)
    if operand.displacement or not terms:
        magnitude = hex(abs(operand.displacement))
        if not terms:
            expr = magnitude if operand.displacement >= 0 else "-" + magnitude
        else:
            expr += ("+" if operand.displacement >= 0 else "-") + magnitude
    text = f"[{expr}]"
    if operand.segment:
        text = f"{operand.segment}:{text}"
    if operand.size:
        text = f"{operand.size} ptr {text}"
    return text


def render_instruction(insn: Instruction) -> str:
    head = " ".join(insn.prefixes + (insn.mnemonic,))
    if not insn.operands:
        return head
    return f"{head} {', '.join(render_operand(op) for op in insn.operands)}"


def render_gadget(gadget: Gadget, with_address: bool = True) -> str:
    """Canonical dump-line text; without the address it is the uniqueness key"""
    body = " ; ".join(render_instruction(insn) for insn in gadget.instructions)
    return f"0x{gadget.address:x} : {body}" if with_address else body
