"""
Core domain values for gadgetgrade.
Registers, operands, instructions and gadgets parsed from gadget dumps,
plus the corpus that carries them. Everything here is frozen so parsed
corpora can be shared read-only between metric passes.
"""

from enum import Enum
from typing import Annotated, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

GENERAL_PURPOSE_REGISTERS = (
    "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
    "r8", "r9", "r10", "r11", "r12", "r13", "r14", "r15",
)

# Only the legacy A/B/C/D registers expose a high byte (ah, bh, ch, dh)
HIGH_BYTE_REGISTERS = ("rax", "rbx", "rcx", "rdx")

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1
UINT64_MAX = 2 ** 64 - 1


class Width(str, Enum):
    """Width of a register access"""
    QWORD = "64"
    DWORD = "32"
    WORD = "16"
    LOW_BYTE = "8-low"
    HIGH_BYTE = "8-high"

    @property
    def bits(self) -> int:
        return {"64": 64, "32": 32, "16": 16}.get(self.value, 8)


class Category(str, Enum):
    """Gadget categories, keyed on the first instruction of a gadget"""
    DATA_MOVE = "data_move"
    ARITHMETIC = "arithmetic"
    LOGIC = "logic"
    CONTROL_FLOW = "control_flow"
    SHIFT_ROTATE = "shift_rotate"
    SETTING_FLAGS = "setting_flags"
    STRING = "string"
    FLOATING_POINT = "floating_point"
    MISC = "misc"
    MMX = "mmx"
    NOP = "nop"
    RET = "ret"
    UNCATEGORIZED = "uncategorized"

    @property
    def label(self) -> str:
        return CATEGORY_LABELS[self]


CATEGORY_LABELS = {
    Category.DATA_MOVE: "Data move",
    Category.ARITHMETIC: "Arithmetic",
    Category.LOGIC: "Logic",
    Category.CONTROL_FLOW: "Control flow",
    Category.SHIFT_ROTATE: "Shift & Rotate",
    Category.SETTING_FLAGS: "Setting flags",
    Category.STRING: "String",
    Category.FLOATING_POINT: "Floating point",
    Category.MISC: "Misc",
    Category.MMX: "MMX",
    Category.NOP: "NOP",
    Category.RET: "RET",
    Category.UNCATEGORIZED: "Uncategorized",
}

# The twelve categories in table order; Uncategorized is reported separately
STANDARD_CATEGORIES = tuple(c for c in Category if c is not Category.UNCATEGORIZED)


class PreservationMode(str, Enum):
    """How aggressively later instructions are treated as destroying r_d"""
    RELAXED = "relaxed"
    STRICT = "strict"


class RegisterRef(BaseModel):
    """A general-purpose register access: canonical 64-bit name plus width"""
    model_config = ConfigDict(frozen=True)

    canonical: str
    width: Width = Width.QWORD

    @field_validator("canonical")
    @classmethod
    def validate_canonical(cls, v):
        if v not in GENERAL_PURPOSE_REGISTERS:
            raise ValueError(f"{v!r} is not a general-purpose register")
        return v

    @model_validator(mode="after")
    def validate_high_byte(self):
        if self.width is Width.HIGH_BYTE and self.canonical not in HIGH_BYTE_REGISTERS:
            raise ValueError(f"{self.canonical} has no high-byte subregister")
        return self

    @property
    def is_full_width(self) -> bool:
        """64-bit writes and zero-extending 32-bit writes replace the whole register"""
        return self.width in (Width.QWORD, Width.DWORD)

    def widened(self) -> "RegisterRef":
        return RegisterRef(canonical=self.canonical)


class RegisterOperand(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["register"] = "register"
    ref: RegisterRef


class ImmediateOperand(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["immediate"] = "immediate"
    value: int

    @field_validator("value")
    @classmethod
    def validate_range(cls, v):
        if not INT64_MIN <= v <= INT64_MAX:
            raise ValueError("immediate does not fit in a signed 64-bit value")
        return v


class MemoryOperand(BaseModel):
    """Intel-syntax memory expression: size ptr seg:[base + index*scale + disp]"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["memory"] = "memory"
    base: Optional[RegisterRef] = None
    index: Optional[RegisterRef] = None
    scale: Literal[1, 2, 4, 8] = 1
    displacement: int = 0
    size: Optional[str] = None
    segment: Optional[str] = None
    rip_relative: bool = False

    @field_validator("displacement")
    @classmethod
    def validate_displacement(cls, v):
        if not INT64_MIN <= v <= INT64_MAX:
            raise ValueError("displacement does not fit in a signed 64-bit value")
        return v

    @model_validator(mode="after")
    def validate_base(self):
        # rip is a pseudo-base; it never shares the slot with a real register
        if self.rip_relative and self.base is not None:
            raise ValueError("rip-relative operand cannot also have a base register")
        return self


class SpecialRegisterOperand(BaseModel):
    """Non-general-purpose register (xmm0, mm1, st(0), bnd0, fs, cr3, ...)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["special"] = "special"
    name: str


Operand = Annotated[
    Union[RegisterOperand, ImmediateOperand, MemoryOperand, SpecialRegisterOperand],
    Field(discriminator="kind"),
]


class Instruction(BaseModel):
    """One parsed instruction; operands are in Intel order (destination first)"""
    model_config = ConfigDict(frozen=True)

    mnemonic: str
    operands: Tuple[Operand, ...] = ()
    prefixes: Tuple[str, ...] = ()

    @field_validator("mnemonic")
    @classmethod
    def validate_mnemonic(cls, v):
        if not v or not v.isascii() or v != v.lower():
            raise ValueError("mnemonic must be non-empty lowercase ASCII")
        return v

    @field_validator("operands")
    @classmethod
    def validate_operand_count(cls, v):
        if len(v) > 3:
            raise ValueError("at most three operands are supported")
        return v

    @property
    def destination(self):
        return self.operands[0] if self.operands else None

    def destination_register(self) -> Optional[RegisterRef]:
        dest = self.destination
        return dest.ref if isinstance(dest, RegisterOperand) else None


class TerminatorKind(str, Enum):
    RET = "ret"
    INDIRECT_CALL = "indirect_call"
    INDIRECT_JMP = "indirect_jmp"


class Terminator(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: TerminatorKind
    stack_adjust: int = Field(default=0, ge=0)  # the n of `ret n`


class Gadget(BaseModel):
    """A gadget: source address plus instructions ending in a terminator"""
    model_config = ConfigDict(frozen=True)

    address: int = Field(ge=0, le=UINT64_MAX)
    instructions: Tuple[Instruction, ...] = Field(min_length=1)
    terminator: Terminator

    @property
    def first(self) -> Instruction:
        return self.instructions[0]

    @property
    def is_ret_terminated(self) -> bool:
        return self.terminator.kind is TerminatorKind.RET


class ParseStats(BaseModel):
    """Line accounting for one ingested dump"""
    accepted: int = 0
    discarded_privileged: int = 0
    discarded_unparseable: int = 0
    discarded_too_long: int = 0
    skipped_lines: int = 0


class LineDiagnostic(BaseModel):
    model_config = ConfigDict(frozen=True)

    line_number: int
    reason: str
    text: str


class Corpus(BaseModel):
    """Ordered multiset of gadgets from one dump; duplicates are retained"""
    model_config = ConfigDict(frozen=True)

    gadgets: Tuple[Gadget, ...] = ()
    source_label: str = ""
    parse_stats: ParseStats = Field(default_factory=ParseStats)
    diagnostics: Tuple[LineDiagnostic, ...] = ()

    def __len__(self) -> int:
        return len(self.gadgets)
