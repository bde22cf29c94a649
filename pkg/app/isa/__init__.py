# Instruction categories and write semantics
from .categories import DEFAULT_CATEGORY_TABLE, CategoryTable, categorize_instruction, load_category_table
from .semantics import EffectKind, WriteEffect, active_registers, write_effects
