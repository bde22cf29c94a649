# Gadget dump ingestion
from .parser import (
    dedupe,
    merge_corpora,
    parse_dump,
    parse_instruction,
    render_gadget,
    render_instruction,
    terminator_for,
)
from .registers import REGISTER_ALIASES, register_name, resolve_register
