"""
Exception hierarchy for gadgetgrade.
Library code raises these; the CLI and the HTTP router translate them
into exit codes and HTTP status codes respectively.
"""

from typing import Any, Optional


class GadgetGradeError(Exception):
    """Base class for every error raised by gadgetgrade"""


class EmptyCorpusError(GadgetGradeError):
    """Raised when a dump yields zero usable gadgets"""

    def __init__(self, source_label: str = "", parse_stats: Optional[Any] = None):
        self.source_label = source_label
        self.parse_stats = parse_stats
        where = f" in {source_label}" if source_label else ""
        super().__init__(f"No gadgets could be parsed{where}")


class UnparseableInstruction(GadgetGradeError):
    """Raised when one `;`-separated segment does not match the instruction grammar"""

    def __init__(self, segment: str, reason: str):
        self.segment = segment
        self.reason = reason
        super().__init__(f"Cannot parse {segment!r}: {reason}")


class UnknownSemantics(GadgetGradeError):
    """Raised when write effects are requested for an uncategorized mnemonic"""

    def __init__(self, mnemonic: str):
        self.mnemonic = mnemonic
        super().__init__(f"No write semantics for mnemonic {mnemonic!r}")


class ConfigError(GadgetGradeError):
    """Raised for unreadable or invalid configuration"""


class ConfigMismatchError(GadgetGradeError):
    """Raised when two reports produced under different configurations are compared"""

    def __init__(self, before_digest: str, after_digest: str):
        self.before_digest = before_digest
        self.after_digest = after_digest
        super().__init__(
            f"Reports were produced with different configurations "
            f"({before_digest[:12]} != {after_digest[:12]})"
        )
