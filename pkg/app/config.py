"""
Configuration for gadgetgrade analyses.
Settings are layered: built-in defaults, then GADGETGRADE_* environment
variables (a .env file is honoured), then a key-value config file, then
explicit overrides from the CLI or HTTP query parameters.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values, load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError
from .models import GENERAL_PURPOSE_REGISTERS, Category, PreservationMode
from .isa.categories import CategoryTable, load_category_table, normalize_category_name

load_dotenv()

ENV_PREFIX = "GADGETGRADE_"

# Instructions that trap outside ring 0; cpuid is unprivileged and kept
DEFAULT_PRIVILEGED = (
    "hlt", "in", "out", "ins", "outs", "cli", "sti", "lgdt", "sgdt", "lidt",
    "sidt", "ltr", "lmsw", "clts", "invd", "invlpg", "wbinvd", "rdmsr", "wrmsr",
    "iretq", "iretd", "iret", "sysexit", "sysret", "vmcall",
)

DEFAULT_TARGET_REGISTERS = ("rcx", "rdx", "r8", "r9")

# Grading subtracts n for `ret n`, although the CPU adds it
RET_N_SPS_CONVENTION = "decrement"

SCALAR_KEYS = (
    "max_gadget_len", "q_threshold", "sps_limit", "alignment",
    "preservation", "target_registers", "unique_only", "privileged",
)


def _split_list(v):
    if isinstance(v, str):
        return tuple(item.strip().lower() for item in v.split(",") if item.strip())
    return tuple(v)


class ConfigFingerprint(BaseModel):
    """Every setting that can change a report, plus a digest over them"""
    model_config = ConfigDict(frozen=True)

    max_gadget_len: int
    q_threshold: float
    sps_limit: int
    alignment: int
    preservation: PreservationMode
    unique_only: bool
    target_registers: Tuple[str, ...]
    table_digest: str
    ret_n_sps_convention: str = RET_N_SPS_CONVENTION
    digest: str = ""


class AnalysisConfig(BaseModel):
    """Thresholds, tables and mode flags shared by all metric passes"""
    model_config = ConfigDict(frozen=True)

    max_gadget_len: int = Field(default=15, gt=0)
    privileged: Tuple[str, ...] = DEFAULT_PRIVILEGED
    category_overrides: Dict[Category, Tuple[str, ...]] = Field(default_factory=dict)
    target_registers: Tuple[str, ...] = DEFAULT_TARGET_REGISTERS
    preservation: PreservationMode = PreservationMode.RELAXED
    q_threshold: float = Field(default=1.0, ge=0)
    sps_limit: int = Field(default=4096, gt=0)
    alignment: int = Field(default=8, gt=0)
    unique_only: bool = False

    @field_validator("privileged", mode="before")
    @classmethod
    def split_privileged(cls, v):
        return _split_list(v)

    @field_validator("target_registers", mode="before")
    @classmethod
    def split_targets(cls, v):
        return _split_list(v)

    @field_validator("target_registers")
    @classmethod
    def validate_targets(cls, v):
        unknown = [name for name in v if name not in GENERAL_PURPOSE_REGISTERS]
        if unknown:
            raise ValueError(f"Unknown target registers: {', '.join(unknown)}")
        if not v:
            raise ValueError("At least one target register is required")
        return v

    @property
    def privileged_set(self) -> frozenset:
        return frozenset(self.privileged)

    @property
    def category_table(self) -> CategoryTable:
        return load_category_table(self.category_overrides)

    def updated(self, **changes) -> "AnalysisConfig":
        """Copy with changes applied and validated; None values are ignored"""
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return build_config(data)

    def fingerprint(self) -> ConfigFingerprint:
        table_payload = self.category_table.digest() + "|" + ",".join(sorted(self.privileged))
        fields = {
            "max_gadget_len": self.max_gadget_len,
            "q_threshold": self.q_threshold,
            "sps_limit": self.sps_limit,
            "alignment": self.alignment,
            "preservation": self.preservation,
            "unique_only": self.unique_only,
            "target_registers": self.target_registers,
            "table_digest": hashlib.sha256(table_payload.encode("utf-8")).hexdigest(),
        }
        draft = ConfigFingerprint(**fields)
        canonical = json.dumps(draft.model_dump(mode="json", exclude={"digest"}), sort_keys=True)
        return draft.model_copy(update={"digest": hashlib.sha256(canonical.encode("utf-8")).hexdigest()})


def build_config(data: Mapping[str, Any]) -> AnalysisConfig:
    """Validate a settings mapping, turning pydantic errors into ConfigError"""
    try:
        return AnalysisConfig.model_validate(dict(data))
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def parse_settings(values: Mapping[str, Optional[str]], source: str) -> Dict[str, Any]:
    """Interpret raw key-value settings (`category.<name>`, `privileged`, scalars)"""
    settings: Dict[str, Any] = {}
    overrides: Dict[Category, Tuple[str, ...]] = {}
    for raw_key, value in values.items():
        key = raw_key.strip().lower()
        if value is None:
            raise ConfigError(f"{source}: key {raw_key!r} has no value")
        if key.startswith("category."):
            try:
                category = normalize_category_name(key[len("category."):])
            except ValueError as e:
                raise ConfigError(f"{source}: {e}") from e
            overrides[category] = overrides.get(category, ()) + _split_list(value)
        elif key in SCALAR_KEYS:
            settings[key] = value
        else:
            raise ConfigError(f"{source}: unknown setting {raw_key!r}")
    if overrides:
        settings["category_overrides"] = overrides
    return settings


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a `key = value` override file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        values = dotenv_values(path, encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    return parse_settings(values, str(path))


def settings_from_env(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """GADGETGRADE_<KEY> variables for the scalar settings"""
    environ = os.environ if environ is None else environ
    values = {
        key: environ[ENV_PREFIX + key.upper()]
        for key in SCALAR_KEYS
        if ENV_PREFIX + key.upper() in environ
    }
    return parse_settings(values, "environment")


def load_config(
    config_file: Optional[Union[str, Path]] = None,
    use_env: bool = True,
    **overrides,
) -> AnalysisConfig:
    """Layer defaults, environment, config file and explicit overrides"""
    data: Dict[str, Any] = {}
    if use_env:
        from_env = settings_from_env()
        if from_env:
            logger.debug(f"Applying environment settings: {sorted(from_env)}")
        data.update(from_env)
    if config_file is not None:
        from_file = read_config_file(config_file)
        logger.debug(f"Applying settings from {config_file}: {sorted(from_file)}")
        file_overrides = from_file.pop("category_overrides", {})
        data.update(from_file)
        if file_overrides:
            merged = dict(data.get("category_overrides", {}))
            merged.update(file_overrides)
            data["category_overrides"] = merged
    data.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(data)
