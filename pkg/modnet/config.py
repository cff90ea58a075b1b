# modnet/config.py
"""
Configuration loading for modnet-design.

A config file (TOML or JSON) may carry two sections, `[design]` and
`[benders]`, whose keys are the fields of DesignConfig and BendersConfig.
Values are merged with precedence CLI flag > config file > built-in defaults.
"""
import json
import logging
import os
import tomllib
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from pydantic import ValidationError

from .exceptions import ConfigError
from .models import BendersConfig, DesignConfig

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "MODNET_LOG_LEVEL"
_SECTIONS = ("design", "benders")


def read_config_file(path: Union[str, Path]) -> Dict[str, Dict[str, Any]]:
    """
    Read a TOML or JSON config file into its `design` and `benders` sections.

    Args:
        path: File path; the suffix selects the parser (.toml or .json).

    Returns:
        Dict with keys "design" and "benders" (missing sections are empty).

    Raises:
        ConfigError: If the file is missing, unparsable or has unknown sections.
    """
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigError(f"Config file not found: {cfg_path}")
    text = cfg_path.read_text(encoding="utf-8")
    try:
        if cfg_path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"Could not parse config file {cfg_path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"Config file {cfg_path} must contain a table/object at top level")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"Unknown config section(s) {sorted(unknown)} in {cfg_path}; expected {list(_SECTIONS)}")
    logger.debug(f"Read config file {cfg_path} with sections {sorted(raw)}.")
    return {section: dict(raw.get(section, {})) for section in _SECTIONS}


def _merge(defaults: Mapping[str, Any], *layers: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    merged = dict(defaults)
    for layer in layers:
        if not layer:
            continue
        merged.update({k: v for k, v in layer.items() if v is not None})
    return merged


def resolve_config(
    config_path: Optional[Union[str, Path]] = None,
    design_overrides: Optional[Mapping[str, Any]] = None,
    benders_overrides: Optional[Mapping[str, Any]] = None,
) -> Tuple[DesignConfig, BendersConfig]:
    """
    Build validated configs with precedence CLI > file > defaults.

    Override values of None mean "flag not given" and are skipped.
    """
    file_sections: Dict[str, Dict[str, Any]] = {s: {} for s in _SECTIONS}
    if config_path is not None:
        file_sections = read_config_file(config_path)
    try:
        design = DesignConfig(**_merge({}, file_sections["design"], design_overrides))
        benders = BendersConfig(**_merge({}, file_sections["benders"], benders_overrides))
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        raise ConfigError(f"Invalid configuration value for '{where}': {first.get('msg')}") from e
    return design, benders


def log_level_from_env(default: str = "INFO") -> str:
    level = os.environ.get(LOG_LEVEL_ENV, default).upper()
    if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        logger.warning(f"Ignoring invalid {LOG_LEVEL_ENV}='{level}', using {default}.")
        return default
    return level
