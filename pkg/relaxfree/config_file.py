"""Experiment configuration files for relaxfree.

Configuration is layered, lowest priority first:
  1. Defaults (in code)
  2. Experiment file (flat TOML, e.g. configs/table1_rf_dt0.5.toml)
  3. Environment variables (RELAXFREE_*)
  4. CLI arguments (highest priority)
"""

import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

try:
    import tomllib  # Python 3.11+
except ImportError:
    import tomli as tomllib  # type: ignore

from relaxfree.config import ExperimentConfig

logger = logging.getLogger("relaxfree")


class ConfigFileError(ValueError):
    """Raised when an experiment file cannot be read or parsed."""


def load_config_file(path: Path) -> Dict[str, Any]:
    """Load a flat experiment file.

    Args:
        path: Path to the TOML file.

    Returns:
        Dictionary of configuration values.

    Raises:
        ConfigFileError: If the file is missing, malformed or nested.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigFileError(f"Config file not found: {path}")

    try:
        with open(path, "rb") as f:
            config = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigFileError(f"Failed to parse config file {path}: {e}")

    nested = [key for key, value in config.items() if isinstance(value, dict)]
    if nested:
        raise ConfigFileError(f"Config file {path} must be flat key = value, found tables: {nested}")

    logger.info(f"Loaded config from: {path}")
    return config


def _format_value(value: Any) -> Optional[str]:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    return None


def save_config_file(config: Dict[str, Any], path: Path) -> Path:
    """Save a flat configuration to a TOML file.

    None values are skipped. Floats are written with ``repr`` so they
    read back exactly.

    Returns:
        Path where the config was saved.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    lines = ["# relaxfree experiment configuration", ""]
    for key, value in config.items():
        if value is None:
            continue
        formatted = _format_value(value)
        if formatted is None:
            logger.warning(f"Skipping {key}: cannot write {type(value).__name__} to TOML")
            continue
        lines.append(f"{key} = {formatted}")

    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")

    logger.info(f"Saved config to: {path}")
    return path


def parse_k(text: str) -> Tuple[float, ...]:
    """Parse a comma-separated k-vector such as "1,2,-2,-1"."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"Empty k-vector: {text!r}")
    return tuple(float(p) for p in parts)


def _parse_bool(text: str) -> bool:
    return text.lower() in ("true", "1", "yes")


ENV_MAPPING: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "RELAXFREE_EXPERIMENT": ("experiment", str),
    "RELAXFREE_SCHEME": ("scheme", str),
    "RELAXFREE_MODE": ("mode", str),
    "RELAXFREE_K": ("k", parse_k),
    "RELAXFREE_DT": ("dt", float),
    "RELAXFREE_MU": ("mu", float),
    "RELAXFREE_CFL": ("cfl", float),
    "RELAXFREE_T_END": ("t_end", float),
    "RELAXFREE_SEED": ("seed", int),
    "RELAXFREE_M": ("m", int),
    "RELAXFREE_PROBLEM": ("problem", str),
    "RELAXFREE_LEVELS": ("levels", int),
    "RELAXFREE_OUTPUT_PATH": ("output_path", str),
    "RELAXFREE_RECORD_EVERY": ("record_every", int),
    "RELAXFREE_VERBOSE": ("verbose", _parse_bool),
}


def load_env_config() -> Dict[str, Any]:
    """Load configuration from ``RELAXFREE_*`` environment variables.

    Malformed values are logged and ignored.

    Returns:
        Dictionary of configuration values from environment.
    """
    config: Dict[str, Any] = {}

    for env_var, (config_key, converter) in ENV_MAPPING.items():
        value = os.environ.get(env_var)
        if value is not None:
            try:
                config[config_key] = converter(value)
                logger.debug(f"Loaded {config_key} from {env_var}")
            except (ValueError, TypeError) as e:
                logger.warning(f"Invalid value for {env_var}: {value} ({e})")

    return config


def merge_configs(*configs: Dict[str, Any]) -> Dict[str, Any]:
    """Merge configuration dictionaries; later ones win, None values are skipped."""
    result: Dict[str, Any] = {}
    for config in configs:
        for key, value in config.items():
            if value is not None:
                result[key] = value
    return result


def config_dict_to_config(config_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Convert a raw dictionary into ExperimentConfig keyword arguments.

    Args:
        config_dict: Merged configuration dictionary.

    Returns:
        Dictionary suitable for passing to ExperimentConfig().

    Raises:
        ValueError: On unknown keys.
    """
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(config_dict) - known)
    if unknown:
        raise ValueError(f"Unknown configuration keys: {unknown}")

    result = config_dict.copy()

    if "output_path" in result and isinstance(result["output_path"], str):
        result["output_path"] = Path(result["output_path"])

    if "k" in result:
        k = result["k"]
        result["k"] = parse_k(k) if isinstance(k, str) else tuple(float(v) for v in k)

    # integers are valid TOML for float fields
    for key in ("dt", "mu", "cfl", "t_end"):
        if key in result and isinstance(result[key], int) and not isinstance(result[key], bool):
            result[key] = float(result[key])

    return result
