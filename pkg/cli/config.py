from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import ValidationError as PydanticValidationError

from toygym import ExperimentConfig
from utils.errors import ValidationError

PathLike = Union[str, Path]


def describe_validation_error(error: PydanticValidationError) -> str:
    """'world.noise: Input should be greater than or equal to 0' style, one entry per failure."""
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "config"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def _validated(payload: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except PydanticValidationError as e:
        raise ValidationError(describe_validation_error(e)) from e


def load_experiment_config(path: Optional[PathLike] = None) -> ExperimentConfig:
    """
    Read an experiment config from YAML; defaults when ``path`` is None.

    Raises:
        ValidationError: The file does not describe a valid config
        OSError: The file cannot be read
    """
    if path is None:
        return ExperimentConfig()
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = yaml.safe_load(handle) or {}
        except yaml.YAMLError as e:
            raise ValidationError(f"{path}: not valid YAML ({e})") from e
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: the top level must be a mapping")
    return _validated(payload)


def apply_overrides(config: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Re-validate ``config`` with dotted-key overrides such as ``{"train.epochs": 3}``;
    ``None`` values are skipped.
    """
    payload = config.model_dump(mode="json")
    for dotted, value in overrides.items():
        if value is None:
            continue
        section = payload
        *parents, leaf = dotted.split(".")
        for key in parents:
            section = section.setdefault(key, {})
        section[leaf] = value.value if hasattr(value, "value") else value
    return _validated(payload)


def dump_experiment_config(config: ExperimentConfig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(config.model_dump(mode="json"), handle, sort_keys=False)
    return path
