"""
Plain-text weight dumps: a header line with the model config, then one
JSON line per parameter ``{"name", "shape", "values"}`` in canonical order.
"""

import json
from pathlib import Path
from typing import List, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict
from pydantic import ValidationError as PydanticValidationError

from toygym.model import ModelConfig, ToyModel
from utils.errors import ArgumentError, ParseError

PathLike = Union[str, Path]


class CheckpointHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ModelConfig


class ParameterRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    shape: List[int]
    values: List[float]


def save_model(model: ToyModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(CheckpointHeader(config=model.config).model_dump_json() + "\n")
        for name, value in model.params.items():
            record = {"name": name, "shape": list(value.shape), "values": value.ravel().tolist()}
            handle.write(json.dumps(record) + "\n")
    logger.debug(f"Saved {len(model.params)} parameters to {path}")
    return path


def load_model(path: PathLike) -> ToyModel:
    """
    Raises:
        ParseError: A line is not valid JSON or does not match the checkpoint schema
        ArgumentError: The parameters do not fit the stored config
    """
    header = None
    params = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                if header is None:
                    header = CheckpointHeader.model_validate(payload)
                    continue
                record = ParameterRecord.model_validate(payload)
            except json.JSONDecodeError as e:
                raise ParseError(f"malformed JSON: {e.msg}", line_no) from e
            except PydanticValidationError as e:
                raise ParseError(str(e.errors()[0]["msg"]), line_no) from e
            if int(np.prod(record.shape)) != len(record.values):
                raise ParseError(f"{record.name}: {len(record.values)} values for shape {record.shape}", line_no)
            params[record.name] = np.asarray(record.values, dtype=np.float64).reshape(record.shape)
    if header is None:
        raise ArgumentError(f"Checkpoint {path} is empty")
    return ToyModel(header.config, params)
