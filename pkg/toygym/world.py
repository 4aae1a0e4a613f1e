"""
Synthetic text scenes.

A scene is a grid of candidate word locations. Each cell holds one feature
row: a word cell encodes its position, a presence flag and a +-1 bit code per
character; an empty cell holds noise only. Cells c and c + num_queries form one
group, and a scene holds at most one word per group.

The "real" domain applies a fixed orthogonal map plus a small bias to every
feature row. The map swaps the two lowest code bits of every character (flips
the only bit of a one-bit code), so real words read as a substitution cipher
of their synthetic twins while position and presence stay put.
"""

import math
from enum import Enum
from functools import lru_cache
from typing import List, Sequence, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from domain import Alphabet, GroundTruthInstance, ObjectClass, Scene, Supervision, Transcription
from geometry import Box

Seed = Union[int, Sequence[int]]


class Domain(str, Enum):
    SYNTHETIC = "synthetic"
    REAL = "real"


class Split(int, Enum):
    TRAIN = 0
    TEST = 1


class WorldConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid_rows: int = Field(4, ge=1)
    grid_cols: int = Field(4, ge=1)
    min_words: int = Field(1, ge=0)
    max_words: int = Field(4, ge=0)
    min_word_len: int = Field(2, ge=1)
    max_word_len: int = Field(5, ge=1)
    symbols: str = "abcdefgh"
    # recognition steps emitted per query; room for the longest word plus EOS
    max_steps: int = Field(6, ge=2)
    feature_dim: int = Field(24, ge=1)
    noise: float = Field(0.05, ge=0.0)
    num_queries: int = Field(8, ge=1)
    shift_seed: int = 7
    shift_bias: float = Field(0.1, ge=0.0)
    box_height: float = Field(0.12, gt=0.0, le=1.0)
    train_scenes: int = Field(500, ge=1)
    test_scenes: int = Field(100, ge=1)

    @model_validator(mode="after")
    def check_consistency(self) -> "WorldConfig":
        if self.min_words > self.max_words:
            raise ValueError("min_words must not exceed max_words")
        if self.min_word_len > self.max_word_len:
            raise ValueError("min_word_len must not exceed max_word_len")
        if self.max_words > self.num_queries:
            raise ValueError(f"max_words={self.max_words} exceeds the query count num_queries={self.num_queries}")
        if self.max_words > self.num_cells:
            raise ValueError(f"max_words={self.max_words} exceeds the {self.num_cells} grid cells")
        if self.max_steps < self.max_word_len + 1:
            raise ValueError("max_steps must leave room for the longest word plus EOS")
        if len(set(self.symbols)) != len(self.symbols) or not self.symbols:
            raise ValueError("symbols must be a non-empty string of distinct characters")
        needed = 3 + self.code_bits * self.max_word_len
        if self.feature_dim < needed:
            raise ValueError(f"feature_dim={self.feature_dim} is too small, the word code needs {needed}")
        if self.word_width(self.max_word_len) > 1.0 / self.grid_cols:
            raise ValueError("the longest word does not fit in a grid cell")
        return self

    @property
    def num_cells(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def code_bits(self) -> int:
        return max(1, math.ceil(math.log2(len(self.symbols))))

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet.from_string(self.symbols)

    def word_width(self, length: int) -> float:
        return 0.04 * length + 0.03

    def cell_center(self, cell: int) -> Tuple[float, float]:
        row, col = divmod(cell, self.grid_cols)
        return (col + 0.5) / self.grid_cols, (row + 0.5) / self.grid_rows


@lru_cache(maxsize=16)
def _domain_shift(
    feature_dim: int, code_bits: int, max_word_len: int, shift_seed: int, shift_bias: float
) -> Tuple[np.ndarray, np.ndarray]:
    order = np.arange(feature_dim)
    signs = np.ones(feature_dim)
    for position in range(max_word_len):
        first = 3 + position * code_bits
        if code_bits >= 2:
            order[first], order[first + 1] = first + 1, first
        else:
            signs[first] = -1.0
    rotation = np.eye(feature_dim)[order] * signs[:, None]
    direction = np.random.default_rng(shift_seed).standard_normal(feature_dim)
    bias = shift_bias * direction / np.linalg.norm(direction)
    rotation.setflags(write=False)
    bias.setflags(write=False)
    return rotation, bias


def domain_shift(world: WorldConfig) -> Tuple[np.ndarray, np.ndarray]:
    """The (rotation, bias) pair mapping synthetic features f to real ones, f -> R f + bias."""
    return _domain_shift(world.feature_dim, world.code_bits, world.max_word_len, world.shift_seed, world.shift_bias)


def place_words(world: WorldConfig, rng: np.random.Generator, count: int) -> List[int]:
    """``count`` cells in ascending order, no two in the same query group (cell mod num_queries)."""
    cells: List[int] = []
    groups: Set[int] = set()
    for cell in rng.permutation(world.num_cells):
        if len(cells) == count:
            break
        group = int(cell) % world.num_queries
        if group not in groups:
            groups.add(group)
            cells.append(int(cell))
    return sorted(cells)


def encode_word(world: WorldConfig, cell: int, transcription: Transcription) -> np.ndarray:
    """Noise-free feature row of a word placed in ``cell``."""
    row = np.zeros(world.feature_dim)
    cx, cy = world.cell_center(cell)
    row[0], row[1], row[2] = 2.0 * cx - 1.0, 2.0 * cy - 1.0, 1.0
    bits = world.code_bits
    for position, index in enumerate(transcription.indices):
        for bit in range(bits):
            row[3 + position * bits + bit] = 1.0 if (index >> bit) & 1 else -1.0
    return row


def generate_scene(
    world: WorldConfig,
    seed: Seed,
    domain: Domain = Domain.SYNTHETIC,
    supervision: Supervision = Supervision.FULL,
    scene_id: str = "",
) -> Scene:
    """
    Draw one scene. The same seed gives the same words, boxes and noise in
    both domains; only the feature shift differs.

    Args:
        world: Generator settings
        seed: Seed (or seed sequence) of the scene
        domain: Synthetic features, or the shifted real ones
        supervision: Weak scenes keep the transcriptions and drop the boxes
        scene_id: Identifier; derived from the seed when empty

    Returns:
        Scene: Features of shape (num_cells, feature_dim) and the ground truth in cell order
    """
    rng = np.random.default_rng(seed)
    num_words = int(rng.integers(world.min_words, world.max_words + 1))
    cells = place_words(world, rng, num_words)

    features = np.zeros((world.num_cells, world.feature_dim))
    instances: List[GroundTruthInstance] = []
    for cell in cells:
        length = int(rng.integers(world.min_word_len, world.max_word_len + 1))
        transcription = Transcription(tuple(int(i) for i in rng.integers(0, len(world.symbols), size=length)))
        features[cell] = encode_word(world, cell, transcription)
        box = None
        if supervision == Supervision.FULL:
            cx, cy = world.cell_center(cell)
            box = Box.center_size(cx, cy, world.word_width(length), world.box_height)
        instances.append(GroundTruthInstance(ObjectClass.TEXT, box, transcription))

    features = features + world.noise * rng.standard_normal(features.shape)
    if domain == Domain.REAL:
        rotation, bias = domain_shift(world)
        features = features @ rotation.T + bias

    if not scene_id:
        parts = [seed] if isinstance(seed, int) else list(seed)
        scene_id = f"{domain.value}-" + "-".join(str(p) for p in parts)
    return Scene(scene_id=scene_id, features=features, ground_truth=tuple(instances), supervision=supervision)


def generate_dataset(
    world: WorldConfig,
    count: int,
    seed: int,
    domain: Domain = Domain.SYNTHETIC,
    supervision: Supervision = Supervision.FULL,
    split: Split = Split.TRAIN,
) -> List[Scene]:
    """``count`` scenes seeded by (seed, split, index); train and test splits never share a seed."""
    return [
        generate_scene(
            world,
            (seed, int(split), index),
            domain,
            supervision,
            scene_id=f"{domain.value}-{split.name.lower()}-{seed}-{index:05d}",
        )
        for index in range(count)
    ]
