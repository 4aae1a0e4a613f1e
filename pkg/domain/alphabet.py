import string
from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np

from utils.errors import ArgumentError, ValidationError

DEFAULT_SYMBOLS = string.ascii_lowercase + string.digits
DEFAULT_MAX_WORD_LEN = 16


@dataclass(frozen=True)
class Transcription:
    """A word as alphabet indices. The terminating EOS is implied, never stored."""

    indices: Tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) < 1:
            raise ValidationError("Transcription must hold at least one character")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Alphabet:
    """
    Ordered character set. Symbol i has index i; EOS and PAD take the two
    indices after the last symbol, so the recognition head emits ``size``
    logits per step.
    """

    symbols: Tuple[str, ...]
    _lookup: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.symbols) == 0:
            raise ValidationError("Alphabet needs at least one symbol")
        if any(len(s) != 1 for s in self.symbols):
            raise ValidationError("Alphabet symbols must be single characters")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValidationError(f"Alphabet symbols must be unique: {''.join(self.symbols)!r}")
        object.__setattr__(self, "_lookup", {s: i for i, s in enumerate(self.symbols)})

    @classmethod
    def from_string(cls, symbols: str) -> "Alphabet":
        return cls(tuple(symbols.casefold()))

    @classmethod
    def default(cls) -> "Alphabet":
        return cls.from_string(DEFAULT_SYMBOLS)

    @property
    def eos(self) -> int:
        return eos_index(self.size)

    @property
    def pad(self) -> int:
        return len(self.symbols) + 1

    @property
    def size(self) -> int:
        return len(self.symbols) + 2

    def encode(self, text: str, max_word_len: int = DEFAULT_MAX_WORD_LEN) -> Transcription:
        """Case-fold ``text`` and map it to a Transcription, naming the first unknown character."""
        folded = text.casefold()
        if not folded:
            raise ValidationError("Transcription must hold at least one character")
        if len(folded) > max_word_len:
            raise ValidationError(f"Word {text!r} is longer than max_word_len={max_word_len}")
        indices = []
        for ch in folded:
            if ch not in self._lookup:
                raise ValidationError(f"Character {ch!r} in {text!r} is not in the alphabet")
            indices.append(self._lookup[ch])
        return Transcription(tuple(indices))

    def decode(self, indices: Iterable[int]) -> str:
        """Map indices back to text, stopping at the first EOS or PAD."""
        chars = []
        for index in indices:
            if index >= self.eos:
                break
            if index < 0:
                raise ArgumentError(f"Negative alphabet index {index}")
            chars.append(self.symbols[index])
        return "".join(chars)


def eos_index(size: int) -> int:
    """EOS index of a ``size``-wide logit row: the first reserved index after the symbols."""
    return size - 2


def word_targets(transcription: Transcription, size: int) -> np.ndarray:
    """Per-step target indices: the word's characters followed by EOS."""
    return np.asarray(transcription.indices + (eos_index(size),), dtype=np.int64)


def check_logit_width(char_logits: np.ndarray, alphabet: Alphabet) -> None:
    """
    Raises:
        ValidationError: The logit rows do not hold exactly one entry per alphabet index
    """
    width = np.shape(char_logits)[-1]
    if width != alphabet.size:
        raise ValidationError(
            f"char_logits have {width} columns, the alphabet needs {alphabet.size} "
            f"({len(alphabet.symbols)} symbols plus EOS and PAD)"
        )


def greedy_decode(char_logits: np.ndarray, alphabet: Alphabet) -> str:
    """Argmax per step, truncated at the first EOS (or PAD)."""
    return alphabet.decode(int(i) for i in np.argmax(char_logits, axis=-1))
