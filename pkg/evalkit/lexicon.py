import math
from pathlib import Path
from typing import List, Sequence, Union

import editdistance

from utils.errors import ArgumentError


def lexicon_correct(word: str, lexicon: Sequence[str]) -> str:
    """
    Replace ``word`` by its nearest lexicon entry (Levenshtein, case-folded).

    Ties go to the earlier lexicon entry. When even the nearest entry is more
    than ceil(len(word) / 2) edits away the word is returned unchanged.

    Raises:
        ArgumentError: The lexicon is empty
    """
    if not lexicon:
        raise ArgumentError("Lexicon correction needs a non-empty lexicon")
    folded = word.casefold()
    best, best_distance = lexicon[0], None
    for entry in lexicon:
        distance = editdistance.eval(folded, entry.casefold())
        if best_distance is None or distance < best_distance:
            best, best_distance = entry, distance
    if best_distance is not None and best_distance > math.ceil(len(folded) / 2):
        return word
    return best


def load_lexicon(path: Union[str, Path]) -> List[str]:
    """One word per line; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as handle:
        return [line.strip() for line in handle if line.strip()]
