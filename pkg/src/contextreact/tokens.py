"""Pluggable token estimators.

An estimator is any callable ``text -> int >= 0`` carrying a ``name``. The name
is written into every trajectory header so recorded counts stay interpretable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class Estimator:
    name: str
    fn: Callable[[str], int]

    def __call__(self, text: str) -> int:
        return self.fn(text)


def bytes_over_four(text: str) -> int:
    return math.ceil(len(text.encode("utf-8")) / 4)


def whitespace_words(text: str) -> int:
    return len(text.split())


DEFAULT_ESTIMATOR = Estimator("bytes/4", bytes_over_four)

ESTIMATORS: dict[str, Estimator] = {
    DEFAULT_ESTIMATOR.name: DEFAULT_ESTIMATOR,
    "whitespace": Estimator("whitespace", whitespace_words),
}


def get_estimator(name: str) -> Estimator:
    try:
        return ESTIMATORS[name]
    except KeyError:
        raise ValueError(f"unknown token estimator {name!r}; known: {sorted(ESTIMATORS)}") from None
