# Copyright The Lightning AI team.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Set

import numpy as np

from binfecund.binary.compression import Compressor, ncd_from_sizes
from binfecund.binary.digest import BinaryDigest
from binfecund.binary.fuzzy import fuzzy_difference
from binfecund.exceptions import BaselineError, StrategyError, UnknownStrategyError

logger = logging.getLogger(__name__)

_BINARY01 = "binary01"
_DEFAULT_BINARY01_BASE = "na"


@dataclass
class StoredBinary:
    """A binary of the history with its ``.text`` bytes and a lazily computed compressed length."""

    digest: BinaryDigest
    text: bytes = field(repr=False)
    _compressed_size: Optional[int] = field(default=None, repr=False)

    def compressed_size(self, compressor: Compressor) -> int:
        if self._compressed_size is None:
            self._compressed_size = compressor.compressed_size(self.text)
        return self._compressed_size


@dataclass
class ScoringContext:
    history: Sequence[StoredBinary]
    function_hashes: Set[int]
    baseline: Optional[StoredBinary]
    compressor: Compressor


Scorer = Callable[[StoredBinary, ScoringContext], float]

_SCORERS: Dict[str, Scorer] = {}


def register_scorer(name: str) -> Callable[[Scorer], Scorer]:
    def _register(fn: Scorer) -> Scorer:
        _SCORERS[name] = fn
        return fn

    return _register


def text_ncd(a: StoredBinary, b: StoredBinary, compressor: Compressor) -> float:
    if not a.text and not b.text:
        return 0.0
    return ncd_from_sizes(
        a.compressed_size(compressor), b.compressed_size(compressor), compressor.compressed_size(a.text + b.text)
    )


def _fuzzy_differences(candidate: StoredBinary, context: ScoringContext) -> np.ndarray:
    return np.array([fuzzy_difference(candidate.digest.fuzzy, h.digest.fuzzy) for h in context.history])


def _ncds(candidate: StoredBinary, context: ScoringContext) -> np.ndarray:
    return np.array([text_ncd(candidate, h, context.compressor) for h in context.history])


@register_scorer("pa")
def _piecewise_average(candidate: StoredBinary, context: ScoringContext) -> float:
    return float(np.mean(_fuzzy_differences(candidate, context)))


@register_scorer("pm")
def _piecewise_minimum(candidate: StoredBinary, context: ScoringContext) -> float:
    return float(np.min(_fuzzy_differences(candidate, context)))


@register_scorer("na")
def _ncd_average(candidate: StoredBinary, context: ScoringContext) -> float:
    return float(np.mean(_ncds(candidate, context)))


@register_scorer("nm")
def _ncd_minimum(candidate: StoredBinary, context: ScoringContext) -> float:
    return float(np.min(_ncds(candidate, context)))


@register_scorer("fh")
def _function_hashes(candidate: StoredBinary, context: ScoringContext) -> float:
    hashes = candidate.digest.function_hashes
    if not hashes:
        message = f"The binary {candidate.digest.content_hash[:12]} has no function symbol, its Fh score is 0."
        logger.warning(message)
        warnings.warn(message, UserWarning)
        return 0.0
    return sum(1 for h in hashes if h not in context.function_hashes) / len(hashes)


@register_scorer("no")
def _ncd_baseline(candidate: StoredBinary, context: ScoringContext) -> float:
    assert context.baseline is not None
    return text_ncd(candidate, context.baseline, context.compressor)


# Fh needs no shortcut: against an empty function set every hash is new
_PAIRWISE = ("pa", "pm", "na", "nm")


@dataclass(frozen=True)
class Strategy:
    """A fitness strategy, e.g. ``Strategy.parse("fh")`` or ``Strategy.parse("binary01:pm")``."""

    name: str
    base: Optional["Strategy"] = None

    def __post_init__(self) -> None:
        if self.name == _BINARY01:
            if self.base is None or self.base.name == _BINARY01:
                raise UnknownStrategyError(f"The binary01 strategy wraps one of {sorted(_SCORERS)}.")
        elif self.name not in _SCORERS:
            raise UnknownStrategyError(
                f"Unknown strategy {self.name!r}. HINT: Use one of {sorted(_SCORERS) + [_BINARY01]}."
            )
        elif self.base is not None:
            raise UnknownStrategyError(f"Only binary01 takes a base strategy, {self.name} doesn't.")

    @classmethod
    def parse(cls, value: str) -> "Strategy":
        value = value.strip().lower()
        name, _, base = value.partition(":")
        if name == _BINARY01:
            return cls(name, cls.parse(base or _DEFAULT_BINARY01_BASE))
        if base:
            raise UnknownStrategyError(f"Only binary01 takes a base strategy. Found {value!r}.")
        return cls(name)

    def __str__(self) -> str:
        return f"{self.name}:{self.base}" if self.base is not None else self.name

    @property
    def root(self) -> "Strategy":
        return self.base.root if self.base is not None else self

    @property
    def needs_baseline(self) -> bool:
        return self.root.name == "no"


def evaluate(strategy: Strategy, candidate: StoredBinary, context: ScoringContext) -> float:
    """Returns the difference score of a never seen binary under the strategy."""
    if strategy.base is not None:
        return 1.0 if evaluate(strategy.base, candidate, context) > 0 else 0.0

    if strategy.name == "fh" and not candidate.digest.has_symbols:
        raise StrategyError("Fh requires symbols")

    if strategy.name == "no":
        if context.baseline is None:
            raise BaselineError("baseline missing. HINT: Register the -O0 binary of the program first.")
    elif strategy.name in _PAIRWISE and not context.history:
        return 1.0

    return min(1.0, max(0.0, _SCORERS[strategy.name](candidate, context)))
