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

import bisect
import json
import math
import os
import threading
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from binfecund.exceptions import ConfigurationError
from binfecund.flags.mapping import Seed


@dataclass(frozen=True)
class CorpusEntry:
    id: int
    seed: Seed
    weight: float

    def __post_init__(self) -> None:
        if not self.weight > 0:
            raise ValueError(f"A corpus entry needs a positive weight. Found {self.weight}.")


class WeightedCorpus:
    """The interesting seeds, sampled with a probability proportional to the score that admitted them."""

    def __init__(self) -> None:
        self._entries: List[CorpusEntry] = []
        self._cumulative: List[float] = []
        self._next_id = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[CorpusEntry]:
        return iter(list(self._entries))

    @property
    def entries(self) -> List[CorpusEntry]:
        return list(self._entries)

    @property
    def total_weight(self) -> float:
        return self._cumulative[-1] if self._cumulative else 0.0

    def select(self, rng: np.random.Generator) -> CorpusEntry:
        """Returns an entry with probability ``weight / total_weight``.

        Raises:
            IndexError: The corpus is empty.

        """
        with self._lock:
            if not self._entries:
                raise IndexError("Can't select from an empty corpus.")
            target = rng.random() * self._cumulative[-1]
            index = min(bisect.bisect_right(self._cumulative, target), len(self._entries) - 1)
            return self._entries[index]

    def collect(self, seed: Seed, dscore: float) -> Optional[CorpusEntry]:
        """Admit the seed with ``dscore`` as its weight. Zero scores are discarded."""
        if not 0.0 <= dscore <= 1.0:
            raise ValueError(f"A difference score lies in [0, 1]. Found {dscore}.")
        if dscore == 0.0:
            return None
        with self._lock:
            entry = CorpusEntry(self._next_id, bytes(seed), float(dscore))
            self._append(entry)
            return entry

    def add(self, entry: CorpusEntry) -> None:
        """Append an entry admitted elsewhere, keeping its id."""
        with self._lock:
            self._append(entry)

    def _append(self, entry: CorpusEntry) -> None:
        self._entries.append(entry)
        self._cumulative.append(self.total_weight + entry.weight)
        self._next_id = max(self._next_id, entry.id + 1)

    def save(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            for entry in self.entries:
                f.write(json.dumps({"id": entry.id, "seed": entry.seed.hex(), "weight": entry.weight}) + "\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "WeightedCorpus":
        corpus = cls()
        expected = 0.0
        with open(path, encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    entry = CorpusEntry(int(record["id"]), bytes.fromhex(record["seed"]), float(record["weight"]))
                except (KeyError, ValueError) as e:
                    raise ConfigurationError(
                        f"The corpus checkpoint {path} is corrupted on line {line_number}: {e}"
                    ) from None
                corpus.add(entry)
                expected += entry.weight

        if not math.isclose(corpus.total_weight, expected, rel_tol=1e-9, abs_tol=1e-12):
            raise ConfigurationError(
                f"The corpus checkpoint {path} is inconsistent: {corpus.total_weight} != {expected}."
            )
        return corpus


def select(corpus: WeightedCorpus, rng: np.random.Generator) -> CorpusEntry:
    return corpus.select(rng)


def collect(corpus: WeightedCorpus, seed: Seed, dscore: float) -> WeightedCorpus:
    corpus.collect(seed, dscore)
    return corpus
