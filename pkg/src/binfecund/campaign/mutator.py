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

from typing import List, Optional

import numpy as np

from binfecund.flags.mapping import Seed, random_seed

BIT_FLIP = "bit_flip"
BYTE_FLIP = "byte_flip"
SPLICE = "splice"

_MAX_FLIPPED_BITS = 8
_MAX_FLIPPED_BYTES = 4


def bit_flip(seed: Seed, rng: np.random.Generator) -> Seed:
    """Flip between 1 and 8 distinct bits."""
    data = bytearray(seed)
    count = min(int(rng.integers(1, _MAX_FLIPPED_BITS + 1)), len(data) * 8)
    for position in rng.choice(len(data) * 8, size=count, replace=False):
        data[position // 8] ^= 1 << (position % 8)
    return bytes(data)


def byte_flip(seed: Seed, rng: np.random.Generator) -> Seed:
    """Overwrite between 1 and 4 distinct bytes with random values."""
    data = bytearray(seed)
    count = min(int(rng.integers(1, _MAX_FLIPPED_BYTES + 1)), len(data))
    positions = rng.choice(len(data), size=count, replace=False)
    values = rng.integers(0, 256, size=count)
    for position, value in zip(positions, values):
        data[position] = int(value)
    return bytes(data)


def splice(primary: Seed, donor: Seed, width: int, rng: np.random.Generator) -> Seed:
    """Single point crossover: the head of ``primary`` followed by the tail of ``donor``."""
    cut = int(rng.integers(0, width + 1))
    return bytes(primary[:cut]) + bytes(donor[cut:])


def _fit(seed: Seed, width: int, rng: np.random.Generator) -> Seed:
    if len(seed) >= width:
        return bytes(seed[:width])
    return bytes(seed) + random_seed(width - len(seed), rng)


def mutate(primary: Seed, donor: Optional[Seed], rng: np.random.Generator, width: Optional[int] = None) -> Seed:
    """Apply one mutation operator, chosen uniformly among the applicable ones, and fit the result to ``width``.

    Flips need a non-empty ``primary`` and splicing needs a ``donor``. ``width`` defaults to ``len(primary)``.

    """
    width = len(primary) if width is None else width
    operators: List[str] = []
    if len(primary) > 0:
        operators += [BIT_FLIP, BYTE_FLIP]
    if donor is not None:
        operators.append(SPLICE)
    if not operators:
        return random_seed(width, rng)

    operator = operators[int(rng.integers(0, len(operators)))]
    if operator == BIT_FLIP:
        child = bit_flip(primary, rng)
    elif operator == BYTE_FLIP:
        child = byte_flip(primary, rng)
    else:
        child = splice(primary, donor, width, rng)  # type: ignore[arg-type]
    return _fit(child, width, rng)
