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

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from binfecund.flags.catalog import EnumKind, FlagCatalog, FlagState, SwitchKind, render_flag

Seed = bytes


@dataclass(frozen=True)
class FlagSelection:
    """The flags a seed turns on, aligned with the catalog order."""

    entries: Tuple[FlagState, ...]
    rendered: Tuple[str, ...]

    def selected(self, index: int) -> bool:
        return self.entries[index] is not None

    def active_indices(self) -> List[int]:
        return [index for index, state in enumerate(self.entries) if state is not None]

    @classmethod
    def empty(cls, catalog: FlagCatalog) -> "FlagSelection":
        return cls(entries=(None,) * len(catalog), rendered=())


def map_seed(catalog: FlagCatalog, seed: Seed) -> FlagSelection:
    """Translate the seed bytes into a flag selection.

    A switch reads one byte and is on when the byte is odd. An enum with ``k`` values reads one byte ``b``:
    ``b % (k + 1) == 0`` turns it off, otherwise the value at ``b % (k + 1) - 1`` is used. A uint reads two bytes,
    the first enables it when odd and the second is its value. Bytes past the layout are ignored and flags whose
    bytes are missing stay off.

    Example:
        >>> from binfecund.flags.catalog import parse_catalog
        >>> map_seed(parse_catalog("--frame-pointer\\tenum:all,non-leaf,none"), bytes([5])).rendered
        ('--frame-pointer=all',)

    """
    seed = bytes(seed)
    entries: List[FlagState] = []
    rendered: List[str] = []

    for spec, (offset, width) in zip(catalog.flags, catalog.byte_layout):
        state: FlagState = None
        if offset + width <= len(seed):
            byte = seed[offset]
            if isinstance(spec.kind, SwitchKind):
                state = True if byte % 2 == 1 else None
            elif isinstance(spec.kind, EnumKind):
                choice = byte % (len(spec.kind.values) + 1)
                state = spec.kind.values[choice - 1] if choice else None
            elif byte % 2 == 1:
                state = seed[offset + 1]
        entries.append(state)
        rendered.extend(render_flag(spec, state))

    return FlagSelection(entries=tuple(entries), rendered=tuple(rendered))


def random_seed(width: int, rng: np.random.Generator) -> Seed:
    """Returns ``width`` uniformly random bytes."""
    return rng.integers(0, 256, size=width, dtype=np.uint8).tobytes()
