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

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from binfecund.exceptions import CatalogParseError

_SWITCH = "switch"
_UINT = "uint"
_ENUM_PREFIX = "enum:"


@dataclass(frozen=True)
class SwitchKind:
    """A flag that is either present or absent, e.g. ``--addrsig``."""

    width: int = field(default=1, init=False)

    def __str__(self) -> str:
        return _SWITCH


@dataclass(frozen=True)
class EnumKind:
    """A flag taking one value out of an ordered list, e.g. ``--frame-pointer=all``."""

    values: Tuple[str, ...]
    width: int = field(default=1, init=False)

    def __post_init__(self) -> None:
        if len(self.values) < 2:
            raise ValueError(f"An enum flag needs at least 2 values. Found {list(self.values)}.")
        if any(not value for value in self.values):
            raise ValueError(f"Enum values can't be empty. Found {list(self.values)}.")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"Enum values must be unique. Found {list(self.values)}.")

    def __str__(self) -> str:
        return _ENUM_PREFIX + ",".join(self.values)


@dataclass(frozen=True)
class UintKind:
    """A flag with an 8 bit unsigned value, e.g. ``--stack-alignment=16``."""

    width: int = field(default=2, init=False)

    def __str__(self) -> str:
        return _UINT


FlagKind = Union[SwitchKind, EnumKind, UintKind]

# Selected state of one flag: ``None`` when off, ``True`` for a switch,
# the chosen value for an enum and the integer value for a uint.
FlagState = Optional[Union[bool, str, int]]


@dataclass(frozen=True)
class FlagSpec:
    name: str
    kind: FlagKind

    def __post_init__(self) -> None:
        if not self.name or any(char.isspace() for char in self.name):
            raise ValueError(f"A flag name must be non-empty and contain no whitespace. Found {self.name!r}.")


@dataclass(frozen=True)
class FlagCatalog:
    """The ordered flag universe of a compiler and the seed bytes each flag reads.

    Arguments:
        flags: The flags in file order. ``byte_layout`` is derived from it.

    """

    flags: Tuple[FlagSpec, ...] = ()
    byte_layout: Tuple[Tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        layout = []
        offset = 0
        for spec in self.flags:
            layout.append((offset, spec.kind.width))
            offset += spec.kind.width
        object.__setattr__(self, "flags", tuple(self.flags))
        object.__setattr__(self, "byte_layout", tuple(layout))

        names: Dict[str, int] = {}
        for index, spec in enumerate(self.flags):
            if spec.name in names:
                raise ValueError(f"The flag {spec.name} is declared twice (positions {names[spec.name]} and {index}).")
            names[spec.name] = index

    def __len__(self) -> int:
        return len(self.flags)

    @property
    def total_width(self) -> int:
        return total_seed_width(self)

    def index_of(self, name: str) -> int:
        for index, spec in enumerate(self.flags):
            if spec.name == name:
                return index
        raise KeyError(f"The flag {name} isn't part of this catalog.")


def total_seed_width(catalog: FlagCatalog) -> int:
    """Returns the number of seed bytes the catalog reads."""
    return sum(width for _, width in catalog.byte_layout)


def render_flag(spec: FlagSpec, state: FlagState) -> List[str]:
    """Returns the command tokens of one flag for the given selected state."""
    if state is None or state is False:
        return []

    kind = spec.kind
    if isinstance(kind, SwitchKind):
        return [spec.name]

    if isinstance(kind, EnumKind):
        if not isinstance(state, str) or state not in kind.values:
            raise ValueError(f"The value {state!r} isn't one of {list(kind.values)} for the flag {spec.name}.")
        return [f"{spec.name}={state}"]

    if isinstance(state, bool) or not isinstance(state, int) or not 0 <= state <= 255:
        raise ValueError(f"The flag {spec.name} expects a value between 0 and 255. Found {state!r}.")
    return [f"{spec.name}={state}"]


def _parse_kind(raw: str, line_number: int) -> FlagKind:
    if raw == _SWITCH:
        return SwitchKind()
    if raw == _UINT:
        return UintKind()
    if raw.startswith(_ENUM_PREFIX):
        try:
            return EnumKind(tuple(raw[len(_ENUM_PREFIX) :].split(",")))
        except ValueError as e:
            raise CatalogParseError(str(e), line_number) from None
    raise CatalogParseError(
        f"Unknown flag kind {raw!r}. HINT: Use `switch`, `uint` or `enum:<v1>,<v2>[,...]`.", line_number
    )


def parse_catalog(text: str) -> FlagCatalog:
    """Parse the contents of a catalog file.

    Each non-comment line holds a flag name and its kind separated by a single TAB.

    Example:
        >>> catalog = parse_catalog("--addrsig\\tswitch\\n--stack-alignment\\tuint\\n")
        >>> catalog.byte_layout
        ((0, 1), (1, 2))

    """
    flags: List[FlagSpec] = []
    seen: Dict[str, int] = {}

    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue

        fields = line.split("\t")
        if len(fields) != 2:
            raise CatalogParseError(
                f"Expected `<flag-name>\\t<kind>`, found {line!r}. HINT: Separate the fields with a single TAB.",
                line_number,
            )

        name, raw_kind = fields[0], fields[1].strip()
        if not raw_kind:
            raise CatalogParseError(f"The flag {name!r} is missing its kind.", line_number)

        kind = _parse_kind(raw_kind, line_number)

        if name in seen:
            raise CatalogParseError(f"The flag {name} was already declared on line {seen[name]}.", line_number)

        try:
            flags.append(FlagSpec(name, kind))
        except ValueError as e:
            raise CatalogParseError(str(e), line_number) from None
        seen[name] = line_number

    return FlagCatalog(tuple(flags))


def serialize_catalog(catalog: FlagCatalog) -> str:
    return "".join(f"{spec.name}\t{spec.kind}\n" for spec in catalog.flags)


def load_catalog(path: str) -> FlagCatalog:
    if not os.path.isfile(path):
        raise CatalogParseError(f"The catalog file {path} doesn't exist.")
    with open(path, encoding="utf-8") as f:
        return parse_catalog(f.read())
