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

import hashlib
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from binfecund.binary.elf import FunctionRecord, TextSection, _functions, _open, _section_bytes, _text_section
from binfecund.binary.fuzzy import FuzzyDigest, fuzzy_digest
from binfecund.exceptions import NoSymbolsError


@dataclass(frozen=True)
class BinaryDigest:
    """Everything the fitness strategies need to know about one produced binary.

    ``functions`` is ``None`` when the binary carries no symbol table. ``raw`` keeps the file bytes for archiving
    and ``text`` the parsed ``.text`` section.

    """

    content_hash: str
    text_hash: str
    fuzzy: FuzzyDigest
    functions: Optional[Tuple[FunctionRecord, ...]]
    raw: bytes = field(default=b"", repr=False, compare=False)
    text: Optional[TextSection] = field(default=None, repr=False, compare=False)

    @property
    def has_symbols(self) -> bool:
        return self.functions is not None

    @property
    def function_hashes(self) -> List[int]:
        return [record.hash for record in self.functions or ()]


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def text_hash(text: bytes) -> str:
    return hashlib.sha256(text).hexdigest()


def digest(elf: bytes) -> BinaryDigest:
    """Digest an ELF file. The parsed ``.text`` section rides along as ``BinaryDigest.text``.

    Example:
        >>> digest(b"not an elf")
        Traceback (most recent call last):
        ...
        binfecund.exceptions.ElfParseError: bad ELF magic

    """
    elf = bytes(elf)
    elffile = _open(elf)
    section = _text_section(elffile)
    code = _section_bytes(section)
    text = TextSection(data=code, vaddr=section["sh_addr"], size=len(code))

    functions: Optional[Tuple[FunctionRecord, ...]]
    try:
        functions = tuple(_functions(elffile, section, code))
    except NoSymbolsError:
        functions = None

    return BinaryDigest(
        content_hash=content_hash(elf),
        text_hash=text_hash(code),
        fuzzy=fuzzy_digest(code),
        functions=functions,
        raw=elf,
        text=text,
    )
