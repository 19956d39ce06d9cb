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
import io
import logging
from dataclasses import dataclass, field
from typing import Any, List

from elftools.common.exceptions import ELFError
from elftools.construct.core import ConstructError
from elftools.elf.elffile import ELFFile
from elftools.elf.sections import SymbolTableSection

from binfecund.constants import _FUNCTION_HASH_BYTES
from binfecund.exceptions import ElfParseError, NoSymbolsError

logger = logging.getLogger(__name__)

_ELF_MAGIC = b"\x7fELF"
_SHT_NOBITS = "SHT_NOBITS"


@dataclass(frozen=True)
class TextSection:
    data: bytes = field(repr=False)
    vaddr: int
    size: int

    def __post_init__(self) -> None:
        if self.size != len(self.data):
            raise ValueError(f"The .text size {self.size} doesn't match its {len(self.data)} bytes.")


@dataclass(frozen=True)
class FunctionRecord:
    """A function symbol of ``.text``. ``offset`` is the symbol value, in the address space of ``TextSection.vaddr``."""

    name: str
    offset: int
    size: int
    hash: int


def function_hash(code: bytes) -> int:
    """Stable 64 bit digest of a function's code bytes."""
    return int.from_bytes(hashlib.blake2b(code, digest_size=_FUNCTION_HASH_BYTES).digest(), "little")


def _open(elf: bytes) -> ELFFile:
    if len(elf) < len(_ELF_MAGIC) or elf[: len(_ELF_MAGIC)] != _ELF_MAGIC:
        raise ElfParseError("bad ELF magic")
    try:
        return ELFFile(io.BytesIO(elf))
    except (ELFError, ConstructError) as e:
        raise ElfParseError(f"truncated or malformed ELF header: {e}") from None


def _text_section(elffile: ELFFile) -> Any:
    try:
        section = elffile.get_section_by_name(".text")
    except (ELFError, ConstructError) as e:
        raise ElfParseError(f"truncated or malformed section header table: {e}") from None
    if section is None:
        raise ElfParseError("missing .text section")
    return section


def _section_bytes(section: Any) -> bytes:
    if section["sh_type"] == _SHT_NOBITS:
        return b""
    try:
        data = section.data()
    except (ELFError, ConstructError) as e:
        raise ElfParseError(f"unreadable .text section: {e}") from None
    if len(data) != section["sh_size"]:
        raise ElfParseError(f"truncated .text section: expected {section['sh_size']} bytes, found {len(data)}")
    return data


def extract_text(elf: bytes) -> TextSection:
    """Returns the exact bytes of the ``.text`` section."""
    section = _text_section(_open(elf))
    data = _section_bytes(section)
    return TextSection(data=data, vaddr=section["sh_addr"], size=len(data))


def extract_functions(elf: bytes) -> List[FunctionRecord]:
    """Returns one record per sized function symbol that lies inside ``.text``, sorted by offset.

    Raises:
        NoSymbolsError: The binary was stripped.

    """
    elffile = _open(elf)
    text = _text_section(elffile)
    code = _section_bytes(text)
    return _functions(elffile, text, code)


def _functions(elffile: ELFFile, text: Any, code: bytes) -> List[FunctionRecord]:
    try:
        symtabs = [
            s for s in elffile.iter_sections() if isinstance(s, SymbolTableSection) and s["sh_type"] == "SHT_SYMTAB"
        ]
    except (ELFError, ConstructError) as e:
        raise ElfParseError(f"truncated or malformed section header table: {e}") from None

    if not symtabs or symtabs[0]["sh_entsize"] == 0:
        raise NoSymbolsError("no symbols: the binary has no symbol table. HINT: Don't strip the campaign outputs.")

    # relocatable objects hold section relative symbol values
    relocatable = elffile["e_type"] == "ET_REL"
    base = 0 if relocatable else text["sh_addr"]
    text_index = elffile.get_section_index(".text")

    records = []
    try:
        for symbol in symtabs[0].iter_symbols():
            if symbol["st_info"]["type"] != "STT_FUNC" or symbol["st_size"] == 0:
                continue
            if relocatable and symbol["st_shndx"] != text_index:
                continue
            start = symbol["st_value"] - base
            end = start + symbol["st_size"]
            if start < 0 or end > len(code):
                logger.debug(f"Skipping {symbol.name}: outside of .text.")
                continue
            records.append(
                FunctionRecord(symbol.name, symbol["st_value"], symbol["st_size"], function_hash(code[start:end]))
            )
    except (ELFError, ConstructError) as e:
        raise ElfParseError(f"malformed symbol table: {e}") from None

    return sorted(records, key=lambda record: (record.offset, record.name))
