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

import lzma
from abc import ABC, abstractmethod
from typing import Dict, Optional

from binfecund.constants import _DEFAULT_LZMA_PRESET

class Compressor(ABC):
    """Base class for the compressors behind the normalized compression distance."""

    @abstractmethod
    def compress(self, data: bytes) -> bytes:
        pass

    def compressed_size(self, data: bytes) -> int:
        return len(self.compress(data))

    @classmethod
    @abstractmethod
    def register(cls, compressors: Dict[str, "Compressor"]) -> None:
        pass


class LZMACompressor(Compressor):
    """Compressor for the xz container of the standard lzma module."""

    def __init__(self, preset: int) -> None:
        super().__init__()
        if not 0 <= preset <= 9:
            raise ValueError(f"The lzma preset should be between 0 and 9. Found {preset}.")
        self.preset = preset
        self.extension = "lzma"

    @property
    def name(self) -> str:
        return f"{self.extension}:{self.preset}"

    def compress(self, data: bytes) -> bytes:
        return lzma.compress(data, format=lzma.FORMAT_XZ, preset=self.preset)

    @classmethod
    def register(cls, compressors: Dict[str, "Compressor"]) -> None:
        # default
        compressors["lzma"] = LZMACompressor(_DEFAULT_LZMA_PRESET)

        for preset in range(10):
            compressors[f"lzma:{preset}"] = LZMACompressor(preset)


_COMPRESSORS: Dict[str, Compressor] = {}

LZMACompressor.register(_COMPRESSORS)


def get_compressor(name: Optional[str] = None) -> Compressor:
    name = name or "lzma"
    if name not in _COMPRESSORS:
        raise ValueError(f"The compressor {name} isn't supported. HINT: Use one of {sorted(_COMPRESSORS)}.")
    return _COMPRESSORS[name]


def ncd_from_sizes(size_x: int, size_y: int, size_xy: int) -> float:
    """Normalized compression distance from already computed compressed lengths, clamped to [0, 1]."""
    largest = max(size_x, size_y)
    if largest == 0:
        return 0.0
    value = (size_xy - min(size_x, size_y)) / largest
    return min(1.0, max(0.0, value))


def ncd(x: bytes, y: bytes, compressor: Optional[Compressor] = None) -> float:
    """Returns the normalized compression distance between ``x`` and ``y``.

    The pair is always compressed as ``x + y``. Two empty inputs are at distance 0.

    """
    if not x and not y:
        return 0.0
    compressor = compressor or get_compressor()
    return ncd_from_sizes(
        compressor.compressed_size(x),
        compressor.compressed_size(y),
        compressor.compressed_size(bytes(x) + bytes(y)),
    )
