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
"""Context-triggered piecewise hashing through the ssdeep-compatible ``ppdeep`` package."""

from dataclasses import dataclass

import ppdeep

from binfecund.constants import _FUZZY_MIN_BLOCK


@dataclass(frozen=True)
class FuzzyDigest:
    block_size: int
    sig1: str
    sig2: str

    def __str__(self) -> str:
        return f"{self.block_size}:{self.sig1}:{self.sig2}"

    @classmethod
    def from_string(cls, value: str) -> "FuzzyDigest":
        block_size, sig1, sig2 = value.split(":", 2)
        return cls(int(block_size), sig1, sig2)


def fuzzy_digest(data: bytes) -> FuzzyDigest:
    """Compute the ``block_size:sig1:sig2`` digest of ``data``."""
    if not data:
        return FuzzyDigest(_FUZZY_MIN_BLOCK, "", "")
    return FuzzyDigest.from_string(ppdeep.hash(bytes(data)))


def fuzzy_similarity(a: FuzzyDigest, b: FuzzyDigest) -> int:
    """Returns the ssdeep match score between 0 (unrelated) and 100 (identical)."""
    if a == b:
        return 100
    # fixed argument order keeps the score symmetric
    first, second = sorted((str(a), str(b)))
    return min(100, max(0, int(ppdeep.compare(first, second))))


def fuzzy_difference(a: FuzzyDigest, b: FuzzyDigest) -> float:
    """Returns ``1 - similarity / 100``, so 0.0 for identical digests and 1.0 for unrelated ones."""
    return 1.0 - fuzzy_similarity(a, b) / 100.0
