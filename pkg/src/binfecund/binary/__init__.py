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
from binfecund.binary.compression import Compressor, LZMACompressor, get_compressor, ncd
from binfecund.binary.digest import BinaryDigest, digest
from binfecund.binary.elf import FunctionRecord, TextSection, extract_functions, extract_text
from binfecund.binary.fuzzy import FuzzyDigest, fuzzy_difference, fuzzy_digest

__all__ = [
    "BinaryDigest",
    "Compressor",
    "FunctionRecord",
    "FuzzyDigest",
    "LZMACompressor",
    "TextSection",
    "digest",
    "extract_functions",
    "extract_text",
    "fuzzy_difference",
    "fuzzy_digest",
    "get_compressor",
    "ncd",
]
