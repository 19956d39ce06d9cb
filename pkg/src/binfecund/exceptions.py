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

from typing import Optional


class BinfecundError(Exception):
    """Root of every error raised by binfecund."""


class ConfigurationError(BinfecundError, ValueError):
    """A campaign, profile or service setting cannot be used as given."""


class CatalogParseError(ConfigurationError):
    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class BaselineError(ConfigurationError):
    """The baseline binary of a program is missing or was registered twice."""


class ElfParseError(BinfecundError, ValueError):
    """The bytes are not an ELF file this package can read."""


class NoSymbolsError(ElfParseError):
    """The ELF file carries no symbol table."""


class StrategyError(BinfecundError):
    """A fitness strategy is unknown or cannot score the given binary."""


class BuildError(BinfecundError, RuntimeError):
    """Neither the requested nor the fallback build produced a binary."""


class UnknownStrategyError(StrategyError, ValueError):
    """The strategy name isn't registered."""


class StrategyMismatchError(StrategyError):
    """A program is pinned to another strategy than the requested one."""
