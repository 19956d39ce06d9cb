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
from binfecund.flags.catalog import (
    EnumKind,
    FlagCatalog,
    FlagKind,
    FlagSpec,
    SwitchKind,
    UintKind,
    load_catalog,
    parse_catalog,
    render_flag,
    serialize_catalog,
    total_seed_width,
)
from binfecund.flags.mapping import FlagSelection, Seed, map_seed, random_seed

__all__ = [
    "EnumKind",
    "FlagCatalog",
    "FlagKind",
    "FlagSelection",
    "FlagSpec",
    "Seed",
    "SwitchKind",
    "UintKind",
    "load_catalog",
    "map_seed",
    "parse_catalog",
    "random_seed",
    "render_flag",
    "serialize_catalog",
    "total_seed_width",
]
