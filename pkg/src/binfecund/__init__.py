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
from binfecund.__about__ import *  # noqa: F403
from binfecund.binary.digest import BinaryDigest, digest
from binfecund.build.driver import BuildDriver, BuildOutcome, BuildStatus, CompilerProfile
from binfecund.campaign.config import CampaignConfig, load_config
from binfecund.campaign.engine import CampaignStats, run_campaign
from binfecund.campaign.parallel import run_parallel
from binfecund.fitness.store import ProgramStore, ScoreResult
from binfecund.fitness.strategies import Strategy
from binfecund.flags.catalog import FlagCatalog, load_catalog, parse_catalog
from binfecund.flags.mapping import FlagSelection, map_seed

__all__ = [
    "BinaryDigest",
    "BuildDriver",
    "BuildOutcome",
    "BuildStatus",
    "CampaignConfig",
    "CampaignStats",
    "CompilerProfile",
    "FlagCatalog",
    "FlagSelection",
    "ProgramStore",
    "ScoreResult",
    "Strategy",
    "digest",
    "load_catalog",
    "load_config",
    "map_seed",
    "parse_catalog",
    "run_campaign",
    "run_parallel",
]
