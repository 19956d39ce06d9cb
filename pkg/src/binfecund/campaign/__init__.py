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

from binfecund.campaign.config import CampaignConfig, load_config
from binfecund.campaign.corpus import CorpusEntry, WeightedCorpus, collect, select
from binfecund.campaign.engine import CampaignStats, IterationRecord, run_campaign
from binfecund.campaign.mutator import mutate
from binfecund.campaign.parallel import run_parallel

__all__ = [
    "CampaignConfig",
    "CampaignStats",
    "CorpusEntry",
    "IterationRecord",
    "WeightedCorpus",
    "collect",
    "load_config",
    "mutate",
    "run_campaign",
    "run_parallel",
    "select",
]
