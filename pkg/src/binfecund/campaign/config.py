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
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Optional

from binfecund.build.driver import CompilerProfile
from binfecund.constants import (
    _DEFAULT_CHECKPOINT_INTERVAL,
    _DEFAULT_PROGRESS_INTERVAL,
    _DEFAULT_STRATEGY,
)
from binfecund.exceptions import ConfigurationError, StrategyError
from binfecund.fitness.store import validate_program_id
from binfecund.fitness.strategies import Strategy
from binfecund.utilities.config import load_document, resolve_path

_SEARCH_MODES = ("guided", "random")
_PATH_KEYS = ("catalog", "source", "archive_root")


@dataclass
class CampaignConfig:
    """Settings of one campaign.

    Arguments:
        program_id: Label of the program, also its archive directory name.
        catalog: Path of the flag catalog file.
        source: Path of the source unit, or of the toy program definition for the ``toy`` backend.
        profile: The compiler profile.
        strategy: Fitness strategy, e.g. ``fh`` or ``binary01:pm``.
        max_iterations: Iteration budget.
        max_seconds: Wall-clock budget.
        rng_seed: 64 bit seed of every random choice of the campaign.
        workers: Number of worker processes. More than one runs the parallel mode.
        archive_root: Directory receiving the program archive and the checkpoints.
        checkpoint_interval: Iterations between two checkpoints.
        progress_interval: Iterations between two progress reports.
        search: ``guided`` uses the weighted corpus, ``random`` draws a fresh seed at every iteration.
        score_url: Score through a remote score service instead of the in-process store.
        max_history: Optional reservoir cap of the scoring history.
        compressor: Registered compressor used by the NCD strategies, e.g. ``lzma:6``.
        register_baseline: Build and register the baseline before iteration 1. Defaults to whether the strategy
            needs it.
        resume: Continue from the checkpoints and archive of a previous run.

    """

    program_id: str
    catalog: str
    source: str
    profile: CompilerProfile = field(default_factory=CompilerProfile)
    strategy: str = _DEFAULT_STRATEGY
    max_iterations: Optional[int] = None
    max_seconds: Optional[float] = None
    rng_seed: int = 0
    workers: int = 1
    archive_root: str = "archive"
    checkpoint_interval: int = _DEFAULT_CHECKPOINT_INTERVAL
    progress_interval: int = _DEFAULT_PROGRESS_INTERVAL
    search: str = "guided"
    score_url: Optional[str] = None
    max_history: Optional[int] = None
    compressor: str = "lzma"
    register_baseline: Optional[bool] = None
    resume: bool = False

    def __post_init__(self) -> None:
        validate_program_id(self.program_id)

        if self.max_iterations is None and self.max_seconds is None:
            raise ConfigurationError(
                "The campaign budget is unbounded. HINT: Set `max_iterations`, `max_seconds` or both."
            )
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigurationError(f"The iteration budget can't be negative. Found {self.max_iterations}.")
        if self.max_seconds is not None and self.max_seconds < 0:
            raise ConfigurationError(f"The time budget can't be negative. Found {self.max_seconds}.")
        if self.workers < 1:
            raise ConfigurationError(f"A campaign needs at least 1 worker. Found {self.workers}.")
        if self.checkpoint_interval < 1 or self.progress_interval < 1:
            raise ConfigurationError("The checkpoint and progress intervals should be positive.")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigurationError(f"The rng_seed should fit in 64 bits. Found {self.rng_seed}.")
        if self.search not in _SEARCH_MODES:
            raise ConfigurationError(f"The search mode should be one of {_SEARCH_MODES}. Found {self.search}.")

        try:
            parsed = Strategy.parse(self.strategy)
        except StrategyError as e:
            raise ConfigurationError(str(e)) from None
        self.strategy = str(parsed)
        if self.register_baseline is None:
            self.register_baseline = parsed.needs_baseline

    @property
    def parsed_strategy(self) -> Strategy:
        return Strategy.parse(self.strategy)

    @property
    def program_dir(self) -> str:
        return os.path.join(self.archive_root, self.program_id)

    def check_paths(self) -> None:
        if not os.path.isfile(self.catalog):
            raise ConfigurationError(f"The catalog file {self.catalog} doesn't exist.")
        if not os.path.exists(self.source):
            raise ConfigurationError(f"The source unit {self.source} doesn't exist.")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = "") -> "CampaignConfig":
        data = dict(data)
        budget = data.pop("budget", {})
        if not isinstance(budget, dict):
            raise ConfigurationError("The `budget` entry should be a table with `iterations` and/or `seconds`.")
        if "iterations" in budget:
            data.setdefault("max_iterations", budget["iterations"])
        if "seconds" in budget:
            data.setdefault("max_seconds", budget["seconds"])

        compiler = data.pop("compiler", data.pop("profile", {}))
        known = {f.name for f in fields(cls)} - {"profile"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(
                f"Unknown campaign settings {unknown}. HINT: Supported settings are {sorted(known)}."
            )

        missing = sorted({"program_id", "catalog", "source"} - set(data))
        if missing:
            raise ConfigurationError(f"The campaign config is missing {missing}.")

        data.setdefault("archive_root", "archive")
        for key in _PATH_KEYS:
            if key in data:
                data[key] = resolve_path(base_dir, str(data[key]))
        compiler = dict(compiler)
        compiler.setdefault("work_dir", os.path.join(data["archive_root"], ".work"))
        return cls(profile=CompilerProfile.from_dict(compiler, base_dir), **data)


def load_config(path: str) -> CampaignConfig:
    """Load a campaign config from a TOML or JSON file. Relative paths are resolved against its directory."""
    return CampaignConfig.from_dict(load_document(path), os.path.dirname(os.path.abspath(path)))
