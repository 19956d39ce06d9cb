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

import json
import logging
import os
import signal
import threading
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from time import time
from typing import Any, Callable, Dict, Iterator, List, Optional, Set, Tuple

import numpy as np

from binfecund.binary.compression import get_compressor
from binfecund.binary.digest import BinaryDigest, digest, text_hash
from binfecund.binary.elf import extract_text
from binfecund.build.driver import BuildDriver, BuildStatus
from binfecund.build.toy import load_toy_program
from binfecund.campaign.config import CampaignConfig
from binfecund.campaign.corpus import CorpusEntry, WeightedCorpus
from binfecund.campaign.mutator import mutate
from binfecund.constants import (
    _CORPUS_FILENAME,
    _CRASH_LOG_FILENAME,
    _SCORE_HISTOGRAM_BINS,
    _STATS_FILENAME,
)
from binfecund.exceptions import (
    BuildError,
    ConfigurationError,
    ElfParseError,
    StrategyError,
    StrategyMismatchError,
)
from binfecund.fitness.store import ProgramStore, ScoreResult, read_pinned_strategy
from binfecund.flags import FlagCatalog, Seed, load_catalog, map_seed, random_seed
from binfecund.service.client import ScoreClient
from binfecund.utilities.format import _human_readable_duration

logger = logging.getLogger(__name__)

ERROR = "error"

_STATUS_COUNTERS = {
    BuildStatus.FALLBACK_USED.value: "fallback_count",
    BuildStatus.CRASH.value: "crash_count",
    BuildStatus.TIMEOUT.value: "timeout_count",
    ERROR: "error_count",
}
_COUNTERS = (
    "iterations",
    "unique_binaries",
    "fallback_count",
    "crash_count",
    "timeout_count",
    "error_count",
    "dedup_hits",
)


@dataclass
class ProducedBinary:
    """A binary of one invocation. ``raw`` is ``None`` when the producing worker already knew its ``.text``."""

    text_hash: str
    raw: Optional[bytes] = field(default=None, repr=False)


@dataclass
class BuildReport:
    worker: int
    seed: Seed
    status: str
    flags: Tuple[str, ...]
    used_flags: Tuple[str, ...] = ()
    binaries: List[ProducedBinary] = field(default_factory=list)
    detail: str = ""


@dataclass
class IterationRecord:
    """What one iteration did, handed to the campaign observer."""

    iteration: int
    worker: int
    seed: Seed
    status: str
    flags: Tuple[str, ...]
    dscores: List[float]
    unique: int
    entry: Optional[CorpusEntry] = None
    text_hashes: List[str] = field(default_factory=list)

    @property
    def dscore(self) -> float:
        return max(self.dscores, default=0.0)


def _new_counters() -> Dict[str, int]:
    return {name: 0 for name in _COUNTERS}


@dataclass
class CampaignStats:
    iterations: int = 0
    unique_binaries: int = 0
    fallback_count: int = 0
    crash_count: int = 0
    timeout_count: int = 0
    error_count: int = 0
    dedup_hits: int = 0
    elapsed: float = field(default=0.0, compare=False)
    score_histogram: Dict[str, List[int]] = field(default_factory=dict)
    per_worker: List[Dict[str, int]] = field(default_factory=list)
    interrupted: bool = field(default=False, compare=False)

    def worker(self, index: int) -> Dict[str, int]:
        while len(self.per_worker) <= index:
            self.per_worker.append(_new_counters())
        return self.per_worker[index]

    def count(self, worker: int, name: str, amount: int = 1) -> None:
        setattr(self, name, getattr(self, name) + amount)
        self.worker(worker)[name] += amount

    def record_score(self, strategy: str, dscore: float) -> None:
        bins = self.score_histogram.setdefault(strategy, [0] * _SCORE_HISTOGRAM_BINS)
        bins[min(int(dscore * _SCORE_HISTOGRAM_BINS), _SCORE_HISTOGRAM_BINS - 1)] += 1

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CampaignStats":
        known = {f.name for f in fields(cls)}
        stats = cls(**{k: v for k, v in data.items() if k in known})
        stats.per_worker = [{**_new_counters(), **counters} for counters in stats.per_worker]
        return stats

    def save(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "CampaignStats":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


class LocalScorer:
    """Scores through an in-process :class:`ProgramStore`."""

    def __init__(self, store: ProgramStore) -> None:
        self.store = store

    def lookup(self, text_hash: str) -> Optional[ScoreResult]:
        return self.store.lookup_duplicate(text_hash)

    def score(self, binary: BinaryDigest, flags: Tuple[str, ...]) -> ScoreResult:
        return self.store.score(binary, flags=flags)

    @property
    def has_baseline(self) -> bool:
        return self.store.baseline_o0 is not None

    def register_baseline(self, binary: BinaryDigest) -> None:
        self.store.register_baseline(binary)

    @property
    def unique_binaries(self) -> int:
        return self.store.unique_binaries

    def close(self) -> None:
        pass


class RemoteScorer:
    """Scores through a running score service. Hashes it already submitted are answered locally."""

    def __init__(self, client: ScoreClient, program_id: str, strategy: str) -> None:
        self.client = client
        self.program_id = program_id
        self.strategy = strategy
        self._seen: Set[str] = set()

    def lookup(self, text_hash: str) -> Optional[ScoreResult]:
        return ScoreResult(0.0, False) if text_hash in self._seen else None

    def score(self, binary: BinaryDigest, flags: Tuple[str, ...]) -> ScoreResult:
        result = self.client.score(self.program_id, binary.raw, self.strategy)
        self._seen.add(binary.text_hash)
        return result

    def _stats(self) -> Dict[str, Any]:
        try:
            return self.client.stats(self.program_id)
        except ConfigurationError as e:
            if getattr(e, "status_code", None) == 404:
                return {}
            raise

    @property
    def has_baseline(self) -> bool:
        return bool(self._stats().get("has_baseline", False))

    def register_baseline(self, binary: BinaryDigest) -> None:
        self.client.register_baseline(self.program_id, binary.raw, self.strategy)
        self._seen.add(binary.text_hash)

    @property
    def unique_binaries(self) -> int:
        return int(self._stats().get("unique_binaries", 0))

    def close(self) -> None:
        self.client.close()


Scorer = Any  # LocalScorer or RemoteScorer


class Searcher:
    """Draws the next seed and builds it. Each worker owns one.

    Arguments:
        config: The campaign settings.
        catalog: The flag catalog defining the seed layout.
        corpus: The corpus seeds are selected from. Workers of a parallel campaign hold a replica.
        rng: The random stream of this worker.
        driver: The build driver of this worker.
        source_unit: What every compile builds, after the prepare stage.
        worker: Index of the worker.

    """

    def __init__(
        self,
        config: CampaignConfig,
        catalog: FlagCatalog,
        corpus: WeightedCorpus,
        rng: np.random.Generator,
        driver: BuildDriver,
        source_unit: str,
        worker: int = 0,
    ) -> None:
        self.config = config
        self.catalog = catalog
        self.corpus = corpus
        self.rng = rng
        self.driver = driver
        self.source_unit = source_unit
        self.worker = worker
        self.width = catalog.total_width

    def next_seed(self) -> Seed:
        if self.config.search == "random" or len(self.corpus) == 0:
            return random_seed(self.width, self.rng)
        primary = self.corpus.select(self.rng)
        donor = self.corpus.select(self.rng) if len(self.corpus) > 1 else None
        return mutate(primary.seed, donor.seed if donor is not None else None, self.rng, self.width)

    def step(self) -> BuildReport:
        seed = self.next_seed()
        selection = map_seed(self.catalog, seed)
        try:
            outcome = self.driver.compile(self.source_unit, selection)
        except BuildError as e:
            logger.warning(f"Worker {self.worker}: {e}")
            return BuildReport(self.worker, seed, ERROR, selection.rendered, detail=str(e))

        binaries = []
        for path in outcome.binaries:
            with open(path, "rb") as f:
                raw = f.read()
            try:
                code = extract_text(raw).data
            except ElfParseError as e:
                logger.warning(f"Worker {self.worker}: the compiler output {path} can't be parsed: {e}")
                return BuildReport(self.worker, seed, ERROR, selection.rendered, detail=str(e))
            binaries.append(ProducedBinary(text_hash(code), raw))

        return BuildReport(
            self.worker, seed, outcome.status.value, selection.rendered, outcome.selection_used.rendered, binaries
        )


ProgressCallback = Callable[[CampaignStats], None]
Observer = Callable[[IterationRecord], None]


class CampaignSession:
    """State of a campaign shared by the single worker loop and the parallel coordinator.

    The session owns the scorer, the master corpus and the stats. Every build report goes through :meth:`absorb`.

    """

    def __init__(
        self,
        config: CampaignConfig,
        observer: Optional[Observer] = None,
        progress: Optional[ProgressCallback] = None,
    ) -> None:
        self.config = config
        self.strategy = config.parsed_strategy
        self.observer = observer
        self.progress = progress
        self.catalog: FlagCatalog
        self.scorer: Scorer = None
        self.corpus = WeightedCorpus()
        self.stats = CampaignStats()
        self.resumed_iterations = 0
        self._elapsed_before = 0.0
        self._started = time()
        self._stopped = False

    @property
    def crash_log(self) -> str:
        return os.path.join(self.config.program_dir, _CRASH_LOG_FILENAME)

    @property
    def corpus_path(self) -> str:
        return os.path.join(self.config.program_dir, _CORPUS_FILENAME)

    @property
    def stats_path(self) -> str:
        return os.path.join(self.config.program_dir, _STATS_FILENAME)

    def open(self) -> "CampaignSession":
        """Validate the inputs, open the scorer and load the checkpoints of a resumed campaign."""
        config = self.config
        config.check_paths()
        self.catalog = load_catalog(config.catalog)
        if config.profile.backend == "toy":
            try:
                load_toy_program(config.source).validate(self.catalog)
            except (KeyError, ValueError) as e:
                raise ConfigurationError(f"The toy program {config.source} can't be used: {e}") from None

        if config.score_url:
            self.scorer = RemoteScorer(ScoreClient(config.score_url), config.program_id, config.strategy)
        else:
            self.scorer = LocalScorer(self._open_store())

        if config.resume:
            if os.path.exists(self.corpus_path):
                self.corpus = WeightedCorpus.load(self.corpus_path)
            if os.path.exists(self.stats_path):
                self.stats = CampaignStats.load(self.stats_path)
                self.stats.interrupted = False
            self.resumed_iterations = self.stats.iterations
            self._elapsed_before = self.stats.elapsed
            logger.info(
                f"Resuming {config.program_id} after {self.stats.iterations} iterations"
                f" with {len(self.corpus)} corpus entries."
            )
        return self

    def _open_store(self) -> ProgramStore:
        config = self.config
        try:
            compressor = get_compressor(config.compressor)
        except ValueError as e:
            raise ConfigurationError(str(e)) from None

        try:
            archived = read_pinned_strategy(config.program_dir) is not None
        except StrategyError:
            archived = True
        if archived and not config.resume:
            raise ConfigurationError(
                f"The program {config.program_id} already has an archive under {config.archive_root}."
                " HINT: Set `resume = true` to continue it or pick another `archive_root`."
            )

        try:
            if archived:
                return ProgramStore.open(
                    config.archive_root,
                    config.program_id,
                    config.strategy,
                    compressor,
                    config.max_history,
                    config.rng_seed,
                )
            return ProgramStore(
                config.program_id, config.archive_root, config.strategy, compressor, config.max_history, config.rng_seed
            )
        except StrategyMismatchError as e:
            raise ConfigurationError(str(e)) from None

    def rng(self, worker: int = 0) -> np.random.Generator:
        """Random stream of a worker: ``rng_seed ^ worker``, mixed with the iteration count when resuming."""
        seed = self.config.rng_seed ^ worker
        if self.resumed_iterations:
            return np.random.default_rng([seed, self.resumed_iterations])
        return np.random.default_rng(seed)

    def probe(self, driver: BuildDriver) -> str:
        """Check the toolchain before iteration 1 by building the baseline, and register it when asked.

        Returns the source unit later compiles should use.

        """
        config = self.config
        source_unit = driver.prepare(config.source)
        path = driver.compile_baseline(source_unit, catalog_size=len(self.catalog))
        with open(path, "rb") as f:
            raw = f.read()
        try:
            baseline = digest(raw)
        except ElfParseError as e:
            raise ConfigurationError(f"The baseline build of {config.source} isn't a readable ELF file: {e}") from None

        if self.strategy.root.name == "fh" and not baseline.has_symbols:
            raise ConfigurationError(
                f"Fh requires symbols but the baseline of {config.program_id} is stripped."
                " HINT: Keep the symbol table or pick another strategy."
            )

        if config.register_baseline and not self.scorer.has_baseline:
            self.scorer.register_baseline(baseline)
        self._started = time()
        return source_unit

    def has_budget(self) -> bool:
        if self._stopped:
            return False
        if self.config.max_iterations is not None and self.stats.iterations >= self.config.max_iterations:
            return False
        return self.deadline is None or time() < self.deadline

    @property
    def deadline(self) -> Optional[float]:
        if self.config.max_seconds is None:
            return None
        return self._started + self.config.max_seconds

    @property
    def stopped(self) -> bool:
        return self._stopped

    def stop(self) -> None:
        self._stopped = True

    def _signal_handler(self, signum: Any, frame: Any) -> None:
        logger.warning("Interrupted. Stopping after the current iteration.")
        self.stop()

    @contextmanager
    def interruptible(self) -> Iterator[None]:
        """Turn SIGINT into a graceful stop while the loop runs."""
        if threading.current_thread() is not threading.main_thread():
            yield
            return
        previous = signal.signal(signal.SIGINT, self._signal_handler)
        try:
            yield
        finally:
            signal.signal(signal.SIGINT, previous)

    def _score(self, binary: ProducedBinary, flags: Tuple[str, ...]) -> ScoreResult:
        duplicate = self.scorer.lookup(binary.text_hash)
        if duplicate is not None:
            return duplicate
        if binary.raw is None:
            # workers only skip uploading hashes this session already scored
            return ScoreResult(0.0, False)
        return self.scorer.score(digest(binary.raw), flags)

    def absorb(self, report: BuildReport) -> IterationRecord:
        """Score the binaries of one invocation, collect its seed and update the stats."""
        stats = self.stats
        worker = report.worker
        stats.count(worker, "iterations")

        status = report.status
        dscores: List[float] = []
        text_hashes: List[str] = []
        unique = 0
        for binary in report.binaries:
            try:
                result = self._score(binary, report.used_flags)
            except StrategyMismatchError:
                raise
            except (StrategyError, ElfParseError) as e:
                status = ERROR
                logger.warning(f"{self.config.program_id}: {e}")
                break

            text_hashes.append(binary.text_hash)
            if result.unique:
                unique += 1
                stats.count(worker, "unique_binaries")
            else:
                stats.count(worker, "dedup_hits")
            stats.record_score(str(self.strategy), result.dscore)
            dscores.append(result.dscore)

        if status in _STATUS_COUNTERS:
            stats.count(worker, _STATUS_COUNTERS[status])

        entry = self.corpus.collect(report.seed, max(dscores, default=0.0))
        record = IterationRecord(
            stats.iterations, worker, report.seed, status, report.flags, dscores, unique, entry, text_hashes
        )
        logger.debug(
            f"#{record.iteration} worker={worker} status={status} dscore={record.dscore:.4f}"
            f" flags={' '.join(report.flags)}"
        )

        if self.observer is not None:
            self.observer(record)
        if stats.iterations % self.config.progress_interval == 0 and self.progress is not None:
            self.progress(stats)
        if stats.iterations % self.config.checkpoint_interval == 0:
            self.checkpoint()
        return record

    def checkpoint(self) -> None:
        os.makedirs(self.config.program_dir, exist_ok=True)
        self.stats.elapsed = self._elapsed_before + time() - self._started
        self.stats.unique_binaries = self.scorer.unique_binaries
        self.corpus.save(self.corpus_path)
        self.stats.save(self.stats_path)
        logger.debug(f"Checkpointed {self.config.program_id} at iteration {self.stats.iterations}.")

    def finish(self) -> CampaignStats:
        self.stats.interrupted = self._stopped
        try:
            self.checkpoint()
        finally:
            self.scorer.close()
        logger.info(
            f"Campaign {self.config.program_id} done after {self.stats.iterations} iterations in"
            f" {_human_readable_duration(self.stats.elapsed)}: {self.stats.unique_binaries} unique binaries,"
            f" {self.stats.fallback_count} fallbacks, {self.stats.crash_count} crashes."
        )
        return self.stats


def run_campaign(
    config: CampaignConfig,
    observer: Optional[Observer] = None,
    progress: Optional[ProgressCallback] = None,
) -> CampaignStats:
    """Run the search loop until the budget is spent or SIGINT is received.

    More than one worker delegates to :func:`~binfecund.campaign.parallel.run_parallel`.

    Raises:
        ConfigurationError: The inputs can't be used. Raised before iteration 1.
        BuildError: The baseline probe failed.

    """
    if config.workers > 1:
        from binfecund.campaign.parallel import run_parallel

        return run_parallel(config, observer, progress)

    session = CampaignSession(config, observer, progress).open()
    driver = BuildDriver(config.profile, config.program_id, session.crash_log)
    source_unit = session.probe(driver)
    searcher = Searcher(config, session.catalog, session.corpus, session.rng(), driver, source_unit)

    logger.info(f"Starting the {config.search} campaign of {config.program_id} with the {session.strategy} strategy.")
    with session.interruptible():
        while session.has_budget():
            session.absorb(searcher.step())
    return session.finish()
