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

import logging
import signal
import traceback
from dataclasses import dataclass
from multiprocessing import Event, Process, Queue, Value
from queue import Empty
from time import time
from typing import Any, List, Optional, Set, Tuple

import numpy as np

from binfecund.build.driver import BuildDriver, worker_profile
from binfecund.campaign.config import CampaignConfig
from binfecund.campaign.corpus import CorpusEntry, WeightedCorpus
from binfecund.campaign.engine import (
    CampaignSession,
    CampaignStats,
    IterationRecord,
    LocalScorer,
    Observer,
    ProgressCallback,
    Searcher,
)
from binfecund.exceptions import ConfigurationError
from binfecund.flags import FlagCatalog

logger = logging.getLogger(__name__)

_JOIN_TIMEOUT = 10.0  # seconds


@dataclass
class _WorkerDone:
    worker: int


class BaseWorker:
    """Runs the search loop of one worker and ships every build report to the coordinator.

    The worker keeps a replica of the corpus and of the known ``.text`` hashes, refreshed from its broadcast queue
    before each iteration. Binaries whose hash it already knows are sent without their bytes.

    """

    def __init__(
        self,
        worker_index: int,
        config: CampaignConfig,
        catalog: FlagCatalog,
        source_unit: str,
        crash_log: str,
        rng: np.random.Generator,
        corpus_entries: List[CorpusEntry],
        known_hashes: Set[str],
        result_queue: Queue,
        error_queue: Queue,
        broadcast_queue: Queue,
        tickets: Any,
        stop_event: Any,
        deadline: Optional[float],
    ) -> None:
        self.worker_index = worker_index
        self.config = config
        self.catalog = catalog
        self.source_unit = source_unit
        self.crash_log = crash_log
        self.rng = rng
        self.corpus_entries = corpus_entries
        self.known_hashes = set(known_hashes)
        self.result_queue = result_queue
        self.error_queue = error_queue
        self.broadcast_queue = broadcast_queue
        self.tickets = tickets
        self.stop_event = stop_event
        self.deadline = deadline
        self.searcher: Optional[Searcher] = None

    def run(self) -> None:
        # the coordinator turns SIGINT into the stop event
        signal.signal(signal.SIGINT, signal.SIG_IGN)
        try:
            self._setup()
            self._loop()
        except Exception:
            traceback_format = traceback.format_exc()
            self.error_queue.put(traceback_format)
            return
        self.result_queue.put(_WorkerDone(self.worker_index))

    def _setup(self) -> None:
        corpus = WeightedCorpus()
        for entry in self.corpus_entries:
            corpus.add(entry)
        profile = worker_profile(self.config.profile, self.worker_index)
        driver = BuildDriver(profile, self.config.program_id, self.crash_log)
        self.searcher = Searcher(
            self.config, self.catalog, corpus, self.rng, driver, self.source_unit, worker=self.worker_index
        )

    def _take_ticket(self) -> bool:
        if self.config.max_iterations is None:
            return True
        with self.tickets.get_lock():
            if self.tickets.value >= self.config.max_iterations:
                return False
            self.tickets.value += 1
            return True

    def _keep_going(self) -> bool:
        if self.stop_event.is_set():
            return False
        if self.deadline is not None and time() >= self.deadline:
            return False
        return self._take_ticket()

    def _apply_broadcasts(self) -> None:
        assert self.searcher is not None
        while True:
            try:
                entries, text_hashes = self.broadcast_queue.get_nowait()
            except Empty:
                return
            for entry in entries:
                self.searcher.corpus.add(entry)
            self.known_hashes.update(text_hashes)

    def _loop(self) -> None:
        assert self.searcher is not None
        while self._keep_going():
            self._apply_broadcasts()
            report = self.searcher.step()
            for binary in report.binaries:
                if binary.text_hash in self.known_hashes:
                    binary.raw = None
            self.result_queue.put(report)


class CampaignWorkerProcess(BaseWorker, Process):
    def __init__(self, *args: Any, **kwargs: Any) -> None:
        BaseWorker.__init__(self, *args, **kwargs)
        Process.__init__(self)


class _Coordinator:
    """Scores what the workers build, owns the master corpus and relays admissions to every worker."""

    def __init__(self, session: CampaignSession, source_unit: str) -> None:
        self.session = session
        self.source_unit = source_unit
        self.result_queue: Queue = Queue()
        self.error_queue: Queue = Queue()
        self.broadcast_queues: List[Queue] = []
        self.stop_event = Event()
        self.tickets = Value("q", session.stats.iterations)
        self.workers: List[CampaignWorkerProcess] = []

    def _create_process_workers(self) -> None:
        session = self.session
        scorer = session.scorer
        known = set(scorer.store.seen_text_hashes) if isinstance(scorer, LocalScorer) else set()

        workers: List[CampaignWorkerProcess] = []
        broadcast_queues: List[Queue] = []
        for worker_index in range(session.config.workers):
            broadcast_queues.append(Queue())
            worker = CampaignWorkerProcess(
                worker_index,
                session.config,
                session.catalog,
                self.source_unit,
                session.crash_log,
                session.rng(worker_index),
                session.corpus.entries,
                known,
                self.result_queue,
                self.error_queue,
                broadcast_queues[-1],
                self.tickets,
                self.stop_event,
                session.deadline,
            )
            worker.start()
            workers.append(worker)

        # Note: Don't store within the loop as weakref aren't serializable
        self.workers = workers
        self.broadcast_queues = broadcast_queues

    def _broadcast(self, record: IterationRecord) -> None:
        if record.entry is None and not record.text_hashes:
            return
        message: Tuple[List[CorpusEntry], List[str]] = (
            [record.entry] if record.entry is not None else [],
            record.text_hashes,
        )
        for queue in self.broadcast_queues:
            queue.put(message)

    def _exit_on_error(self, error: str) -> None:
        for w in self.workers:
            w.terminate()
        raise RuntimeError(f"We found the following error {error}.")

    def run(self) -> None:
        self._create_process_workers()
        logger.info(f"Started {len(self.workers)} campaign workers.")
        done: Set[int] = set()
        try:
            while len(done) < len(self.workers):
                try:
                    error = self.error_queue.get(timeout=0.001)
                    self._exit_on_error(error)
                except Empty:
                    pass

                if not self.session.has_budget():
                    self.stop_event.set()

                try:
                    message = self.result_queue.get(timeout=0.01)
                except Empty:
                    # Exit early if all the workers are gone without saying goodbye.
                    if all(not w.is_alive() for w in self.workers):
                        try:
                            error = self.error_queue.get(timeout=0.5)
                            self._exit_on_error(error)
                        except Empty:
                            break
                    continue

                if isinstance(message, _WorkerDone):
                    done.add(message.worker)
                    continue
                self._broadcast(self.session.absorb(message))
        finally:
            self.stop_event.set()
            self._shutdown()

    def _shutdown(self) -> None:
        for w in self.workers:
            w.join(_JOIN_TIMEOUT)
            if w.is_alive():
                w.terminate()
        for queue in self.broadcast_queues:
            # workers may be gone with unread admissions
            queue.cancel_join_thread()
            queue.close()


def run_parallel(
    config: CampaignConfig,
    observer: Optional[Observer] = None,
    progress: Optional[ProgressCallback] = None,
) -> CampaignStats:
    """Run ``config.workers`` worker processes against one fitness store and one corpus.

    Workers build in their own ``work_dir/worker-<i>``. The coordinator is the only process scoring, so the store
    stays the single dedup authority and the archive never holds two binaries with the same ``.text``.

    """
    if config.workers < 2:
        raise ConfigurationError(f"The parallel mode needs at least 2 workers. Found {config.workers}.")

    session = CampaignSession(config, observer, progress).open()
    driver = BuildDriver(config.profile, config.program_id, session.crash_log)
    source_unit = session.probe(driver)

    logger.info(
        f"Starting the parallel {config.search} campaign of {config.program_id} with {config.workers} workers."
    )
    with session.interruptible():
        _Coordinator(session, source_unit).run()
    return session.finish()
