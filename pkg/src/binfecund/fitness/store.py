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
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, List, Optional, Sequence, Set, Union

import numpy as np
from filelock import FileLock

from binfecund.binary.compression import Compressor, get_compressor
from binfecund.binary.digest import BinaryDigest, digest
from binfecund.binary.elf import TextSection
from binfecund.constants import (
    _BASELINE_DIRNAME,
    _BIN_DIRNAME,
    _META_FILENAME,
    _PROGRAM_FILENAME,
    _TIME_FORMAT,
)
from binfecund.exceptions import BaselineError, ConfigurationError, StrategyMismatchError
from binfecund.fitness.strategies import ScoringContext, StoredBinary, Strategy, evaluate
from binfecund.utilities.format import _get_tqdm_iterator_if_available, _human_readable_bytes

logger = logging.getLogger(__name__)

_PROGRAM_ID = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*")
_BASELINE_META = "baseline.json"


@dataclass(frozen=True)
class ScoreResult:
    dscore: float
    unique: bool
    stored_as: Optional[str] = None
    content_hash: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.dscore <= 1.0:
            raise ValueError(f"A difference score lies in [0, 1]. Found {self.dscore}.")
        if not self.unique and self.dscore != 0.0:
            raise ValueError("A duplicate binary always scores 0.")


def validate_program_id(program_id: str) -> str:
    if not _PROGRAM_ID.fullmatch(program_id or ""):
        raise ConfigurationError(
            f"The program id {program_id!r} isn't valid. HINT: Use letters, digits, `.`, `_` and `-` only."
        )
    return program_id


def _as_strategy(value: Union[str, Strategy]) -> Strategy:
    return value if isinstance(value, Strategy) else Strategy.parse(value)


class ProgramStore:
    """History, dedup sets and archive of one program. ``score`` and ``register_baseline`` are atomic.

    Arguments:
        program_id: Label of the program, also its archive directory name.
        archive_root: Directory holding one archive directory per program.
        strategy: The strategy pinned for this program.
        compressor: Compressor of the NCD strategies. Defaults to the registered ``lzma`` one.
        max_history: Keep a uniform reservoir of at most this many binaries in the history. Unbounded by default.
        history_seed: Seed of the reservoir sampling.

    """

    def __init__(
        self,
        program_id: str,
        archive_root: str,
        strategy: Union[str, Strategy],
        compressor: Optional[Compressor] = None,
        max_history: Optional[int] = None,
        history_seed: int = 0,
    ) -> None:
        if max_history is not None and max_history < 1:
            raise ConfigurationError(f"The max_history should be at least 1. Found {max_history}.")

        self.program_id = validate_program_id(program_id)
        self.archive_dir = os.path.join(archive_root, program_id)
        self.strategy = _as_strategy(strategy)
        self.compressor = compressor or get_compressor()
        self.max_history = max_history

        self.seen_text_hashes: Set[str] = set()
        self.function_hash_set: Set[int] = set()
        self.history: List[StoredBinary] = []
        self.baseline_o0: Optional[StoredBinary] = None

        self.unique_binaries = 0
        self.dedup_hits = 0
        self.archive_bytes = 0

        self._observed = 0
        self._rng = np.random.default_rng(history_seed)
        self._lock = threading.Lock()

        os.makedirs(os.path.join(self.archive_dir, _BIN_DIRNAME), exist_ok=True)
        self._pin_strategy()

    @classmethod
    def open(
        cls,
        archive_root: str,
        program_id: str,
        strategy: Optional[Union[str, Strategy]] = None,
        compressor: Optional[Compressor] = None,
        max_history: Optional[int] = None,
        history_seed: int = 0,
    ) -> "ProgramStore":
        """Reload the archive of a program, re-digesting every stored binary."""
        pinned = read_pinned_strategy(os.path.join(archive_root, program_id))
        if pinned is None and strategy is None:
            raise ConfigurationError(f"The program {program_id} has no archive under {archive_root}.")
        if pinned is not None and strategy is not None and _as_strategy(strategy) != pinned:
            raise StrategyMismatchError(
                f"The program {program_id} is pinned to the {pinned} strategy, not {strategy}."
            )

        store = cls(program_id, archive_root, pinned or strategy, compressor, max_history, history_seed)  # type: ignore
        store._load()
        return store

    def __len__(self) -> int:
        return self.unique_binaries

    @property
    def meta_path(self) -> str:
        return os.path.join(self.archive_dir, _META_FILENAME)

    def is_empty(self) -> bool:
        return self.unique_binaries == 0 and self.baseline_o0 is None

    def lookup_duplicate(self, text_hash: str) -> Optional[ScoreResult]:
        """Counts and returns the zero result when the ``.text`` was already seen, ``None`` otherwise."""
        with self._lock:
            if text_hash not in self.seen_text_hashes:
                return None
            self.dedup_hits += 1
            return ScoreResult(0.0, False)

    def score(
        self,
        digest: BinaryDigest,
        text: Optional[TextSection] = None,
        strategy: Optional[Union[str, Strategy]] = None,
        flags: Sequence[str] = (),
    ) -> ScoreResult:
        """Score a binary against the history and archive it when its ``.text`` was never seen.

        Raises:
            StrategyMismatchError: ``strategy`` differs from the pinned one.
            StrategyError: Fh meets a binary without symbols.
            BaselineError: The No strategy is used before a baseline was registered.

        """
        text = text if text is not None else digest.text
        if text is None:
            raise ValueError("The `.text` section of the binary is required to score it.")
        if strategy is not None and _as_strategy(strategy) != self.strategy:
            raise StrategyMismatchError(f"The program {self.program_id} is pinned to the {self.strategy} strategy.")

        with self._lock:
            if digest.text_hash in self.seen_text_hashes:
                self.dedup_hits += 1
                return ScoreResult(0.0, False, None, digest.content_hash)

            candidate = StoredBinary(digest, text.data)
            context = ScoringContext(self.history, self.function_hash_set, self.baseline_o0, self.compressor)
            dscore = evaluate(self.strategy, candidate, context)

            new_functions = len({h for h in digest.function_hashes if h not in self.function_hash_set})
            stored_as = self._archive(candidate, dscore, flags, new_functions)
            self._remember(candidate)
            self.unique_binaries += 1

        logger.debug(f"{self.program_id}: archived {digest.content_hash[:12]} with dscore={dscore:.4f}.")
        return ScoreResult(dscore, True, stored_as, digest.content_hash)

    def register_baseline(self, digest: BinaryDigest, text: Optional[TextSection] = None) -> "ProgramStore":
        """Register the ``-O0`` reference binary. It also joins the history and the dedup sets."""
        text = text if text is not None else digest.text
        if text is None:
            raise ValueError("The `.text` section of the baseline is required.")

        with self._lock:
            if self.baseline_o0 is not None:
                raise BaselineError(f"The program {self.program_id} already has a baseline.")

            candidate = StoredBinary(digest, text.data)
            directory = os.path.join(self.archive_dir, _BASELINE_DIRNAME)
            os.makedirs(directory, exist_ok=True)
            with FileLock(self.meta_path + ".lock"):
                _write_atomic(os.path.join(directory, digest.content_hash), digest.raw)
                with open(os.path.join(self.archive_dir, _BASELINE_META), "w", encoding="utf-8") as f:
                    json.dump({"content_hash": digest.content_hash, "text_hash": digest.text_hash}, f)

            self.baseline_o0 = candidate
            if digest.text_hash not in self.seen_text_hashes:
                self._remember(candidate)
        logger.info(f"{self.program_id}: registered the baseline {digest.content_hash[:12]}.")
        return self

    def stats(self) -> Dict[str, Any]:
        with self._lock:
            return {
                "program_id": self.program_id,
                "unique_binaries": self.unique_binaries,
                "dedup_hits": self.dedup_hits,
                "strategy": str(self.strategy),
                "archive_bytes": self.archive_bytes,
                "has_baseline": self.baseline_o0 is not None,
            }

    def records(self) -> Iterator[Dict[str, Any]]:
        yield from read_meta(self.archive_dir)

    def _remember(self, entry: StoredBinary) -> None:
        self.seen_text_hashes.add(entry.digest.text_hash)
        self.function_hash_set.update(entry.digest.function_hashes)

        self._observed += 1
        if self.max_history is None or len(self.history) < self.max_history:
            self.history.append(entry)
            return

        slot = int(self._rng.integers(0, self._observed))
        if slot < self.max_history:
            self.history[slot] = entry

    def _archive(self, entry: StoredBinary, dscore: float, flags: Sequence[str], new_functions: int) -> str:
        digest = entry.digest
        path = os.path.join(self.archive_dir, _BIN_DIRNAME, digest.content_hash)
        record = {
            "content_hash": digest.content_hash,
            "text_hash": digest.text_hash,
            "dscore": dscore,
            "strategy": str(self.strategy),
            "flags": list(flags),
            "timestamp": datetime.now(timezone.utc).strftime(_TIME_FORMAT),
            "function_count": len(digest.functions) if digest.functions is not None else None,
            "unique_function_count": new_functions if digest.functions is not None else None,
        }
        with FileLock(self.meta_path + ".lock"):
            _write_atomic(path, digest.raw)
            with open(self.meta_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record) + "\n")
        self.archive_bytes += len(digest.raw)
        return path

    def _pin_strategy(self) -> None:
        path = os.path.join(self.archive_dir, _PROGRAM_FILENAME)
        pinned = read_pinned_strategy(self.archive_dir)
        if pinned is None:
            with open(path, "w", encoding="utf-8") as f:
                json.dump({"program_id": self.program_id, "strategy": str(self.strategy)}, f)
        elif pinned != self.strategy:
            raise StrategyMismatchError(f"The program {self.program_id} is pinned to the {pinned} strategy.")

    def _load(self) -> None:
        baseline_meta = os.path.join(self.archive_dir, _BASELINE_META)
        if os.path.exists(baseline_meta):
            with open(baseline_meta, encoding="utf-8") as f:
                content_hash = json.load(f)["content_hash"]
            with open(os.path.join(self.archive_dir, _BASELINE_DIRNAME, content_hash), "rb") as f:
                baseline = digest(f.read())
            self.baseline_o0 = StoredBinary(baseline, baseline.text.data)  # type: ignore[union-attr]
            self._remember(self.baseline_o0)

        records = list(read_meta(self.archive_dir))
        iterator = _get_tqdm_iterator_if_available()
        for record in iterator(records) if len(records) > 1000 else records:
            path = os.path.join(self.archive_dir, _BIN_DIRNAME, record["content_hash"])
            with open(path, "rb") as f:
                loaded = digest(f.read())
            if loaded.text_hash in self.seen_text_hashes:
                continue
            self._remember(StoredBinary(loaded, loaded.text.data))  # type: ignore[union-attr]
            self.unique_binaries += 1
            self.archive_bytes += len(loaded.raw)
        logger.info(
            f"{self.program_id}: reloaded {self.unique_binaries} binaries"
            f" ({_human_readable_bytes(self.archive_bytes)}) from {self.archive_dir}."
        )


def _write_atomic(path: str, data: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def read_pinned_strategy(archive_dir: str) -> Optional[Strategy]:
    path = os.path.join(archive_dir, _PROGRAM_FILENAME)
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as f:
        return Strategy.parse(json.load(f)["strategy"])


def read_meta(archive_dir: str) -> Iterator[Dict[str, Any]]:
    path = os.path.join(archive_dir, _META_FILENAME)
    if not os.path.exists(path):
        return
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                yield json.loads(line)


def list_programs(archive_root: str) -> List[str]:
    if not os.path.isdir(archive_root):
        return []
    return sorted(
        name
        for name in os.listdir(archive_root)
        if os.path.isfile(os.path.join(archive_root, name, _PROGRAM_FILENAME))
    )


class StoreRegistry:
    """Creates or reopens program stores on first touch. Each store is its own critical section.

    Arguments:
        archive_root: Directory holding one archive directory per program.
        default_strategy: Strategy pinned for programs without override.
        strategy_overrides: Strategy per program id.

    """

    def __init__(
        self,
        archive_root: str,
        default_strategy: Union[str, Strategy],
        strategy_overrides: Optional[Dict[str, str]] = None,
        compressor: Optional[Compressor] = None,
        max_history: Optional[int] = None,
    ) -> None:
        self.archive_root = archive_root
        self.default_strategy = _as_strategy(default_strategy)
        self.strategy_overrides = {k: _as_strategy(v) for k, v in (strategy_overrides or {}).items()}
        self.compressor = compressor
        self.max_history = max_history
        self._stores: Dict[str, ProgramStore] = {}
        self._lock = threading.Lock()

    def find(self, program_id: str) -> Optional[ProgramStore]:
        """Returns the store of a known program without creating it."""
        validate_program_id(program_id)
        with self._lock:
            if program_id in self._stores:
                return self._stores[program_id]
            if read_pinned_strategy(os.path.join(self.archive_root, program_id)) is None:
                return None
            store = ProgramStore.open(
                self.archive_root, program_id, compressor=self.compressor, max_history=self.max_history
            )
            self._stores[program_id] = store
            return store

    def get(self, program_id: str, strategy: Optional[Union[str, Strategy]] = None) -> ProgramStore:
        """Returns the store of a program, creating it with the requested or configured strategy."""
        requested = _as_strategy(strategy) if strategy is not None else None
        store = self.find(program_id)
        with self._lock:
            if store is None:
                store = self._stores.get(program_id)
            if store is None:
                pinned = requested or self.strategy_overrides.get(program_id, self.default_strategy)
                store = ProgramStore(
                    program_id, self.archive_root, pinned, self.compressor, max_history=self.max_history
                )
                self._stores[program_id] = store
        if requested is not None and requested != store.strategy:
            raise StrategyMismatchError(f"The program {program_id} is pinned to the {store.strategy} strategy.")
        return store
