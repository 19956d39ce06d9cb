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

from lightning_utilities.core.imports import RequirementCache

_TQDM_AVAILABLE = RequirementCache("tqdm")
_TOMLLIB_AVAILABLE = RequirementCache("tomllib")
_TOMLI_AVAILABLE = RequirementCache("tomli")

# Compiler driver
_DEFAULT_FALLBACK_FLAGS = ("-O0",)
_DEFAULT_BASELINE_FLAGS = ("-O0",)
_DEFAULT_COMPILE_TIMEOUT = 300.0  # seconds
_CRASH_STDERR_LIMIT = 64 * 1024
_TEMPLATE_PLACEHOLDERS = ("{flags}", "{input}", "{output}")

# Binary model
_FUZZY_MIN_BLOCK = 3
_DEFAULT_LZMA_PRESET = 6
_FUNCTION_HASH_BYTES = 8

# Archive layout
_BIN_DIRNAME = "bin"
_BASELINE_DIRNAME = "baseline"
_META_FILENAME = "meta.jsonl"
_PROGRAM_FILENAME = "program.json"
_CORPUS_FILENAME = "corpus.jsonl"
_STATS_FILENAME = "stats.json"
_CRASH_LOG_FILENAME = "crashes.jsonl"

# Campaign
_DEFAULT_STRATEGY = "fh"
_DEFAULT_CHECKPOINT_INTERVAL = 500
_DEFAULT_PROGRESS_INTERVAL = 100
_SCORE_HISTOGRAM_BINS = 20

# Score service
_DEFAULT_MAX_UPLOAD_BYTES = 256 * 1024 * 1024
_DEFAULT_SERVICE_HOST = "127.0.0.1"
_DEFAULT_SERVICE_PORT = 8470

_TIME_FORMAT = "%Y-%m-%dT%H:%M:%S.%fZ"
