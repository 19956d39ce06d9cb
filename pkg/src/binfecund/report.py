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

import csv
import json
import os
import re
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import IO, Dict, List, Optional, Sequence, Tuple

import numpy as np

from binfecund.binary.compression import Compressor, get_compressor, ncd_from_sizes
from binfecund.binary.elf import extract_text
from binfecund.constants import _BIN_DIRNAME, _CRASH_LOG_FILENAME
from binfecund.exceptions import ConfigurationError, ElfParseError
from binfecund.fitness.store import list_programs, read_meta

REPORT_COLUMNS = ("program_id", "content_hash", "ncd_o0", "ncd_o3")
CDF_COLUMNS = ("program_id", "baseline", "bucket", "cumulative_pct")
SUMMARIES = ("avg", "median", "max")
CDF_BUCKETS = np.round(np.arange(21) * 0.05, 2)

_ALL_PROGRAMS = "*"
_PROGRAM_PREFIX = re.compile(r"([A-Za-z0-9][A-Za-z0-9._-]*)=(.+)")


@dataclass
class ReportRow:
    program_id: str
    content_hash: str
    ncd_o0: Optional[float] = None
    ncd_o3: Optional[float] = None

    def to_csv(self) -> List[str]:
        return [self.program_id, self.content_hash, _format(self.ncd_o0), _format(self.ncd_o3)]


@dataclass
class Report:
    rows: List[ReportRow] = field(default_factory=list)
    summaries: List[ReportRow] = field(default_factory=list)
    cdf: List[Tuple[str, str, float, float]] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)


def _format(value: Optional[float]) -> str:
    # repr round-trips, so summaries can be recomputed exactly from the detail rows
    return "" if value is None else repr(float(value))


def parse_baseline_args(values: Sequence[str]) -> Dict[str, str]:
    """Parse ``[PROGRAM=]PATH`` arguments. A bare path applies to every program."""
    baselines: Dict[str, str] = {}
    for value in values:
        match = _PROGRAM_PREFIX.fullmatch(value)
        if match and not os.path.exists(value):
            baselines[match.group(1)] = match.group(2)
        else:
            baselines[_ALL_PROGRAMS] = value
    return baselines


def _baseline_for(baselines: Dict[str, str], program_id: str) -> Optional[str]:
    return baselines.get(program_id, baselines.get(_ALL_PROGRAMS))


def read_text(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return extract_text(f.read()).data
    except OSError as e:
        raise ConfigurationError(f"The binary {path} can't be read: {e}") from None


class _Reference:
    """A baseline ``.text`` with its compressed length computed once."""

    def __init__(self, text: bytes, compressor: Compressor) -> None:
        self.text = text
        self.compressor = compressor
        self.size = compressor.compressed_size(text)

    def ncd(self, text: bytes, size: int) -> float:
        if not text and not self.text:
            return 0.0
        return ncd_from_sizes(size, self.size, self.compressor.compressed_size(text + self.text))


def summarize(program_id: str, rows: Sequence[ReportRow]) -> List[ReportRow]:
    """The avg, median and max rows of a program's variants."""
    o0 = np.array([row.ncd_o0 for row in rows if row.ncd_o0 is not None], dtype=np.float64)
    o3 = np.array([row.ncd_o3 for row in rows if row.ncd_o3 is not None], dtype=np.float64)
    functions = {"avg": np.mean, "median": np.median, "max": np.max}
    return [
        ReportRow(
            program_id,
            name,
            float(functions[name](o0)) if o0.size else None,
            float(functions[name](o3)) if o3.size else None,
        )
        for name in SUMMARIES
    ]


def cdf(values: Sequence[float]) -> List[Tuple[float, float]]:
    """Percentage of values at or below each bucket of 0.05."""
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    counts = np.searchsorted(ordered, CDF_BUCKETS, side="right")
    return [(float(bucket), 100.0 * int(count) / len(ordered)) for bucket, count in zip(CDF_BUCKETS, counts)]


def build_report(
    archive_root: str,
    o0: Dict[str, str],
    o3: Optional[Dict[str, str]] = None,
    program: Optional[str] = None,
    compressor: Optional[Compressor] = None,
) -> Report:
    """NCD of every archived variant's ``.text`` against the O0 (and optional O3) baseline of its program.

    A program without an O0 baseline, or with a baseline that can't be read, gets an ``error:`` row and is listed
    in ``Report.errors``.

    """
    o3 = o3 or {}
    compressor = compressor or get_compressor()
    programs = [program] if program else list_programs(archive_root)
    report = Report()

    for program_id in programs:
        records = list(read_meta(os.path.join(archive_root, program_id)))
        o0_path = _baseline_for(o0, program_id)
        if o0_path is None:
            report.errors.append(f"{program_id}: missing O0 baseline")
            report.rows.append(ReportRow(program_id, "error:missing-o0-baseline"))
            continue
        if not records:
            continue

        o3_path = _baseline_for(o3, program_id)
        try:
            reference_o0 = _Reference(read_text(o0_path), compressor)
            reference_o3 = _Reference(read_text(o3_path), compressor) if o3_path else None
        except (ConfigurationError, ElfParseError) as e:
            report.errors.append(f"{program_id}: unreadable baseline: {e}")
            report.rows.append(ReportRow(program_id, "error:unreadable-baseline"))
            continue

        rows = []
        for record in records:
            path = os.path.join(archive_root, program_id, _BIN_DIRNAME, record["content_hash"])
            try:
                text = read_text(path)
            except (ConfigurationError, ElfParseError) as e:
                report.errors.append(f"{program_id}: {e}")
                rows.append(ReportRow(program_id, f"error:{record['content_hash']}"))
                continue
            size = compressor.compressed_size(text)
            rows.append(
                ReportRow(
                    program_id,
                    record["content_hash"],
                    reference_o0.ncd(text, size),
                    reference_o3.ncd(text, size) if reference_o3 else None,
                )
            )

        scored = [row for row in rows if row.ncd_o0 is not None]
        report.rows.extend(rows)
        if not scored:
            continue
        report.summaries.extend(summarize(program_id, scored))
        for baseline, values in (("o0", [r.ncd_o0 for r in scored]), ("o3", [r.ncd_o3 for r in scored])):
            if values[0] is None:
                continue
            report.cdf.extend((program_id, baseline, bucket, pct) for bucket, pct in cdf(values))  # type: ignore
    return report


def write_report(report: Report, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in report.rows:
        writer.writerow(row.to_csv())
    for row in report.summaries:
        writer.writerow(row.to_csv())
    if report.cdf:
        stream.write("\n")
        writer.writerow(CDF_COLUMNS)
        for program_id, baseline, bucket, pct in report.cdf:
            writer.writerow([program_id, baseline, f"{bucket:.2f}", repr(pct)])


@dataclass
class CrashGroup:
    signal: str
    first_line: str
    count: int
    exemplar: List[str]
    program_id: str


def read_crashes(archive_root: str) -> List[Dict]:
    """Crash records of every program under ``archive_root``. Missing logs are empty."""
    records: List[Dict] = []
    if not os.path.isdir(archive_root):
        return records
    for name in sorted(os.listdir(archive_root)):
        path = os.path.join(archive_root, name, _CRASH_LOG_FILENAME)
        if not os.path.isfile(path):
            continue
        with open(path, encoding="utf-8") as f:
            records.extend(json.loads(line) for line in f if line.strip())
    return records


def group_crashes(records: Sequence[Dict]) -> List[CrashGroup]:
    """Group crashes by signal and first stderr line, most frequent first."""
    groups: "OrderedDict[Tuple[str, str], CrashGroup]" = OrderedDict()
    for record in records:
        signal_name = record.get("signal_name") or str(record.get("signal", ""))
        lines = (record.get("stderr") or "").strip().splitlines()
        key = (signal_name, lines[0].strip() if lines else "")
        if key in groups:
            groups[key].count += 1
        else:
            groups[key] = CrashGroup(key[0], key[1], 1, list(record.get("flags", [])), record.get("program_id", ""))
    return sorted(groups.values(), key=lambda group: -group.count)


def format_crash_table(groups: Sequence[CrashGroup]) -> str:
    if not groups:
        return "no crashes recorded"
    lines = ["count\tsignal\tfirst_line\tprogram_id\texemplar_flags"]
    for group in groups:
        lines.append(
            f"{group.count}\t{group.signal}\t{group.first_line}\t{group.program_id}\t{' '.join(group.exemplar)}"
        )
    return "\n".join(lines)
