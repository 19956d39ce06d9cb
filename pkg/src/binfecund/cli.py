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

import argparse
import logging
import sys
from collections import Counter
from typing import Optional, Sequence

from binfecund.__about__ import __version__
from binfecund.campaign.config import load_config
from binfecund.campaign.engine import CampaignStats, run_campaign
from binfecund.exceptions import BinfecundError, ConfigurationError
from binfecund.flags.catalog import load_catalog, serialize_catalog
from binfecund.report import (
    build_report,
    format_crash_table,
    group_crashes,
    parse_baseline_args,
    read_crashes,
    write_report,
)
from binfecund.service.app import load_service_config, serve

logger = logging.getLogger("binfecund")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _progress_line(stats: CampaignStats) -> str:
    return (
        f"iterations={stats.iterations} unique={stats.unique_binaries} fallback={stats.fallback_count}"
        f" crash={stats.crash_count} timeout={stats.timeout_count} error={stats.error_count}"
    )


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.resume:
        config.resume = True

    def _progress(stats: CampaignStats) -> None:
        print(_progress_line(stats), flush=True)

    stats = run_campaign(config, progress=_progress)
    if stats.interrupted:
        print("interrupted, checkpoint written", flush=True)
    print(f"unique={stats.unique_binaries}", flush=True)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = build_report(
        args.archive_root,
        parse_baseline_args(args.o0),
        parse_baseline_args(args.o3),
        program=args.program,
    )
    write_report(report, sys.stdout)
    for error in report.errors:
        print(f"error: {error}", file=sys.stderr)
    return EXIT_FAILURE if report.errors else EXIT_OK


def cmd_crashes(args: argparse.Namespace) -> int:
    print(format_crash_table(group_crashes(read_crashes(args.archive_root))))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    config = load_service_config(args.config)
    if args.host is not None:
        config.host = args.host
    if args.port is not None:
        config.port = args.port

    def _ready(host: str, port: int) -> None:
        print(f"listening on http://{host}:{port}", flush=True)

    return serve(config, ready=_ready)


def cmd_catalog_check(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    if args.normalized:
        sys.stdout.write(serialize_catalog(catalog))
        return EXIT_OK
    kinds = Counter(type(spec.kind).__name__.replace("Kind", "").lower() for spec in catalog.flags)
    print(
        f"flags={len(catalog)} switch={kinds['switch']} enum={kinds['enum']} uint={kinds['uint']}"
        f" seed_width={catalog.total_width}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binfecund", description="Search compiler flags for distinct binaries.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info logs, -vv for debug logs.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a campaign.")
    run.add_argument("-c", "--config", required=True, help="Campaign config file (TOML or JSON).")
    run.add_argument("--resume", action="store_true", help="Continue from the checkpoints of a previous run.")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="Write the NCD report of an archive as CSV.")
    report.add_argument("-a", "--archive-root", required=True)
    report.add_argument("-p", "--program", default=None)
    report.add_argument("--o0", action="append", default=[], metavar="[PROGRAM=]PATH", help="O0 baseline binary.")
    report.add_argument("--o3", action="append", default=[], metavar="[PROGRAM=]PATH", help="O3 baseline binary.")
    report.set_defaults(func=cmd_report)

    crashes = sub.add_parser("crashes", help="Group the recorded compiler crashes.")
    crashes.add_argument("-a", "--archive-root", required=True)
    crashes.set_defaults(func=cmd_crashes)

    serve_parser = sub.add_parser("serve", help="Run the score service.")
    serve_parser.add_argument("-c", "--config", required=True, help="Service config file (TOML or JSON).")
    serve_parser.add_argument("--host", default=None)
    serve_parser.add_argument("--port", type=int, default=None)
    serve_parser.set_defaults(func=cmd_serve)

    check = sub.add_parser("catalog-check", help="Validate a flag catalog.")
    check.add_argument("catalog")
    check.add_argument("--normalized", action="store_true", help="Print the catalog in its canonical form.")
    check.set_defaults(func=cmd_catalog_check)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BinfecundError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE

