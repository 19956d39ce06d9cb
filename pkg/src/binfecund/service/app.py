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
import os
import signal
import threading
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Dict, Optional, Tuple, Type

from flask import Flask, Response, jsonify, request
from werkzeug.exceptions import HTTPException
from werkzeug.serving import make_server

from binfecund.binary.compression import get_compressor
from binfecund.binary.digest import digest
from binfecund.constants import (
    _DEFAULT_MAX_UPLOAD_BYTES,
    _DEFAULT_SERVICE_HOST,
    _DEFAULT_SERVICE_PORT,
    _DEFAULT_STRATEGY,
)
from binfecund.exceptions import (
    BaselineError,
    BinfecundError,
    ConfigurationError,
    ElfParseError,
    StrategyError,
    StrategyMismatchError,
    UnknownStrategyError,
)
from binfecund.fitness.store import StoreRegistry
from binfecund.fitness.strategies import Strategy
from binfecund.utilities.config import load_document, resolve_path

logger = logging.getLogger(__name__)

# First match wins, subclasses come first.
_ERROR_STATUS: Tuple[Tuple[Type[BinfecundError], int], ...] = (
    (UnknownStrategyError, 400),
    (StrategyMismatchError, 409),
    (BaselineError, 409),
    (ElfParseError, 422),
    (StrategyError, 422),
    (ConfigurationError, 400),
)


@dataclass
class ServiceConfig:
    """Settings of the score service.

    Arguments:
        host: Bind address.
        port: Bind port. ``0`` picks a free one.
        archive_root: Directory holding one archive per program.
        default_strategy: Strategy pinned for programs at first touch.
        strategy_overrides: Strategy per program id.
        max_upload_bytes: Largest accepted upload.
        compressor: Compressor of the NCD strategies.
        max_history: Optional reservoir cap of each program's history.

    """

    host: str = _DEFAULT_SERVICE_HOST
    port: int = _DEFAULT_SERVICE_PORT
    archive_root: str = "archive"
    default_strategy: str = _DEFAULT_STRATEGY
    strategy_overrides: Dict[str, str] = field(default_factory=dict)
    max_upload_bytes: int = _DEFAULT_MAX_UPLOAD_BYTES
    compressor: str = "lzma"
    max_history: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_upload_bytes <= 0:
            raise ConfigurationError(f"The max_upload_bytes should be positive. Found {self.max_upload_bytes}.")
        if not 0 <= self.port < 2**16:
            raise ConfigurationError(f"The port should lie in [0, 65535]. Found {self.port}.")
        try:
            self.default_strategy = str(Strategy.parse(self.default_strategy))
            self.strategy_overrides = {k: str(Strategy.parse(v)) for k, v in self.strategy_overrides.items()}
            get_compressor(self.compressor)
        except (StrategyError, ValueError) as e:
            raise ConfigurationError(str(e)) from None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = "") -> "ServiceConfig":
        data = dict(data.get("service", data))
        if "strategy" in data:
            data.setdefault("default_strategy", data.pop("strategy"))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(
                f"Unknown service settings {unknown}. HINT: Supported settings are {sorted(known)}."
            )
        if "archive_root" in data:
            data["archive_root"] = resolve_path(base_dir, str(data["archive_root"]))
        return cls(**data)


def load_service_config(path: str) -> ServiceConfig:
    return ServiceConfig.from_dict(load_document(path), os.path.dirname(os.path.abspath(path)))


def _error_response(message: str, status: int, error_type: str) -> Tuple[Response, int]:
    return jsonify(error=message, type=error_type), status


def create_app(config: ServiceConfig, registry: Optional[StoreRegistry] = None) -> Flask:
    """Build the score service application. Scoring is serialized by each program store, not here."""
    app = Flask("binfecund")
    app.config["MAX_CONTENT_LENGTH"] = config.max_upload_bytes
    registry = registry or StoreRegistry(
        config.archive_root,
        config.default_strategy,
        config.strategy_overrides,
        compressor=get_compressor(config.compressor),
        max_history=config.max_history,
    )
    app.extensions["binfecund.registry"] = registry

    @app.errorhandler(BinfecundError)
    def _handle_binfecund_error(error: BinfecundError) -> Tuple[Response, int]:
        status = next((code for cls, code in _ERROR_STATUS if isinstance(error, cls)), 500)
        if status >= 500:
            logger.exception("Unexpected failure", exc_info=error)
        return _error_response(str(error), status, type(error).__name__)

    @app.errorhandler(HTTPException)
    def _handle_http_error(error: HTTPException) -> Tuple[Response, int]:
        return _error_response(error.description or error.name, error.code or 500, type(error).__name__)

    def _upload() -> bytes:
        # raises RequestEntityTooLarge past MAX_CONTENT_LENGTH
        return request.get_data(cache=False)

    @app.post("/v1/programs/<program_id>/score")
    def score(program_id: str) -> Response:
        strategy = request.args.get("strategy") or None
        if strategy is not None:
            strategy = str(Strategy.parse(strategy))
        binary = digest(_upload())
        store = registry.get(program_id, strategy)
        result = store.score(binary, strategy=strategy)
        return jsonify(dscore=result.dscore, unique=result.unique, content_hash=binary.content_hash)

    @app.post("/v1/programs/<program_id>/baseline")
    def baseline(program_id: str) -> Response:
        strategy = request.args.get("strategy") or None
        binary = digest(_upload())
        store = registry.get(program_id, strategy)
        store.register_baseline(binary)
        return jsonify(program_id=program_id, content_hash=binary.content_hash, registered=True)

    @app.get("/v1/programs/<program_id>/stats")
    def stats(program_id: str) -> Any:
        store = registry.find(program_id)
        if store is None:
            return _error_response(f"Unknown program {program_id}.", 404, "ConfigurationError")
        return jsonify(store.stats())

    return app


def serve(config: ServiceConfig, ready: Optional[Callable[[str, int], None]] = None) -> int:
    """Serve until SIGTERM or SIGINT. In-flight requests complete before returning.

    Raises:
        OSError: The address can't be bound.

    """
    app = create_app(config)
    try:
        server = make_server(config.host, config.port, app, threaded=True)
    except SystemExit:
        # werkzeug prints the reason and exits on bind failures
        raise OSError(f"Can't bind {config.host}:{config.port}. HINT: Is the port in use?") from None
    server.daemon_threads = False
    server.block_on_close = True

    def _shutdown(signum: Any, frame: Any) -> None:
        logger.info(f"Received {signal.Signals(signum).name}, shutting down.")
        # shutdown() waits for serve_forever(), which runs on this thread
        threading.Thread(target=server.shutdown, daemon=True).start()

    previous = {}
    if threading.current_thread() is threading.main_thread():
        for sig in (signal.SIGTERM, signal.SIGINT):
            previous[sig] = signal.signal(sig, _shutdown)

    logger.info(f"Serving the archive {config.archive_root} on http://{config.host}:{server.port}.")
    if ready is not None:
        ready(config.host, server.port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
        for sig, handler in previous.items():
            signal.signal(sig, handler)
    logger.info("The score service stopped.")
    return 0
