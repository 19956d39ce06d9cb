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

from typing import Any, Dict, Optional, Type
from urllib.parse import quote, urljoin

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from binfecund import exceptions
from binfecund.exceptions import BinfecundError
from binfecund.fitness.store import ScoreResult

_CONNECTION_RETRY_TOTAL = 5
_CONNECTION_RETRY_BACKOFF_FACTOR = 0.5
_DEFAULT_REQUEST_TIMEOUT = 120  # seconds

# Fallback exception per status code when the body doesn't name a known one.
_STATUS_ERRORS: Dict[int, Type[BinfecundError]] = {
    400: exceptions.ConfigurationError,
    404: exceptions.ConfigurationError,
    409: exceptions.StrategyMismatchError,
    413: exceptions.ConfigurationError,
    422: exceptions.ElfParseError,
}


class _CustomRetryAdapter(HTTPAdapter):
    def __init__(self, *args: Any, **kwargs: Any) -> None:
        self.timeout = kwargs.pop("timeout", _DEFAULT_REQUEST_TIMEOUT)
        super().__init__(*args, **kwargs)

    def send(self, request: Any, *args: Any, **kwargs: Any) -> Any:
        kwargs["timeout"] = kwargs.get("timeout") or self.timeout
        return super().send(request, **kwargs)


def _raise_for_error(response: requests.Response) -> None:
    if response.status_code < 400:
        return
    try:
        body = response.json()
    except ValueError:
        body = {}
    message = body.get("error") or response.text or response.reason
    error_type = getattr(exceptions, str(body.get("type", "")), None)
    if not (isinstance(error_type, type) and issubclass(error_type, BinfecundError)):
        error_type = _STATUS_ERRORS.get(response.status_code, BinfecundError)
    error = error_type(message)
    error.status_code = response.status_code  # type: ignore[attr-defined]
    raise error


class ScoreClient:
    """Submits binaries to a running score service.

    Connection failures and 5xx answers are retried with an exponential backoff. Error answers are raised as the
    ``binfecund.exceptions`` class the service names, with the HTTP status in ``status_code``.

    Arguments:
        base_url: Root URL of the service, e.g. ``http://127.0.0.1:8470``.
        use_retry: Retry failed connections.

    """

    def __init__(self, base_url: str, use_retry: bool = True, timeout: float = _DEFAULT_REQUEST_TIMEOUT) -> None:
        self.base_url = base_url if base_url.endswith("/") else base_url + "/"
        retry_strategy = Retry(
            total=_CONNECTION_RETRY_TOTAL,
            # a read error may follow a processed upload, whose replay would score as a duplicate
            read=0,
            backoff_factor=_CONNECTION_RETRY_BACKOFF_FACTOR,
            status_forcelist=[429, 502, 503, 504],
            allowed_methods=None,
        )
        self.session = requests.Session()
        self.session.headers.update({"Content-Type": "application/octet-stream"})
        if use_retry:
            adapter = _CustomRetryAdapter(max_retries=retry_strategy, timeout=timeout)
            self.session.mount("http://", adapter)
            self.session.mount("https://", adapter)

    def _url(self, program_id: str, action: str) -> str:
        return urljoin(self.base_url, f"v1/programs/{quote(program_id, safe='')}/{action}")

    def score(self, program_id: str, data: bytes, strategy: Optional[str] = None) -> ScoreResult:
        params = {"strategy": strategy} if strategy else None
        response = self.session.post(self._url(program_id, "score"), data=data, params=params)
        _raise_for_error(response)
        body = response.json()
        return ScoreResult(float(body["dscore"]), bool(body["unique"]), None, body.get("content_hash", ""))

    def register_baseline(self, program_id: str, data: bytes, strategy: Optional[str] = None) -> Dict[str, Any]:
        params = {"strategy": strategy} if strategy else None
        response = self.session.post(self._url(program_id, "baseline"), data=data, params=params)
        _raise_for_error(response)
        return response.json()

    def stats(self, program_id: str) -> Dict[str, Any]:
        response = self.session.get(self._url(program_id, "stats"))
        _raise_for_error(response)
        return response.json()

    def close(self) -> None:
        self.session.close()
