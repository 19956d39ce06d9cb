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
import os
from typing import Any, Dict

from binfecund.constants import _TOMLI_AVAILABLE, _TOMLLIB_AVAILABLE
from binfecund.exceptions import ConfigurationError


def _load_toml(text: str) -> Dict[str, Any]:
    if _TOMLLIB_AVAILABLE:
        import tomllib

        return tomllib.loads(text)
    if _TOMLI_AVAILABLE:
        import tomli

        return tomli.loads(text)
    raise ModuleNotFoundError(f"Reading TOML files requires Python 3.11 or `tomli`. {_TOMLI_AVAILABLE}")


def load_document(path: str) -> Dict[str, Any]:
    """Read a TOML (``.toml``) or JSON (any other extension) configuration file into a dictionary."""
    if not os.path.isfile(path):
        raise ConfigurationError(f"The config file {path} doesn't exist.")

    with open(path, encoding="utf-8") as f:
        text = f.read()

    try:
        data = _load_toml(text) if path.endswith(".toml") else json.loads(text)
    except ModuleNotFoundError:
        raise
    except ValueError as e:
        raise ConfigurationError(f"The config file {path} can't be parsed: {e}") from None

    if not isinstance(data, dict):
        raise ConfigurationError(f"The config file {path} should hold a single table/object.")
    return data


def resolve_path(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)
