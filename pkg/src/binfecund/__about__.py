# Copyright The Lightning AI team.
#
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

import time

__version__ = "0.1.0"
__author__ = "Lightning AI et al."
__author_email__ = "pytorch@lightning.ai"
__license__ = "Apache-2.0"
__copyright__ = f"Copyright (c) 2024-{time.strftime('%Y')}, {__author__}."
__homepage__ = "https://github.com/Lightning-AI/binfecund"
__docs_url__ = "https://github.com/Lightning-AI/binfecund#readme"
# this has to be simple string, see: https://github.com/pypa/twine/issues/522
__docs__ = "Feedback-guided search of compiler flags for structurally distinct binaries."
__long_doc__ = """
What is it?
-----------

binfecund mutates compiler-flag selections, builds the program with each of them, scores every new
binary by how different it is from everything seen before and keeps the flag seeds that produced
the most novel outputs. Every unique binary is archived for later analysis.
"""

__all__ = [
    "__author__",
    "__author_email__",
    "__copyright__",
    "__docs__",
    "__docs_url__",
    "__homepage__",
    "__license__",
    "__version__",
]
