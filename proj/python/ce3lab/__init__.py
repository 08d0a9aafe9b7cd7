# Copyright 2026 The CE3 Lab Authors
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

"""Python interface to the ce3 dynamic search library."""

import json as _json

from ._ce3 import (
    clipped_surrogate,
    default_config,
    generate_topic,
    nsdcg,
    precision_recall,
    svd_compress,
    tsne,
)
from ._ce3 import run_experiment as _run_experiment

__all__ = [
    "clipped_surrogate",
    "default_config",
    "generate_topic",
    "nsdcg",
    "precision_recall",
    "run_experiment",
    "svd_compress",
    "tsne",
]


def run_experiment(config=None, **overrides):
    """Run an experiment from a config dict (or the defaults) plus overrides."""
    cfg = _json.loads(default_config()) if config is None else dict(config)
    cfg.update(overrides)
    return _run_experiment(_json.dumps(cfg))
