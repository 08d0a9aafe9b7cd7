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

import json
import math

import numpy as np
import pytest

import ce3lab


def test_nsdcg_single_document():
    assert ce3lab.nsdcg([["a"]], {"a": 3}) == pytest.approx(1.0)


def test_nsdcg_two_by_two_brute_force():
    ratings = {"a": 4, "b": 3, "c": 2, "d": 1}
    # Slot discounts 1, 1/2, 2/3, 1/3; ideal pairs them with 4, 2, 3, 1.
    ideal = 4 + 2 / 2 + 3 * 2 / 3 + 1 / 3
    got = 2 + 4 / 2 + 1 * 2 / 3 + 3 / 3
    assert ce3lab.nsdcg([["c", "a"], ["d", "b"]], ratings) == pytest.approx(got / ideal)


def test_precision_recall():
    p, r = ce3lab.precision_recall(["a", "x"], {"a": 2, "b": 1, "x": 0})
    assert p == 0.5 and r == 0.5
    with pytest.raises(ValueError):
        ce3lab.precision_recall(["a"], {"a": 0})


def test_clip_branches():
    assert ce3lab.clipped_surrogate(1.5, 1.0) == pytest.approx(1.2)
    assert ce3lab.clipped_surrogate(0.5, -1.0) == pytest.approx(-0.8)


def test_tsne_and_svd_shapes():
    rng = np.random.default_rng(0)
    points = np.vstack([rng.normal(0, 1, (8, 5)), rng.normal(8, 1, (8, 5))])
    y = ce3lab.tsne(points, perplexity=4.0, iterations=300, seed=1)
    assert y.shape == (16, 3)
    assert np.isfinite(y).all()
    again = ce3lab.tsne(points, perplexity=4.0, iterations=300, seed=1)
    assert np.array_equal(y, again)
    assert ce3lab.svd_compress(points, 2).shape == (16, 2)


def test_generate_topic_counts():
    docs, judgments = ce3lab.generate_topic(seed=3)
    assert len(docs) == 60
    relevant = [d for d, (rating, _) in judgments.items() if rating > 0]
    assert len(relevant) == 30
    assert all(isinstance(text, str) and text for _, text in docs)


def test_default_config_round_trips():
    cfg = json.loads(ce3lab.default_config())
    assert cfg["iterations"] == 10 and cfg["k"] == 5
    assert cfg["compressor"] == "tsne"


def test_tiny_experiment(tmp_path):
    cfg = json.loads(ce3lab.default_config())
    cfg.update(topics=1, eval_seeds=1, iterations=3, k=2, segments=4,
               output_dir=str(tmp_path), images=False)
    cfg["synthetic"].update(subtopics=2, docs_per_subtopic=4)
    cfg["tsne"].update(iterations=250, exaggeration_iterations=100,
                       momentum_switch_iteration=100)
    cfg["ppo"].update(total_episodes=8)
    report = ce3lab.run_experiment(cfg)
    assert set(report["systems"]) == {"ce3", "ce3-svd", "static", "rf", "random"}
    for curves in report["systems"].values():
        assert len(curves["recall"]) == 3
        assert all(0.0 <= v <= 1.0 for v in curves["recall"])
        assert all(a <= b for a, b in zip(curves["recall"], curves["recall"][1:]))
    assert (tmp_path / "metrics_aggregate.csv").exists()


def test_unknown_config_key_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown config key"):
        ce3lab.run_experiment(None, output_dir=str(tmp_path), bogus=1)
