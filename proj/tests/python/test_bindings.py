# Copyright 2026 The Kappa Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import pytest

import kappa


def test_text_and_stemming():
    assert kappa.tokenize("Graph-based Models.") == ["graph", "based", "models"]
    assert kappa.porter_stem("caresses") == "caress"
    assert kappa.porter_stem("relational") == "relat"
    assert kappa.stem_key("neural networks") == kappa.stem_key("neural network")


def test_metrics():
    r = kappa.f1_at_5(["graph model", "node"], ["graph models", "edge"])
    assert r["f1"] == pytest.approx(2 / 7, abs=1e-12)
    assert kappa.ndcg_at_k(["b", "a"], ["a"], 5) == pytest.approx(1 / math.log2(3))
    assert kappa.map_at_k(["a"], ["a"], 5) == 1.0
    with pytest.raises(kappa.KappaError):
        kappa.map_at_k([], [], 0)


def test_assignment():
    perm, total = kappa.hungarian([[0.0, -1.0], [-1.0, 0.0]])
    assert perm == [1, 0]
    assert total == -2.0
    cost = [[-0.2, -0.9, -0.1], [-0.5, -0.4, -0.3], [-0.6, -0.1, -0.8]]
    assert kappa.hungarian(cost) == kappa.brute_force(cost)


def test_prompt_template():
    assert (
        kappa.render_prompt(["graph"], "a b")
        == "keyphrases from higher-level: graph [sep] find keyphrases from: a b"
    )


def test_train_and_portraits(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    ckpt = tmp_path / "model.ckpt"
    kappa.write_synthetic_corpus(corpus, n=4, seed=3)
    settings = {"d": "16", "n_heads": "2", "n_enc_layers": "1", "n_dec_layers": "1", "epochs": "2",
                "stage1_epochs": "1", "ffn_width": "32"}
    csv = kappa.train(corpus, ckpt, settings)
    assert csv.splitlines()[0].startswith("epoch,stage")
    assert len(csv.splitlines()) == 3
    out = kappa.portraits(ckpt, corpus)
    assert len(out) == 4
    for p in out:
        assert p["prompts"][0].startswith("keyphrases from higher-level: ")
        keys = [kappa.stem_key(e["text"]) for e in p["keyphrases"]]
        assert len(keys) == len(set(keys))
    with pytest.raises(kappa.KappaError):
        kappa.train(corpus, ckpt, {"no_such_key": "1"})
