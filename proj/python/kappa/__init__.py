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

"""Python bindings for the kappa keyphrase toolkit."""

from ._kappa import (
    KappaError,
    brute_force,
    f1_at_5,
    f1_at_m,
    hungarian,
    map_at_k,
    ndcg_at_k,
    porter_stem,
    portraits,
    render_prompt,
    stem_key,
    tokenize,
    train,
    write_synthetic_corpus,
)

__all__ = [
    "KappaError",
    "brute_force",
    "f1_at_5",
    "f1_at_m",
    "hungarian",
    "map_at_k",
    "ndcg_at_k",
    "porter_stem",
    "portraits",
    "render_prompt",
    "stem_key",
    "tokenize",
    "train",
    "write_synthetic_corpus",
]
