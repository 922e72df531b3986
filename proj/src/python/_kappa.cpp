/*
 * Copyright 2026 The Kappa Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kappa/analysis.hpp"
#include "kappa/assignment.hpp"
#include "kappa/bundle.hpp"
#include "kappa/error.hpp"
#include "kappa/inference.hpp"
#include "kappa/metrics.hpp"
#include "kappa/porter.hpp"
#include "kappa/run_config.hpp"
#include "kappa/synth.hpp"
#include "kappa/training.hpp"

namespace py = pybind11;
using namespace kappa;

namespace {

py::dict prf_dict(const Prf& r) {
  py::dict d;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  return d;
}

std::vector<TokenSeq> tokenize_all(const std::vector<std::string>& phrases) {
  std::vector<TokenSeq> out;
  for (const auto& p : phrases) out.push_back(tokenize(p));
  return out;
}

py::dict portrait_dict(const Portrait& p) {
  py::list entries;
  for (const auto& e : p.entries) {
    py::dict d;
    d["text"] = join(e.tokens);
    d["level"] = e.level;
    d["group"] = std::string(group_name(e.group));
    d["confidence"] = e.confidence;
    entries.append(d);
  }
  py::list prompts;
  for (const auto& l : p.levels) prompts.append(l.input.rendered);
  py::dict out;
  out["id"] = p.doc_id;
  out["keyphrases"] = entries;
  out["prompts"] = prompts;
  return out;
}

RunConfig run_config(const std::map<std::string, std::string>& settings) {
  RunConfig rc;
  rc.apply(settings);
  return rc;
}

}  // namespace

PYBIND11_MODULE(_kappa, m) {
  m.doc() = "Keyphrase generation with slot control and hierarchical prompting";
  py::register_exception<Error>(m, "KappaError", PyExc_ValueError);

  m.def("tokenize", [](const std::string& s) { return tokenize(s); });
  m.def("porter_stem", [](const std::string& w) { return porter_stem(w); });
  m.def("stem_key", [](const std::string& phrase) { return stem_key(tokenize(phrase)); });

  m.def(
      "f1_at_m",
      [](const std::vector<std::string>& p, const std::vector<std::string>& t) {
        return prf_dict(f1_at_m(tokenize_all(p), tokenize_all(t)));
      },
      py::arg("predictions"), py::arg("targets"));
  m.def(
      "f1_at_5",
      [](const std::vector<std::string>& p, const std::vector<std::string>& t) {
        return prf_dict(f1_at_5(tokenize_all(p), tokenize_all(t)));
      },
      py::arg("ranked"), py::arg("targets"));
  m.def(
      "map_at_k",
      [](const std::vector<std::string>& p, const std::vector<std::string>& t, int k) {
        return map_at_k(tokenize_all(p), tokenize_all(t), k);
      },
      py::arg("ranked"), py::arg("targets"), py::arg("k"));
  m.def(
      "ndcg_at_k",
      [](const std::vector<std::string>& p, const std::vector<std::string>& t, int k) {
        return ndcg_at_k(tokenize_all(p), tokenize_all(t), k);
      },
      py::arg("ranked"), py::arg("targets"), py::arg("k"));

  m.def("hungarian", [](const CostMatrix& c) {
    auto r = hungarian(c);
    return py::make_tuple(r.perm, r.total);
  });
  m.def("brute_force", [](const CostMatrix& c) {
    auto r = brute_force(c);
    return py::make_tuple(r.perm, r.total);
  });

  m.def(
      "render_prompt",
      [](const std::vector<std::string>& previous, const std::string& body) {
        return render_prompt(tokenize_all(previous), tokenize(body));
      },
      py::arg("previous"), py::arg("body"));

  m.def(
      "write_synthetic_corpus",
      [](const std::filesystem::path& path, std::size_t n, std::uint64_t seed) {
        SynthProfile profile;
        save_jsonl(path, synth_corpus(seed, n, profile));
      },
      py::arg("path"), py::arg("n") = 64, py::arg("seed") = 1);

  m.def(
      "train",
      [](const std::filesystem::path& corpus, const std::filesystem::path& out,
         const std::map<std::string, std::string>& settings) {
        auto rc = run_config(settings);
        auto docs = load_jsonl(corpus, rc.max_segment_tokens);
        auto vocab = build_vocabulary(docs);
        ModelConfig mc = rc.model;
        mc.vocab_size = vocab.size();
        Model model(mc, rc.seed);
        std::vector<LossReport> reports;
        {
          py::gil_scoped_release release;
          reports = tsmt_train(model, vocab, docs, rc.tsmt);
        }
        save_bundle(out, model, vocab);
        return loss_report_csv(reports);
      },
      py::arg("corpus"), py::arg("out"), py::arg("settings") = std::map<std::string, std::string>{},
      "Trains on a JSONL corpus, writes a checkpoint and returns the loss report as CSV.");

  m.def(
      "portraits",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& corpus) {
        auto bundle = load_bundle(checkpoint);
        auto docs = load_jsonl(corpus);
        py::list out;
        for (const auto& d : docs) out.append(portrait_dict(phd_portrait(*bundle.model, bundle.vocab, d)));
        return out;
      },
      py::arg("checkpoint"), py::arg("corpus"));
}
