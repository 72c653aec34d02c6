// Python module kfqg._core. Graphs, traces and configs cross the boundary as
// JSON text; the kfqg package wraps them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kfqg/corpus.hpp"
#include "kfqg/error.hpp"
#include "kfqg/metrics.hpp"
#include "kfqg/pipeline.hpp"
#include "kfqg/selection.hpp"
#include "kfqg/serialize.hpp"

namespace py = pybind11;
using namespace kfqg;

namespace {

KnowledgeGraph graph_of(const std::string& text) { return graph_from_json(json::parse(text)); }

Beta beta_of(const py::object& b) {
  if (py::isinstance<py::str>(b)) return Beta::parse(b.cast<std::string>());
  auto v = b.cast<double>();
  if (!(v >= 0.0)) throw Error(ErrorCode::InvalidConfig, "beta must be >= 0");
  return {v, false};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Knowledge-enhanced follow-up question generation (C++ core)";

  static py::exception<Error> error(m, "KfqgError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "pagerank", [](const std::string& graph, double damping) { return pagerank(graph_of(graph), damping); },
      py::arg("graph_json"), py::arg("damping") = 0.85);
  m.def(
      "random_walk_visits",
      [](const std::string& graph, std::size_t steps, double restart_prob, std::uint64_t seed) {
        return random_walk_visits(graph_of(graph), steps, restart_prob, seed);
      },
      py::arg("graph_json"), py::arg("steps"), py::arg("restart_prob"), py::arg("seed"));
  m.def("importance", &importance, py::arg("weights"), py::arg("visits"));
  m.def("normalize_importance", &normalize_importance, py::arg("importance"));
  m.def(
      "composite_score",
      [](const ScoreMap& inorm, const ScoreMap& sim, const py::object& beta) {
        return composite_score(inorm, sim, beta_of(beta));
      },
      py::arg("importance_norm"), py::arg("similarity"), py::arg("beta"));

  m.def("distinct_n", &metrics::distinct_n, py::arg("texts"), py::arg("n"));
  m.def("ttr", &metrics::ttr, py::arg("texts"), py::arg("pooled") = false);
  m.def(
      "bleu", [](const std::string& c, const std::string& r, int n) { return metrics::bleu(c, r, n); },
      py::arg("candidate"), py::arg("reference"), py::arg("max_n"));
  m.def("corpus_bleu", &metrics::corpus_bleu, py::arg("pairs"), py::arg("max_n"));
  m.def(
      "mutual_information",
      [](const std::vector<metrics::TextPair>& pairs, std::size_t vocab_cap) {
        metrics::MiOptions o;
        o.vocab_cap = vocab_cap;
        return metrics::mutual_information(pairs, o);
      },
      py::arg("pairs"), py::arg("vocab_cap") = 5000);
  m.def(
      "topic_consistency",
      [](const std::vector<metrics::TextPair>& pairs, std::size_t topics, std::size_t top_n, std::size_t iterations,
         std::uint64_t seed) {
        return metrics::topic_consistency(pairs, {topics, top_n, iterations, seed});
      },
      py::arg("pairs"), py::arg("topics") = 10, py::arg("top_n") = 10, py::arg("iterations") = 500,
      py::arg("seed") = 0);

  m.def(
      "load_triplets",
      [](const std::filesystem::path& path) {
        auto load = load_triplets(path);
        json out{{"triplets", json::array()},
                 {"errors", json::array()},
                 {"total_lines", load.total_lines}};
        for (const auto& t : load.triplets)
          out["triplets"].push_back(
              {{"initial_question", t.initial_question}, {"answer", t.answer}, {"follow_up", t.follow_up}});
        for (const auto& e : load.errors) out["errors"].push_back({{"line", e.line}, {"message", e.message}});
        return out.dump();
      },
      py::arg("path"));

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init([](const std::filesystem::path& path) { return Pipeline::from_config(PipelineConfig::load(path)); }),
           py::arg("config_path"))
      .def_static(
          "from_json",
          [](const std::string& text, const std::filesystem::path& base_dir) {
            return Pipeline::from_config(config_from_json(json::parse(text), base_dir));
          },
          py::arg("config_json"), py::arg("base_dir") = std::filesystem::path())
      .def(
          "run",
          [](const Pipeline& p, const std::string& question, const std::string& answer, const std::string& variant,
             std::size_t index) {
            PipelineResult r;
            {
              py::gil_scoped_release release;
              r = p.run({question, answer}, index, parse_variant(variant));
            }
            return result_to_json(r).dump();
          },
          py::arg("question"), py::arg("answer"), py::arg("variant") = "full", py::arg("item_index") = 0)
      .def(
          "with_beta", [](const Pipeline& p, const py::object& beta) { return p.with_beta(beta_of(beta)); },
          py::arg("beta"))
      .def_property_readonly("config_json", [](const Pipeline& p) { return config_to_json(p.config()).dump(); });
}
