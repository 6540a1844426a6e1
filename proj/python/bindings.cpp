#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ragbench/backend.hpp"
#include "ragbench/cli.hpp"
#include "ragbench/corpus.hpp"
#include "ragbench/error.hpp"
#include "ragbench/eval.hpp"
#include "ragbench/grid.hpp"
#include "ragbench/index.hpp"

namespace py = pybind11;
using namespace ragbench;

namespace {

py::dict chunk_dict(const corpus::Chunk& c) {
  py::dict d;
  d["id"] = c.id;
  d["doc_id"] = c.doc_id;
  d["seq_no"] = c.seq_no;
  d["text"] = c.text;
  d["token_count"] = c.token_count;
  d["parent_id"] = c.parent_id ? py::cast(*c.parent_id) : py::none();
  return d;
}

std::vector<eval::EntityPrediction> predictions(const std::vector<std::vector<std::pair<std::string, std::string>>>& rows) {
  std::vector<eval::EntityPrediction> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    eval::EntitySet set;
    for (const auto& [m, t] : rows[i]) set.insert({m, t});
    out.push_back({std::to_string(i), std::move(set)});
  }
  return out;
}

class PySparseIndex {
 public:
  explicit PySparseIndex(const std::vector<std::pair<std::string, std::string>>& id_text) {
    std::vector<corpus::Chunk> chunks;
    for (const auto& [id, text] : id_text) {
      corpus::Chunk c;
      c.id = id;
      c.doc_id = id;
      c.text = text;
      chunks.push_back(std::move(c));
    }
    idx_ = index::build_sparse(chunks);
  }
  std::vector<std::pair<std::string, double>> search(const std::string& query, std::size_t k) const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& h : index::bm25_search(query, idx_, k)) out.emplace_back(h.chunk_id, h.score);
    return out;
  }

 private:
  index::SparseIndex idx_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "RAG pipeline engine and configuration-grid benchmark";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", m.attr("Error"));
  py::register_exception<InvalidInputError>(m, "InvalidInputError", m.attr("Error"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> full{"ragbench"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Run the ragbench command in-process; returns (exit_code, stdout, stderr).");

  m.def("split_sentences", [](const std::string& text) { return corpus::split_sentences(text); });

  m.def("chunk_document", [](const std::string& text, const std::string& strategy, std::size_t chunk_size,
                             const std::string& doc_id) {
    corpus::ChunkingConfig cfg{corpus::chunk_strategy_from_string(strategy), chunk_size};
    cfg.validate();
    const corpus::Document doc{doc_id, "", text, ""};
    py::list out;
    switch (cfg.strategy) {
      case corpus::ChunkStrategy::vanilla:
        for (const auto& c : corpus::chunk_vanilla(doc, cfg)) out.append(chunk_dict(c));
        break;
      case corpus::ChunkStrategy::sliding_window:
        for (const auto& c : corpus::chunk_sliding(doc, cfg)) out.append(chunk_dict(c));
        break;
      case corpus::ChunkStrategy::small2big: {
        const auto s2b = corpus::chunk_small2big(doc, cfg);
        for (const auto& c : s2b.small) out.append(chunk_dict(c));
        for (const auto& c : s2b.large) out.append(chunk_dict(c));
        break;
      }
    }
    return out;
  }, py::arg("text"), py::arg("strategy") = "vanilla", py::arg("chunk_size") = 256, py::arg("doc_id") = "doc");

  py::class_<PySparseIndex>(m, "SparseIndex", "BM25 index over (id, text) pairs.")
      .def(py::init<const std::vector<std::pair<std::string, std::string>>&>())
      .def("search", &PySparseIndex::search, py::arg("query"), py::arg("k") = 8);

  py::class_<backend::MockBackend>(m, "MockBackend")
      .def(py::init([](std::int64_t seed, std::size_t dim, std::map<std::string, std::string> table) {
             backend::BackendConfig c;
             c.seed = seed;
             c.embedding_dim = dim;
             c.response_table = std::move(table);
             return std::make_unique<backend::MockBackend>(c);
           }),
           py::arg("seed") = 0, py::arg("embedding_dim") = 64,
           py::arg("response_table") = std::map<std::string, std::string>{})
      .def("generate", [](const backend::MockBackend& b, const std::string& p) { return b.generate(p).text; })
      .def("log_likelihood", &backend::MockBackend::log_likelihood, py::arg("continuation"), py::arg("context"))
      .def("embed", [](const backend::MockBackend& b, const std::vector<std::string>& texts) {
        std::vector<std::vector<float>> out;
        for (auto& v : b.embed_batch(texts)) out.push_back(std::move(v.values));
        return out;
      });

  m.def("parse_mcq_answer", [](const std::string& text, const std::vector<std::string>& letters) {
    std::vector<eval::McqOption> opts;
    for (const auto& l : letters) opts.push_back({l, ""});
    return eval::parse_mcq_answer(text, opts);
  }, py::arg("text"), py::arg("letters") = std::vector<std::string>{"A", "B", "C", "D"});
  m.def("parse_ynm", &eval::parse_ynm);
  m.def("parse_ner_json", [](const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : eval::parse_ner_json(text)) out.emplace_back(e.mention, e.type);
    return out;
  });
  m.def("micro_f1", [](const std::vector<std::vector<std::pair<std::string, std::string>>>& preds,
                       const std::vector<std::vector<std::pair<std::string, std::string>>>& golds) {
    const auto r = eval::micro_f1(predictions(preds), predictions(golds));
    return py::make_tuple(r.precision, r.recall, r.f1);
  }, "Returns (precision, recall, f1).");
  m.def("accuracy", &eval::accuracy);
  m.def("relative_change", &eval::relative_change, py::arg("new_value"), py::arg("old_value"));
  m.def("round1", &eval::round1);

  m.def("presets", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : grid::preset_catalog()) out.emplace_back(p.name, p.setting);
    return out;
  }, "(name, setting) for the 13 preset configurations.");
}
