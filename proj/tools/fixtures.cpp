#include "fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "ragbench/error.hpp"

namespace ragbench::fixtures {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string word(Rng& rng) {
  static const char* const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "tr", "pl"};
  static const char* const kVowels[] = {"a", "e", "i", "o", "u", "ai", "eo"};
  std::string w;
  const auto syllables = uniform(rng, 1, 3);
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kOnsets[uniform(rng, 0, std::size(kOnsets) - 1)];
    w += kVowels[uniform(rng, 0, std::size(kVowels) - 1)];
  }
  if (uniform(rng, 0, 3) == 0) w += "n";
  return w;
}

namespace {

std::string capitalized(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string sentence(Rng& rng, std::size_t words, const DocSpec& spec) {
  std::string s = capitalized(word(rng));
  for (std::size_t i = 1; i < words; ++i) {
    s += ' ';
    if (unit(rng) < spec.abbreviation_rate / static_cast<double>(words)) {
      s += uniform(rng, 0, 1) == 0 ? "Dr. " + capitalized(word(rng)) : "e.g. " + word(rng);
      continue;
    }
    s += word(rng);
    if (uniform(rng, 0, 11) == 0) s += ',';
  }
  const auto end = uniform(rng, 0, 9);
  s += end == 0 ? '?' : (end == 1 ? '!' : '.');
  return s;
}

}  // namespace

std::string document_text(Rng& rng, const DocSpec& spec) {
  const auto n = uniform(rng, spec.min_sentences, spec.max_sentences);
  std::string text;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) text += uniform(rng, 0, 7) == 0 ? "\n" : " ";
    const bool oversized = unit(rng) < spec.oversized_rate;
    text += sentence(rng, oversized ? uniform(rng, 300, 360) : uniform(rng, spec.min_words, spec.max_words), spec);
  }
  return text;
}

std::vector<corpus::Document> random_corpus(std::size_t n, std::uint64_t seed, const DocSpec& spec) {
  Rng rng(seed);
  std::vector<corpus::Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "doc%05zu", i);
    docs.push_back({id, capitalized(word(rng)) + " " + word(rng), document_text(rng, spec), "synthetic"});
  }
  return docs;
}

double Suite::engineered_rate() const {
  if (engineered_labels.empty()) return 0.0;
  double pos = 0;
  for (int l : engineered_labels) pos += l;
  return pos / static_cast<double>(engineered_labels.size());
}

Suite make_suite(const SuiteSpec& spec) {
  Suite suite;
  Rng rng(spec.seed);
  suite.corpus = random_corpus(spec.background_docs, spec.seed ^ 0x5eedULL);

  // Labeling queries: exactly round(n * rate) positives at shuffled positions.
  const auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(spec.queries) * spec.positive_rate));
  suite.engineered_labels.assign(spec.queries, 0);
  for (std::size_t i = 0; i < positives; ++i) suite.engineered_labels[i] = 1;
  for (std::size_t i = spec.queries; i > 1; --i) std::swap(suite.engineered_labels[i - 1], suite.engineered_labels[uniform(rng, 0, i - 1)]);
  for (std::size_t i = 0; i < spec.queries; ++i) {
    char key[32], fact[32];
    std::snprintf(key, sizeof key, "qk%05zu", i);
    std::snprintf(fact, sizeof fact, "fact%05zu", i);
    if (suite.engineered_labels[i]) {
      const auto topic = word(rng);
      char id[32];
      std::snprintf(id, sizeof id, "fact%05zu", i);
      suite.corpus.push_back({id, "Finding " + std::string(key),
                              "Records for " + std::string(key) + " concern " + topic +
                                  ". The finding for " + key + " is " + fact + ".",
                              "synthetic"});
      suite.queries.push_back({"What is the finding for " + std::string(key) + " in " + topic + "?", fact});
    } else {
      char resp[32];
      std::snprintf(resp, sizeof resp, "reply%05zu", i);
      suite.queries.push_back({"Tell me a joke about " + word(rng) + " " + key + " please", std::string(resp) + " haha"});
    }
  }

  // Evaluation datasets.
  static const char* const kLetters[] = {"A", "B", "C", "D"};
  static const char* const kYnm[] = {"yes", "no", "maybe"};
  static const char* const kTypes[] = {"PER", "LOC", "CHEM"};
  auto& mcq = suite.datasets[eval::Task::mcq];
  auto& ynm = suite.datasets[eval::Task::yes_no_maybe];
  auto& ner = suite.datasets[eval::Task::ner];
  for (std::size_t i = 0; i < spec.per_task; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "mcq%03zu", i);
    eval::EvalSample m;
    m.id = id;
    m.task = eval::Task::mcq;
    // Even samples read like the retrieval-seeking training queries, odd ones like chit-chat.
    auto lead = [&] {
      return i % 2 == 0 ? "What is the finding for " + word(rng) + " in " + word(rng) + "? "
                        : "Tell me a joke about " + word(rng) + " please. ";
    };
    m.query = lead() + "Which term is linked to " + word(rng) + " " + word(rng) + "?";
    for (const auto* l : kLetters) m.options.push_back({l, word(rng) + " " + word(rng)});
    m.gold_label = kLetters[uniform(rng, 0, 3)];
    mcq.push_back(std::move(m));

    std::snprintf(id, sizeof id, "ynm%03zu", i);
    eval::EvalSample y;
    y.id = id;
    y.task = eval::Task::yes_no_maybe;
    y.query = lead() + "Does " + word(rng) + " affect " + word(rng) + " in " + word(rng) + " trials?";
    y.gold_label = kYnm[uniform(rng, 0, 2)];
    ynm.push_back(std::move(y));

    std::snprintf(id, sizeof id, "ner%03zu", i);
    eval::EvalSample e;
    e.id = id;
    e.task = eval::Task::ner;
    const auto n_ent = uniform(rng, 1, 3);
    std::string text = lead() + capitalized(word(rng));
    for (std::size_t k = 0; k < n_ent; ++k) {
      const auto mention = capitalized(word(rng)) + (uniform(rng, 0, 1) ? " " + capitalized(word(rng)) : "");
      text += " " + word(rng) + " " + mention;
      e.gold_entities.push_back({mention, kTypes[uniform(rng, 0, 2)]});
    }
    e.query = text + ".";
    ner.push_back(std::move(e));
  }
  return suite;
}

namespace {

std::ofstream open_out(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

void write_corpus(const std::string& path, const std::vector<corpus::Document>& docs) {
  auto out = open_out(path);
  for (const auto& d : docs) {
    out << json{{"id", d.id}, {"title", d.title}, {"text", d.text}, {"source", d.source}}.dump() << '\n';
  }
}

void write_dataset(const std::string& path, const std::vector<eval::EvalSample>& rows) {
  auto out = open_out(path);
  for (const auto& s : rows) {
    json j = {{"id", s.id}};
    switch (s.task) {
      case eval::Task::mcq: {
        json opts = json::array();
        for (const auto& o : s.options) opts.push_back({{"letter", o.letter}, {"text", o.text}});
        j["question"] = s.query;
        j["options"] = std::move(opts);
        j["answer"] = s.gold_label;
        break;
      }
      case eval::Task::yes_no_maybe:
        j["question"] = s.query;
        j["answer"] = s.gold_label;
        break;
      case eval::Task::ner: {
        json ents = json::array();
        for (const auto& e : s.gold_entities) ents.push_back({{"mention", e.mention}, {"type", e.type}});
        j["text"] = s.query;
        j["entities"] = std::move(ents);
        break;
      }
    }
    out << j.dump() << '\n';
  }
}

void write_query_pairs(const std::string& path, const std::vector<qclass::QueryResponse>& rows) {
  auto out = open_out(path);
  for (const auto& r : rows) out << json{{"query", r.query}, {"response", r.response}}.dump() << '\n';
}

std::string write_suite(const Suite& suite, const std::string& dir, std::uint64_t seed, double llm_delay_ms) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_corpus((d / "corpus.jsonl").string(), suite.corpus);
  auto dataset = [&](eval::Task t) {
    auto it = suite.datasets.find(t);
    return it == suite.datasets.end() ? std::vector<eval::EvalSample>{} : it->second;
  };
  write_dataset((d / "mcq.jsonl").string(), dataset(eval::Task::mcq));
  write_dataset((d / "ynm.jsonl").string(), dataset(eval::Task::yes_no_maybe));
  write_dataset((d / "ner.jsonl").string(), dataset(eval::Task::ner));
  write_query_pairs((d / "queries.jsonl").string(), suite.queries);

  const auto config = (d / "config.yaml").string();
  auto out = open_out(config);
  out << "seed: " << seed << "\n"
      << "parallelism: 1\n"
      << "paths:\n"
      << "  corpus: corpus.jsonl\n"
      << "  datasets:\n"
      << "    mcq: mcq.jsonl\n"
      << "    ynm: ynm.jsonl\n"
      << "    ner: ner.jsonl\n"
      << "  query_set: queries.jsonl\n"
      << "  index_dir: index\n"
      << "  model_dir: model\n"
      << "  output_dir: eval-out\n"
      << "backends:\n"
      << "  llm:\n"
      << "    kind: mock\n"
      << "    delay_ms: " << llm_delay_ms << "\n"
      << "  embedder:\n"
      << "    kind: mock\n"
      << "    embedding_dim: 64\n"
      << "pipeline:\n"
      << "  chunk_size: 256\n"
      << "  k: 8\n";
  return config;
}

}  // namespace ragbench::fixtures
