#include "ragbench/qclass.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <random>

#include "ragbench/generate.hpp"
#include "ragbench/parallel.hpp"

namespace ragbench::qclass {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Labeling
// ---------------------------------------------------------------------------

Retriever hybrid_retriever(const retrieve::IndexSet& indexes, const backend::Backend& embedder,
                           bool expand_small2big) {
  return [&indexes, &embedder, expand_small2big](const std::string& query, std::size_t k) {
    retrieve::RetrievalConfig cfg;
    cfg.k = k;
    cfg.index_kind = retrieve::IndexKind::hybrid;
    cfg.expand_small2big = expand_small2big;
    return retrieve::retrieve(query, cfg, indexes, &embedder);
  };
}

LabeledQuery label_query(const std::string& query, const std::string& response,
                         const Retriever& retriever, const backend::Backend& llm, std::size_t k) {
  if (query.empty()) throw InvalidInputError("label_query: query must be non-empty");
  LabeledQuery out;
  out.query = query;
  out.response = response;
  const auto docs = retriever(query, k);
  for (const auto& d : docs) out.doc_ids.push_back(d.chunk_id);
  using generate::Prompting;
  out.l0 = llm.log_likelihood(response, generate::build_prompt(query, {}, Prompting::direct_answer));
  out.l1 = llm.log_likelihood(response, generate::build_prompt(query, docs, Prompting::direct_answer));
  out.label = out.l1 - out.l0 > 0.0 ? 1 : 0;
  return out;
}

double LabelingResult::positive_rate() const {
  if (labeled.empty()) return 0.0;
  std::size_t pos = 0;
  for (const auto& row : labeled) pos += row.label == 1 ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(labeled.size());
}

LabelingResult label_dataset(const std::vector<QueryResponse>& samples, const Retriever& retriever,
                             const backend::Backend& llm, std::size_t k, std::size_t parallelism) {
  std::vector<std::optional<LabeledQuery>> slots(samples.size());
  std::vector<std::string> slot_errors(samples.size());
  parallel_for(samples.size(), parallelism, [&](std::size_t i) {
    try {
      slots[i] = label_query(samples[i].query, samples[i].response, retriever, llm, k);
    } catch (const Error& e) {
      slot_errors[i] = "sample " + std::to_string(i) + ": " + e.what();
    }
  });
  LabelingResult out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      out.labeled.push_back(std::move(*slots[i]));
    } else {
      ++out.skipped;
      out.errors.push_back(std::move(slot_errors[i]));
    }
  }
  return out;
}

std::vector<QueryResponse> read_query_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open query set '" + path + "'");
  std::vector<QueryResponse> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      out.push_back({obj.at("query").get<std::string>(), obj.at("response").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

void write_labeled(const std::string& path, const std::vector<LabeledQuery>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write labeled dataset '" + path + "'");
  for (const auto& r : rows) {
    out << json{{"query", r.query}, {"response", r.response}, {"l0", r.l0},
                {"l1", r.l1},       {"label", r.label},       {"doc_ids", r.doc_ids}}
               .dump()
        << '\n';
  }
}

std::vector<LabeledQuery> read_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open labeled dataset '" + path + "'");
  std::vector<LabeledQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      LabeledQuery r;
      r.query = obj.at("query").get<std::string>();
      r.response = obj.at("response").get<std::string>();
      r.l0 = obj.at("l0").get<double>();
      r.l1 = obj.at("l1").get<double>();
      r.label = obj.at("label").get<int>();
      r.doc_ids = obj.value("doc_ids", std::vector<std::string>{});
      if (r.label != 0 && r.label != 1) throw ParseError("label must be 0 or 1", line_no);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
  if (!(train_frac > 0 && dev_frac > 0 && test_frac > 0)) {
    throw InvalidInputError("split: fractions must be positive");
  }
  if (std::abs(train_frac + dev_frac + test_frac - 1.0) > 1e-9) {
    throw InvalidInputError("split: fractions must sum to 1");
  }
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  // Rejection sampling keeps the draw uniform and independent of the
  // standard library's distribution implementation.
  auto bounded = [&rng](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do r = rng(); while (r >= limit);
    return r % bound;
  };
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[bounded(i)]);
  return perm;
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  const double dn = static_cast<double>(n);
  SplitSizes s;
  s.train = static_cast<std::size_t>(std::floor(dn * spec.train_frac + 1e-9));
  s.dev = static_cast<std::size_t>(std::floor(dn * spec.dev_frac + 1e-9));
  s.train = std::min(s.train, n);
  s.dev = std::min(s.dev, n - s.train);
  s.test = n - s.train - s.dev;
  return s;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

namespace {

double dot_plus_bias(const ClassifierModel& m, const std::vector<double>& x) {
  double z = m.bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += m.weights[i] * x[i];
  return z;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_shapes(const ClassifierModel& m, const FeatureMatrix& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw InvalidInputError("logistic: features/labels length mismatch");
  for (const auto& row : x) {
    if (row.size() != m.dim()) throw InvalidInputError("logistic: feature dimension mismatch");
  }
}

double accuracy_of(const ClassifierModel& m, const FeatureMatrix& x, const std::vector<int>& y) {
  if (x.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int pred = m.probability(x[i]) >= m.threshold ? 1 : 0;
    correct += pred == y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(x.size());
}

}  // namespace

double ClassifierModel::probability(const std::vector<double>& x) const {
  if (x.size() != weights.size()) {
    throw InvalidInputError("classifier: feature dimension " + std::to_string(x.size()) +
                            " does not match model dimension " + std::to_string(weights.size()));
  }
  return sigmoid(dot_plus_bias(*this, x));
}

void ClassifierModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write classifier model '" + path + "'");
  out << json{{"dim", dim()}, {"weights", weights}, {"bias", bias}, {"threshold", threshold}}.dump(1)
      << '\n';
}

ClassifierModel ClassifierModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing classifier model '" + path + "'");
  try {
    const auto obj = json::parse(in);
    ClassifierModel m;
    m.weights = obj.at("weights").get<std::vector<double>>();
    m.bias = obj.at("bias").get<double>();
    m.threshold = obj.at("threshold").get<double>();
    if (obj.at("dim").get<std::size_t>() != m.weights.size()) {
      throw DataIntegrityError("classifier model '" + path + "': dim does not match weights");
    }
    if (!(m.threshold > 0.0 && m.threshold < 1.0)) {
      throw DataIntegrityError("classifier model '" + path + "': threshold must be in (0, 1)");
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError("classifier model '" + path + "': " + e.what());
  }
}

double logistic_loss(const ClassifierModel& m, const FeatureMatrix& x, const std::vector<int>& y,
                     double l2) {
  check_shapes(m, x, y);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = dot_plus_bias(m, x[i]);
    total += softplus(z) - (y[i] == 1 ? z : 0.0);
  }
  double reg = 0.0;
  for (double w : m.weights) reg += w * w;
  return (x.empty() ? 0.0 : total / static_cast<double>(x.size())) + 0.5 * l2 * reg;
}

std::vector<double> logistic_gradient(const ClassifierModel& m, const FeatureMatrix& x,
                                      const std::vector<int>& y, double l2) {
  check_shapes(m, x, y);
  const std::size_t d = m.dim();
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double err = sigmoid(dot_plus_bias(m, x[i])) - (y[i] == 1 ? 1.0 : 0.0);
    for (std::size_t j = 0; j < d; ++j) g[j] += err * x[i][j];
    g[d] += err;
  }
  const double inv_n = x.empty() ? 0.0 : 1.0 / static_cast<double>(x.size());
  for (std::size_t j = 0; j < d; ++j) g[j] = g[j] * inv_n + l2 * m.weights[j];
  g[d] *= inv_n;
  return g;
}

TrainResult train_logistic(const FeatureMatrix& x_train, const std::vector<int>& y_train,
                           const FeatureMatrix& x_dev, const std::vector<int>& y_dev,
                           const TrainConfig& cfg) {
  if (x_train.empty()) throw InvalidInputError("train: empty training set");
  if (cfg.eval_every == 0) throw InvalidInputError("train: eval_every must be positive");
  bool has_pos = false, has_neg = false;
  for (int label : y_train) (label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DegenerateDataError("train: training set contains a single class");

  ClassifierModel m;
  m.weights.assign(x_train.front().size(), 0.0);
  m.threshold = cfg.threshold;
  check_shapes(m, x_train, y_train);
  const bool use_dev = !x_dev.empty();
  if (use_dev) check_shapes(m, x_dev, y_dev);

  TrainResult out;
  out.model = m;
  out.best_dev_accuracy = -1.0;
  auto evaluate = [&](std::size_t epoch) {
    const double acc = use_dev ? accuracy_of(m, x_dev, y_dev) : accuracy_of(m, x_train, y_train);
    if (acc >= out.best_dev_accuracy) {
      out.best_dev_accuracy = acc;
      out.best_epoch = epoch;
      out.model = m;
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    out.loss_history.push_back(logistic_loss(m, x_train, y_train, cfg.l2));
    const auto g = logistic_gradient(m, x_train, y_train, cfg.l2);
    for (std::size_t j = 0; j < m.dim(); ++j) m.weights[j] -= cfg.learning_rate * g[j];
    m.bias -= cfg.learning_rate * g.back();
    if ((epoch + 1) % cfg.eval_every == 0) evaluate(epoch + 1);
  }
  out.loss_history.push_back(logistic_loss(m, x_train, y_train, cfg.l2));
  if (out.best_dev_accuracy < 0.0) evaluate(cfg.max_epochs);
  return out;
}

FeatureMatrix embed_queries(const std::vector<LabeledQuery>& rows, const backend::Backend& embedder) {
  FeatureMatrix x;
  constexpr std::size_t kBatch = 64;
  for (std::size_t start = 0; start < rows.size(); start += kBatch) {
    std::vector<std::string> texts;
    for (std::size_t i = start; i < std::min(rows.size(), start + kBatch); ++i) texts.push_back(rows[i].query);
    for (const auto& v : embedder.embed_batch(texts)) x.emplace_back(v.values.begin(), v.values.end());
  }
  return x;
}

TrainResult train_classifier(const std::vector<LabeledQuery>& train,
                             const std::vector<LabeledQuery>& dev, const backend::Backend& embedder,
                             const TrainConfig& cfg) {
  if (train.empty()) throw InvalidInputError("train_classifier: empty training set");
  auto labels = [](const std::vector<LabeledQuery>& rows) {
    std::vector<int> y;
    for (const auto& r : rows) y.push_back(r.label);
    return y;
  };
  return train_logistic(embed_queries(train, embedder), labels(train),
                        dev.empty() ? FeatureMatrix{} : embed_queries(dev, embedder), labels(dev), cfg);
}

Decision classify(const ClassifierModel& model, const std::string& query,
                  const backend::Backend& embedder) {
  const auto v = embedder.embed_batch({query}).front();
  const double p = model.probability(std::vector<double>(v.values.begin(), v.values.end()));
  return {p >= model.threshold, p};
}

ClassifierMetrics score_predictions(const std::vector<int>& predicted, const std::vector<int>& gold) {
  if (predicted.size() != gold.size()) throw InvalidInputError("score_predictions: length mismatch");
  ClassifierMetrics m;
  if (gold.empty()) return m;
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    correct += predicted[i] == gold[i] ? 1 : 0;
    if (predicted[i] == 1 && gold[i] == 1) ++tp;
    if (predicted[i] == 1 && gold[i] != 1) ++fp;
    if (predicted[i] != 1 && gold[i] == 1) ++fn;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

ClassifierMetrics evaluate_classifier(const ClassifierModel& model, const std::vector<LabeledQuery>& test,
                                      const backend::Backend& embedder) {
  if (test.empty()) throw InvalidInputError("evaluate_classifier: empty test set");
  const auto x = embed_queries(test, embedder);
  std::vector<int> pred, gold;
  for (std::size_t i = 0; i < test.size(); ++i) {
    pred.push_back(model.probability(x[i]) >= model.threshold ? 1 : 0);
    gold.push_back(test[i].label);
  }
  return score_predictions(pred, gold);
}

LinearQueryClassifier::LinearQueryClassifier(ClassifierModel model,
                                             std::shared_ptr<const backend::Backend> embedder)
    : model_(std::move(model)), embedder_(std::move(embedder)) {
  if (!embedder_) throw ConfigError("linear classifier requires an embedder");
}

Decision LinearQueryClassifier::decide(const std::string& query) const {
  return classify(model_, query, *embedder_);
}

}  // namespace ragbench::qclass
