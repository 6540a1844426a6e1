#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ragbench/backend.hpp"
#include "ragbench/error.hpp"
#include "ragbench/retrieve.hpp"

namespace ragbench::qclass {

/// A query/response pair labeled by the log-likelihood gain from retrieval.
/// label == 1 ("need RAG") iff l1 - l0 > 0.
struct LabeledQuery {
  std::string query;
  std::string response;
  double l0 = 0.0;  // LLL(response | query)
  double l1 = 0.0;  // LLL(response | query, docs)
  int label = 0;
  std::vector<std::string> doc_ids;
};

struct QueryResponse {
  std::string query;
  std::string response;
};

using Retriever = std::function<std::vector<retrieve::RetrievedDoc>(const std::string&, std::size_t)>;

/// Hybrid retrieval over `indexes`; the returned callable keeps references.
Retriever hybrid_retriever(const retrieve::IndexSet& indexes, const backend::Backend& embedder,
                           bool expand_small2big);

LabeledQuery label_query(const std::string& query, const std::string& response,
                         const Retriever& retriever, const backend::Backend& llm, std::size_t k = 8);

struct LabelingResult {
  std::vector<LabeledQuery> labeled;
  std::size_t skipped = 0;
  std::vector<std::string> errors;  // one entry per skipped sample

  double positive_rate() const;
};

/// Labels samples on a bounded worker pool; output keeps input order and
/// failed samples are skipped and counted.
LabelingResult label_dataset(const std::vector<QueryResponse>& samples, const Retriever& retriever,
                             const backend::Backend& llm, std::size_t k = 8,
                             std::size_t parallelism = 1);

std::vector<QueryResponse> read_query_pairs(const std::string& path);
void write_labeled(const std::string& path, const std::vector<LabeledQuery>& rows);
std::vector<LabeledQuery> read_labeled(const std::string& path);

struct SplitSpec {
  double train_frac = 24.0 / 27.9;
  double dev_frac = 2.0 / 27.9;
  double test_frac = 1.9 / 27.9;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Sizes: floor(n * train_frac), floor(n * dev_frac), remainder to test.
struct SplitSizes {
  std::size_t train = 0, dev = 0, test = 0;
};
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

template <typename T>
struct DatasetSplit {
  std::vector<T> train, dev, test;
};

/// Seeded shuffle, then contiguous train/dev/test slices.
template <typename T>
DatasetSplit<T> split_dataset(const std::vector<T>& samples, const SplitSpec& spec);

struct ClassifierModel {
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.5;

  std::size_t dim() const noexcept { return weights.size(); }
  /// sigmoid(w . x + b); throws InvalidInputError on dimension mismatch.
  double probability(const std::vector<double>& x) const;

  void save(const std::string& path) const;
  static ClassifierModel load(const std::string& path);
};

struct TrainConfig {
  double learning_rate = 0.1;
  double l2 = 1e-4;
  std::size_t max_epochs = 500;
  std::size_t eval_every = 10;
  double threshold = 0.5;
};

using FeatureMatrix = std::vector<std::vector<double>>;

/// Mean binary cross-entropy plus (l2 / 2) * |w|^2; the bias is not penalized.
double logistic_loss(const ClassifierModel& m, const FeatureMatrix& x, const std::vector<int>& y,
                     double l2);
/// Gradient of logistic_loss: dim weight entries followed by the bias entry.
std::vector<double> logistic_gradient(const ClassifierModel& m, const FeatureMatrix& x,
                                      const std::vector<int>& y, double l2);

struct TrainResult {
  ClassifierModel model;
  std::vector<double> loss_history;  // training loss before each epoch, plus the final loss
  double best_dev_accuracy = 0.0;
  std::size_t best_epoch = 0;
};

/// Full-batch gradient descent from zero weights, evaluating on dev every
/// `eval_every` epochs and returning the best-dev-accuracy snapshot (latest
/// on ties, which has the lower training loss). An empty dev set falls back
/// to training accuracy.
TrainResult train_logistic(const FeatureMatrix& x_train, const std::vector<int>& y_train,
                           const FeatureMatrix& x_dev, const std::vector<int>& y_dev,
                           const TrainConfig& cfg = {});

FeatureMatrix embed_queries(const std::vector<LabeledQuery>& rows, const backend::Backend& embedder);

/// Throws DegenerateDataError when the training set lacks one of the labels.
TrainResult train_classifier(const std::vector<LabeledQuery>& train,
                             const std::vector<LabeledQuery>& dev, const backend::Backend& embedder,
                             const TrainConfig& cfg = {});

struct Decision {
  bool need_rag = true;
  double prob = 0.5;
};

/// need_rag = prob >= threshold.
Decision classify(const ClassifierModel& model, const std::string& query,
                  const backend::Backend& embedder);

struct ClassifierMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // positive ("need RAG") class
};

ClassifierMetrics score_predictions(const std::vector<int>& predicted, const std::vector<int>& gold);
ClassifierMetrics evaluate_classifier(const ClassifierModel& model, const std::vector<LabeledQuery>& test,
                                      const backend::Backend& embedder);

/// Decides per query whether retrieval is needed.
class QueryClassifier {
 public:
  virtual ~QueryClassifier() = default;
  virtual Decision decide(const std::string& query) const = 0;
};

class LinearQueryClassifier final : public QueryClassifier {
 public:
  LinearQueryClassifier(ClassifierModel model, std::shared_ptr<const backend::Backend> embedder);
  Decision decide(const std::string& query) const override;
  const ClassifierModel& model() const noexcept { return model_; }

 private:
  ClassifierModel model_;
  std::shared_ptr<const backend::Backend> embedder_;
};

/// Returns the same decision for every query.
class ConstantClassifier final : public QueryClassifier {
 public:
  explicit ConstantClassifier(bool need_rag) : need_rag_(need_rag) {}
  Decision decide(const std::string&) const override { return {need_rag_, need_rag_ ? 1.0 : 0.0}; }

 private:
  bool need_rag_;
};

// ---------------------------------------------------------------------------

template <typename T>
DatasetSplit<T> split_dataset(const std::vector<T>& samples, const SplitSpec& spec) {
  spec.validate();
  if (samples.empty()) throw InvalidInputError("split_dataset: empty input");
  const auto sizes = split_sizes(samples.size(), spec);
  const auto perm = seeded_permutation(samples.size(), spec.seed);
  DatasetSplit<T> out;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    auto& dst = i < sizes.train ? out.train : (i < sizes.train + sizes.dev ? out.dev : out.test);
    dst.push_back(samples[perm[i]]);
  }
  return out;
}

}  // namespace ragbench::qclass
