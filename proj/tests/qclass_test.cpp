#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "ragbench/error.hpp"
#include "ragbench/qclass.hpp"

namespace ragbench::qclass {
namespace {

namespace fs = std::filesystem;

backend::MockBackend& llm() {
  static backend::MockBackend b([] {
    backend::BackendConfig c;
    c.seed = 1;
    return c;
  }());
  return b;
}

Retriever fixed_docs(std::vector<std::string> texts) {
  return [texts](const std::string&, std::size_t k) {
    std::vector<retrieve::RetrievedDoc> out;
    for (std::size_t i = 0; i < texts.size() && i < k; ++i) out.push_back({"d" + std::to_string(i), texts[i], 1.0, i + 1});
    return out;
  };
}

// Two Gaussian clusters around +-mu along a random direction.
void separable(std::size_t n, std::size_t dim, std::uint64_t seed, FeatureMatrix& x, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  std::vector<double> dir(dim);
  for (auto& d : dir) d = nd(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) row[j] = (label ? 1.0 : -1.0) * dir[j] + nd(rng) * 0.3;
    x.push_back(row);
    y.push_back(label);
  }
}

TEST(Labeling, DocsCoveringResponseGiveLabelOne) {
  const auto row = label_query("Which drug is it?", "aspirin dose", fixed_docs({"aspirin dose is low"}), llm());
  EXPECT_GT(row.l1, row.l0);
  EXPECT_EQ(row.label, 1);
  EXPECT_EQ(row.doc_ids, std::vector<std::string>{"d0"});
}

TEST(Labeling, DisjointDocsGiveLabelZeroAtBoundary) {
  const auto row = label_query("Which drug is it?", "aspirin dose", fixed_docs({"weather report"}), llm());
  EXPECT_DOUBLE_EQ(row.l1, row.l0);
  EXPECT_EQ(row.label, 0);
}

TEST(Labeling, FlippingDocsFlipsLabel) {
  for (const std::string resp : {"alpha", "beta gamma", "delta epsilon zeta"}) {
    EXPECT_EQ(label_query("q?", resp, fixed_docs({resp}), llm()).label, 1);
    EXPECT_EQ(label_query("q?", resp, fixed_docs({"unrelated"}), llm()).label, 0);
  }
}

TEST(Labeling, DatasetKeepsOrderAndCountsFailures) {
  std::vector<QueryResponse> samples = {{"q1", "alpha"}, {"", "beta"}, {"q3", "gamma"}};
  const auto res = label_dataset(samples, fixed_docs({"alpha"}), llm(), 8, 3);
  ASSERT_EQ(res.labeled.size(), 2u);
  EXPECT_EQ(res.skipped, 1u);
  EXPECT_EQ(res.labeled[0].query, "q1");
  EXPECT_EQ(res.labeled[1].query, "q3");
  EXPECT_DOUBLE_EQ(res.positive_rate(), 0.5);
}

TEST(Labeling, LabeledFileRoundTrip) {
  const auto path = (fs::temp_directory_path() / "rb_labeled.jsonl").string();
  const auto rows = label_dataset({{"q1", "alpha"}, {"q2", "beta"}}, fixed_docs({"alpha"}), llm()).labeled;
  write_labeled(path, rows);
  const auto back = read_labeled(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].label, 1);
  EXPECT_EQ(back[1].label, 0);
  EXPECT_EQ(back[0].doc_ids, rows[0].doc_ids);
  fs::remove(path);
}

TEST(Split, DefaultFractionSizes) {
  const auto s = split_sizes(279, SplitSpec{});
  EXPECT_EQ(s.train, 240u);
  EXPECT_EQ(s.dev, 20u);
  EXPECT_EQ(s.test, 19u);
}

TEST(Split, DeterministicPartition) {
  std::vector<int> samples(500);
  for (int i = 0; i < 500; ++i) samples[i] = i;
  SplitSpec spec;
  spec.seed = 9;
  const auto a = split_dataset(samples, spec);
  const auto b = split_dataset(samples, spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  std::vector<int> all = a.train;
  all.insert(all.end(), a.dev.begin(), a.dev.end());
  all.insert(all.end(), a.test.begin(), a.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, samples);
  spec.seed = 10;
  EXPECT_NE(split_dataset(samples, spec).train, a.train);
}

TEST(Split, InvalidSpecs) {
  EXPECT_THROW(split_dataset(std::vector<int>{}, SplitSpec{}), InvalidInputError);
  SplitSpec bad{0.5, 0.5, 0.5, 0};
  EXPECT_THROW(bad.validate(), InvalidInputError);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  FeatureMatrix x;
  std::vector<int> y;
  separable(40, 6, 3, x, y);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    ClassifierModel m;
    m.weights.resize(6);
    for (auto& w : m.weights) w = nd(rng);
    m.bias = nd(rng);
    const double l2 = 1e-2;
    const auto analytic = logistic_gradient(m, x, y, l2);
    std::vector<double> params = m.weights;
    params.push_back(m.bias);
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& p) {
          ClassifierModel q;
          q.weights.assign(p.begin(), p.end() - 1);
          q.bias = p.back();
          return logistic_loss(q, x, y, l2);
        },
        params);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      EXPECT_LE(std::abs(analytic[i] - numeric[i]), 1e-5 * std::max(1.0, std::abs(numeric[i]))) << i;
    }
  }
}

TEST(Logistic, SeparableDataTrainsAndLossDecreases) {
  FeatureMatrix x, xd;
  std::vector<int> y, yd;
  separable(200, 16, 5, x, y);
  separable(40, 16, 6, xd, yd);
  const auto res = train_logistic(x, y, xd, yd);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) correct += (res.model.probability(x[i]) >= 0.5) == (y[i] == 1);
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(x.size()), 0.95);
  ASSERT_EQ(res.loss_history.size(), 501u);
  for (std::size_t i = 1; i < res.loss_history.size(); ++i) {
    EXPECT_LE(res.loss_history[i], res.loss_history[i - 1] + 1e-9);
  }
  EXPECT_EQ(res.best_epoch % 10, 0u);
}

TEST(Logistic, ZeroModelGivesHalf) {
  ClassifierModel m;
  m.weights.assign(3, 0.0);
  EXPECT_DOUBLE_EQ(m.probability({1, 2, 3}), 0.5);
  EXPECT_THROW(m.probability({1}), InvalidInputError);
}

TEST(Logistic, SingleClassIsDegenerate) {
  EXPECT_THROW(train_logistic({{1.0}, {2.0}}, {1, 1}, {}, {}), DegenerateDataError);
}

TEST(Classify, ThresholdBoundaryAndMonotonicity) {
  ClassifierModel m;
  m.weights.assign(64, 0.0);
  const auto d = classify(m, "any query", llm());
  EXPECT_TRUE(d.need_rag);  // prob 0.5 >= 0.5
  EXPECT_DOUBLE_EQ(d.prob, 0.5);
  m.weights[0] = 0.7;
  m.bias = -0.1;
  bool was_negative = false;
  for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    m.threshold = t;
    const bool pos = classify(m, "query text", llm()).need_rag;
    EXPECT_FALSE(was_negative && pos);
    was_negative = was_negative || !pos;
  }
}

TEST(Classify, TrainedOnEmbeddings) {
  std::vector<LabeledQuery> rows;
  for (int i = 0; i < 60; ++i) {
    LabeledQuery r;
    r.label = i % 2;
    r.query = r.label ? "what is the finding for key" + std::to_string(i) : "tell me a joke about cats " + std::to_string(i);
    rows.push_back(r);
  }
  const auto res = train_classifier(rows, {}, llm());
  EXPECT_TRUE(classify(res.model, "what is the finding for key999", llm()).need_rag);
  EXPECT_FALSE(classify(res.model, "tell me a joke about cats 999", llm()).need_rag);
  const auto metrics = evaluate_classifier(res.model, rows, llm());
  EXPECT_DOUBLE_EQ(metrics.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(metrics.f1, 1.0);
}

TEST(Metrics, ConfusionArithmetic) {
  const auto m = score_predictions({1, 1, 0, 0}, {1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
  EXPECT_THROW(score_predictions({1}, {}), InvalidInputError);
}

TEST(Model, SaveLoad) {
  ClassifierModel m{{0.5, -1.25}, 0.75, 0.4};
  const auto path = (fs::temp_directory_path() / "rb_model.json").string();
  m.save(path);
  const auto back = ClassifierModel::load(path);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.threshold, m.threshold);
  fs::remove(path);
  EXPECT_THROW(ClassifierModel::load(path), ConfigError);
}

TEST(Classifiers, ConstantAndLinear) {
  EXPECT_FALSE(ConstantClassifier(false).decide("x").need_rag);
  EXPECT_TRUE(ConstantClassifier(true).decide("x").need_rag);
  EXPECT_THROW(LinearQueryClassifier({}, nullptr), ConfigError);
}

}  // namespace
}  // namespace ragbench::qclass
