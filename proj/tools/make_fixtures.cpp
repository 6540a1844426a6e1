// Writes a synthetic corpus, evaluation datasets, a labeling query set and a
// mock-backend config.yaml, ready for `ragbench --config <dir>/config.yaml ...`.

#include <CLI11.hpp>
#include <iostream>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate synthetic ragbench fixtures", "make_fixtures"};
  std::string out_dir;
  ragbench::fixtures::SuiteSpec spec;
  double delay_ms = 0.0;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--docs", spec.background_docs, "Background documents");
  app.add_option("--per-task", spec.per_task, "Samples per evaluation task");
  app.add_option("--queries", spec.queries, "Query/response pairs for labeling");
  app.add_option("--positive-rate", spec.positive_rate, "Fraction of queries engineered to need retrieval");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--llm-delay-ms", delay_ms, "Synthetic per-call delay of the mock LLM");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    const auto suite = ragbench::fixtures::make_suite(spec);
    const auto config = ragbench::fixtures::write_suite(suite, out_dir, spec.seed, delay_ms);
    std::cout << "corpus: " << suite.corpus.size() << " documents, queries: " << suite.queries.size()
              << " (engineered positive rate " << suite.engineered_rate() << ")\n"
              << "config: " << config << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
