#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ragbench::backend {

enum class BackendKind { http, mock };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string endpoint;  // http only, e.g. "http://localhost:8000"
  std::string model_name = "mock";
  int timeout_ms = 60000;
  int max_retries = 2;
  int beam_width = 3;
  int max_new_tokens = 256;
  std::int64_t seed = 0;

  // Mock-only knobs.
  std::size_t embedding_dim = 64;
  double delay_ms = 0.0;                              // synthetic per-call latency
  std::map<std::string, std::string> response_table;  // prompt prefix -> response
  bool simulate_outage = false;                       // every call fails as unavailable

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

struct GenerationResult {
  std::string text;
  double latency_s = 0.0;
};

/// Unit-norm embedding. Construct through `EmbeddingVector::normalized`.
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const noexcept { return values.size(); }

  /// L2-normalizes `raw`; throws InvalidInputError on an empty or zero vector.
  static EmbeddingVector normalized(std::vector<float> raw);
};

/// Dot product computed in double precision; equals cosine for unit vectors.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct CallStats {
  std::uint64_t generate_calls = 0;
  std::uint64_t log_likelihood_calls = 0;
  std::uint64_t embed_calls = 0;
};

/// Model-inference interface. Implementations are immutable after
/// construction and safe to call concurrently; the only mutable state is
/// the call counters.
class Backend {
 public:
  explicit Backend(BackendConfig cfg);
  virtual ~Backend() = default;
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  GenerationResult generate(const std::string& prompt) const;

  /// Sum of natural-log token probabilities of `continuation` given `context`.
  double log_likelihood(const std::string& continuation, const std::string& context) const;

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const;

  const BackendConfig& config() const noexcept { return cfg_; }
  CallStats stats() const noexcept;

 protected:
  virtual std::string do_generate(const std::string& prompt) const = 0;
  virtual double do_log_likelihood(const std::string& continuation,
                                   const std::string& context) const = 0;
  virtual std::vector<EmbeddingVector> do_embed_batch(
      const std::vector<std::string>& texts) const = 0;

  BackendConfig cfg_;

 private:
  mutable std::atomic<std::uint64_t> generate_calls_{0};
  mutable std::atomic<std::uint64_t> log_likelihood_calls_{0};
  mutable std::atomic<std::uint64_t> embed_calls_{0};
};

/// Deterministic stand-in for a model server.
///
/// generate: exact key hit in the response table, else the longest key that
/// is a prefix of the prompt, else an echo of the prompt's last 16 tokens
/// tagged with a seeded digest of the whole prompt.
/// log_likelihood: each (lowercased) continuation token scores -0.1 when it
/// occurs in the context and -1.0 otherwise.
/// embed: tokens hashed into `embedding_dim` buckets, counts L2-normalized.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(BackendConfig cfg);

 protected:
  std::string do_generate(const std::string& prompt) const override;
  double do_log_likelihood(const std::string& continuation,
                           const std::string& context) const override;
  std::vector<EmbeddingVector> do_embed_batch(
      const std::vector<std::string>& texts) const override;

 private:
  void pause_and_check() const;
};

/// Client for OpenAI-compatible servers: POST {endpoint}/v1/completions and
/// {endpoint}/v1/embeddings. Log-likelihood relies on `echo` + `logprobs`.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig cfg);

 protected:
  std::string do_generate(const std::string& prompt) const override;
  double do_log_likelihood(const std::string& continuation,
                           const std::string& context) const override;
  std::vector<EmbeddingVector> do_embed_batch(
      const std::vector<std::string>& texts) const override;

 private:
  std::string post_json(const std::string& path, const std::string& body) const;

  std::string scheme_host_port_;
  std::string path_prefix_;
};

/// Applies the RAGBENCH_BACKEND_ENDPOINT override (http kind only) and builds the backend.
std::shared_ptr<Backend> make_backend(BackendConfig cfg);

/// Reads a JSON object {prompt-prefix: response} from disk.
std::map<std::string, std::string> load_response_table(const std::string& path);

inline constexpr const char* kEndpointEnvVar = "RAGBENCH_BACKEND_ENDPOINT";

}  // namespace ragbench::backend
