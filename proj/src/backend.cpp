#include "ragbench/backend.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <thread>
#include <unordered_set>

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench::backend {

using json = nlohmann::json;

void BackendConfig::validate() const {
  if (beam_width < 1) throw ConfigError("backend: beam_width must be >= 1");
  if (timeout_ms <= 0) throw ConfigError("backend: timeout_ms must be > 0");
  if (max_retries < 0) throw ConfigError("backend: max_retries must be >= 0");
  if (max_new_tokens < 1) throw ConfigError("backend: max_new_tokens must be >= 1");
  if (embedding_dim < 1) throw ConfigError("backend: embedding_dim must be >= 1");
  if (delay_ms < 0) throw ConfigError("backend: delay_ms must be >= 0");
  if (kind == BackendKind::http && endpoint.empty()) {
    throw ConfigError("backend: http backend requires an endpoint");
  }
}

std::string to_string(BackendKind kind) { return kind == BackendKind::http ? "http" : "mock"; }

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "http") return BackendKind::http;
  if (s == "mock") return BackendKind::mock;
  throw ConfigError("unknown backend kind '" + s + "'");
}

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
  if (raw.empty()) throw InvalidInputError("embedding: empty vector");
  double sq = 0.0;
  for (float v : raw) sq += static_cast<double>(v) * v;
  if (!(sq > 0.0) || !std::isfinite(sq)) throw InvalidInputError("embedding: zero or non-finite vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& v : raw) v = static_cast<float>(v * inv);
  return EmbeddingVector{std::move(raw)};
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw InvalidInputError("cosine: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += static_cast<double>(a.values[i]) * b.values[i];
  return dot;
}

// ---------------------------------------------------------------------------
// Backend (validation, counting, timing)
// ---------------------------------------------------------------------------

Backend::Backend(BackendConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

GenerationResult Backend::generate(const std::string& prompt) const {
  if (prompt.empty()) throw InvalidInputError("generate: prompt must be non-empty");
  generate_calls_.fetch_add(1, std::memory_order_relaxed);
  const auto start = std::chrono::steady_clock::now();
  GenerationResult out;
  out.text = do_generate(prompt);
  out.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double Backend::log_likelihood(const std::string& continuation, const std::string& context) const {
  if (continuation.empty()) throw InvalidInputError("log_likelihood: continuation must be non-empty");
  log_likelihood_calls_.fetch_add(1, std::memory_order_relaxed);
  return do_log_likelihood(continuation, context);
}

std::vector<EmbeddingVector> Backend::embed_batch(const std::vector<std::string>& texts) const {
  if (texts.empty()) throw InvalidInputError("embed_batch: empty input list");
  for (const auto& t : texts) {
    if (t.empty()) throw InvalidInputError("embed_batch: empty text element");
  }
  embed_calls_.fetch_add(1, std::memory_order_relaxed);
  auto out = do_embed_batch(texts);
  if (out.size() != texts.size()) {
    throw BackendUnavailableError("embed_batch: backend returned " + std::to_string(out.size()) +
                                  " vectors for " + std::to_string(texts.size()) + " inputs");
  }
  return out;
}

CallStats Backend::stats() const noexcept {
  return {generate_calls_.load(), log_likelihood_calls_.load(), embed_calls_.load()};
}

// ---------------------------------------------------------------------------
// MockBackend
// ---------------------------------------------------------------------------

MockBackend::MockBackend(BackendConfig cfg) : Backend(std::move(cfg)) {}

void MockBackend::pause_and_check() const {
  if (cfg_.delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(cfg_.delay_ms));
  }
  if (cfg_.simulate_outage) throw BackendUnavailableError("mock backend: simulated outage");
}

std::string MockBackend::do_generate(const std::string& prompt) const {
  pause_and_check();
  const auto& table = cfg_.response_table;
  if (auto it = table.find(prompt); it != table.end()) return it->second;

  // Longest key that prefixes the prompt.
  const std::string* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& [key, value] : table) {
    if (key.size() > best_len && key.size() <= prompt.size() &&
        prompt.compare(0, key.size(), key) == 0) {
      best = &value;
      best_len = key.size();
    }
  }
  if (best != nullptr) return *best;

  const auto tokens = text::tokenize(prompt);
  const std::size_t from = tokens.size() > 16 ? tokens.size() - 16 : 0;
  std::string echo;
  for (std::size_t i = from; i < tokens.size(); ++i) {
    if (!echo.empty()) echo += ' ';
    echo += tokens[i];
  }
  echo += " #";
  echo += text::hex64(text::fnv1a(prompt, static_cast<std::uint64_t>(cfg_.seed)));
  return echo;
}

double MockBackend::do_log_likelihood(const std::string& continuation,
                                      const std::string& context) const {
  pause_and_check();
  const auto ctx_tokens = text::tokenize_lower(context);
  const std::unordered_set<std::string> present(ctx_tokens.begin(), ctx_tokens.end());
  double total = 0.0;
  for (const auto& tok : text::tokenize_lower(continuation)) {
    total += present.contains(tok) ? -0.1 : -1.0;
  }
  return total;
}

std::vector<EmbeddingVector> MockBackend::do_embed_batch(
    const std::vector<std::string>& texts) const {
  pause_and_check();
  const auto seed = static_cast<std::uint64_t>(cfg_.seed);
  const std::size_t dim = cfg_.embedding_dim;
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<float> counts(dim, 0.0f);
    const auto tokens = text::tokenize_lower(t);
    if (tokens.empty()) {
      counts[text::fnv1a(t, seed) % dim] = 1.0f;  // whitespace-only text
    }
    for (const auto& tok : tokens) counts[text::fnv1a(tok, seed) % dim] += 1.0f;
    out.push_back(EmbeddingVector::normalized(std::move(counts)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

namespace {

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_endpoint(std::string endpoint) {
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend: endpoint must include a scheme: " + endpoint);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig cfg) : Backend(std::move(cfg)) {
  std::tie(scheme_host_port_, path_prefix_) = split_endpoint(cfg_.endpoint);
}

std::string HttpBackend::post_json(const std::string& path, const std::string& body) const {
  const int attempts = 1 + cfg_.max_retries;
  std::string last_error;
  auto backoff = std::chrono::milliseconds(250);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path_prefix_ + path, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    return res->body;
  }
  throw BackendUnavailableError("backend " + cfg_.endpoint + path + " unavailable after " +
                                std::to_string(attempts) + " attempt(s): " + last_error);
}

std::string HttpBackend::do_generate(const std::string& prompt) const {
  json req = {{"model", cfg_.model_name},
              {"prompt", prompt},
              {"max_tokens", cfg_.max_new_tokens},
              {"temperature", 0},
              {"n", 1},
              {"best_of", cfg_.beam_width},
              {"use_beam_search", cfg_.beam_width > 1}};
  const auto body = post_json("/v1/completions", req.dump());
  try {
    const auto res = json::parse(body);
    return res.at("choices").at(0).at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendUnavailableError(std::string("completion response malformed: ") + e.what());
  }
}

double HttpBackend::do_log_likelihood(const std::string& continuation,
                                      const std::string& context) const {
  const std::string full = context + continuation;
  json req = {{"model", cfg_.model_name}, {"prompt", full}, {"max_tokens", 1},
              {"temperature", 0},         {"echo", true},   {"logprobs", 1}};
  const auto body = post_json("/v1/completions", req.dump());
  json logprobs;
  try {
    logprobs = json::parse(body).at("choices").at(0).value("logprobs", json());
  } catch (const json::exception& e) {
    throw BackendUnavailableError(std::string("completion response malformed: ") + e.what());
  }
  if (!logprobs.is_object() || !logprobs.contains("token_logprobs") ||
      !logprobs.contains("text_offset")) {
    throw UnsupportedError("backend " + cfg_.endpoint + " does not echo token logprobs");
  }
  const auto& lps = logprobs.at("token_logprobs");
  const auto& offsets = logprobs.at("text_offset");
  if (lps.size() != offsets.size()) throw BackendUnavailableError("logprobs/offsets length mismatch");
  // Tokens are attributed to the continuation by their character offset;
  // anything past the echoed prompt is the generated token and is skipped.
  double total = 0.0;
  for (std::size_t i = 0; i < lps.size(); ++i) {
    const auto off = offsets[i].get<std::size_t>();
    if (off < context.size() || off >= full.size()) continue;
    if (lps[i].is_null()) throw UnsupportedError("backend returned null logprob inside continuation");
    total += lps[i].get<double>();
  }
  return total;
}

std::vector<EmbeddingVector> HttpBackend::do_embed_batch(
    const std::vector<std::string>& texts) const {
  json req = {{"model", cfg_.model_name}, {"input", texts}};
  const auto body = post_json("/v1/embeddings", req.dump());
  std::vector<EmbeddingVector> out(texts.size());
  try {
    const auto res = json::parse(body);
    const auto& data = res.at("data");
    if (data.size() != texts.size()) {
      throw BackendUnavailableError("embedding response has " + std::to_string(data.size()) +
                                    " items for " + std::to_string(texts.size()) + " inputs");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto idx = data[i].value("index", i);
      if (idx >= out.size()) throw BackendUnavailableError("embedding index out of range");
      out[idx] = EmbeddingVector::normalized(data[i].at("embedding").get<std::vector<float>>());
    }
  } catch (const json::exception& e) {
    throw BackendUnavailableError(std::string("embedding response malformed: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<Backend> make_backend(BackendConfig cfg) {
  if (cfg.kind == BackendKind::http) {
    if (const char* env = std::getenv(kEndpointEnvVar); env != nullptr && *env != '\0') {
      cfg.endpoint = env;
    }
    return std::make_shared<HttpBackend>(std::move(cfg));
  }
  return std::make_shared<MockBackend>(std::move(cfg));
}

std::map<std::string, std::string> load_response_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open response table '" + path + "'");
  try {
    const auto doc = json::parse(in);
    if (!doc.is_object()) throw ParseError("response table must be a JSON object: " + path);
    return doc.get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw ParseError("response table '" + path + "': " + e.what());
  }
}

}  // namespace ragbench::backend
