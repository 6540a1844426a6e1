#include "ragbench/corpus.hpp"

#include <array>
#include <fstream>
#include <json.hpp>
#include <unordered_set>

#include "ragbench/error.hpp"
#include "ragbench/parallel.hpp"
#include "ragbench/text.hpp"

namespace ragbench::corpus {

using json = nlohmann::json;

std::string to_string(ChunkStrategy s) {
  switch (s) {
    case ChunkStrategy::vanilla: return "vanilla";
    case ChunkStrategy::small2big: return "small2big";
    case ChunkStrategy::sliding_window: return "sliding_window";
  }
  return "vanilla";
}

ChunkStrategy chunk_strategy_from_string(const std::string& s) {
  if (s == "vanilla") return ChunkStrategy::vanilla;
  if (s == "small2big") return ChunkStrategy::small2big;
  if (s == "sliding_window" || s == "sliding") return ChunkStrategy::sliding_window;
  throw ConfigError("unknown chunking strategy '" + s + "'");
}

void ChunkingConfig::validate() const {
  if (chunk_size == 0 || chunk_size % 4 != 0) {
    throw ConfigError("chunking: chunk_size must be a positive multiple of 4, got " +
                      std::to_string(chunk_size));
  }
}

// ---------------------------------------------------------------------------
// Sentences
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 7> kAbbreviations = {"Dr.", "Mr.", "Mrs.", "Ms.",
                                                            "Fig.", "e.g.", "i.e."};

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?' || c == ';'; }

bool is_opening_punct(char c) { return c == '(' || c == '[' || c == '"' || c == '\''; }

// Whitespace-delimited word that ends at `end` (exclusive).
std::string_view word_before(std::string_view text, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && !text::is_space(text[b - 1])) --b;
  return text.substr(b, end - b);
}

bool is_abbreviation(std::string_view text, std::size_t dot) {
  auto word = word_before(text, dot + 1);
  const auto word_start = static_cast<std::size_t>(word.data() - text.data());
  while (!word.empty() && is_opening_punct(word.front())) word.remove_prefix(1);
  if (word.size() == 2 && word[0] >= 'A' && word[0] <= 'Z') return true;
  for (auto abbr : kAbbreviations) {
    if (word == abbr) return true;
  }
  if (word == "al.") {
    std::size_t e = word_start;
    while (e > 0 && text::is_space(text[e - 1])) --e;
    return word_before(text, e) == "et";
  }
  return false;
}

}  // namespace

std::vector<SentenceSpan> sentence_spans(std::string_view text) {
  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n && text::is_space(text[i])) ++i;
  std::size_t start = i;
  auto push = [&](std::size_t end) {
    spans.push_back({start, end, text::tokenize_count(text.substr(start, end - start))});
  };
  for (; i < n; ++i) {
    if (!is_terminator(text[i])) continue;
    if (i + 1 < n && !text::is_space(text[i + 1])) continue;
    if (text[i] == '.' && is_abbreviation(text, i)) continue;
    push(i + 1);
    std::size_t j = i + 1;
    while (j < n && text::is_space(text[j])) ++j;
    start = j;
    i = j - 1;
  }
  if (start < n) {
    std::size_t end = n;
    while (end > start && text::is_space(text[end - 1])) --end;
    if (end > start) push(end);
  }
  return spans;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& s : sentence_spans(text)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

std::vector<Document> ingest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file '" + path + "'");
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    auto fail = [&](const std::string& why) -> ParseError {
      return ParseError(path + ":" + std::to_string(line_no) + ": " + why, line_no);
    };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw fail("expected a JSON object");
    auto str_field = [&](const char* key, bool required) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) {
        if (required) throw fail(std::string("missing field \"") + key + "\"");
        return {};
      }
      if (!it->is_string()) throw fail(std::string("field \"") + key + "\" must be a string");
      return it->get<std::string>();
    };
    Document doc{str_field("id", true), str_field("title", false), str_field("text", true),
                 str_field("source", false)};
    if (doc.id.empty()) throw fail("field \"id\" must be non-empty");
    if (doc.text.empty()) throw fail("field \"text\" must be non-empty");
    if (!seen.insert(doc.id).second) {
      throw ConflictError(path + ":" + std::to_string(line_no) + ": duplicate document id '" +
                          doc.id + "'");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

namespace {

using Group = std::pair<std::size_t, std::size_t>;  // sentence index range [first, last)

// Greedy packing of sentences [first, last) into groups of at most `limit`
// tokens; a sentence larger than `limit` forms a group of its own.
std::vector<Group> pack(const std::vector<SentenceSpan>& s, std::size_t first, std::size_t last,
                        std::size_t limit) {
  std::vector<Group> groups;
  std::size_t start = first;
  std::size_t tokens = 0;
  for (std::size_t i = first; i < last; ++i) {
    if (i > start && tokens + s[i].tokens > limit) {
      groups.emplace_back(start, i);
      start = i;
      tokens = 0;
    }
    tokens += s[i].tokens;
  }
  if (start < last) groups.emplace_back(start, last);
  return groups;
}

std::string chunk_id(const std::string& doc_id, std::string_view tag, std::size_t seq) {
  std::string id = doc_id;
  id += ':';
  id += tag;
  id += ':';
  id += std::to_string(seq);
  return id;
}

Chunk make_chunk(const Document& doc, const std::vector<SentenceSpan>& s, Group g,
                 std::string_view tag, std::size_t seq, ChunkStrategy strategy) {
  Chunk c;
  c.id = chunk_id(doc.id, tag, seq);
  c.doc_id = doc.id;
  c.seq_no = seq;
  c.text = doc.text.substr(s[g.first].begin, s[g.second - 1].end - s[g.first].begin);
  c.token_count = text::tokenize_count(c.text);
  c.strategy = strategy;
  return c;
}

}  // namespace

std::vector<Chunk> chunk_vanilla(const Document& doc, const ChunkingConfig& cfg) {
  cfg.validate();
  const auto spans = sentence_spans(doc.text);
  std::vector<Chunk> out;
  const auto groups = pack(spans, 0, spans.size(), cfg.chunk_size);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out.push_back(make_chunk(doc, spans, groups[i], "vanilla", i, ChunkStrategy::vanilla));
  }
  return out;
}

std::vector<Chunk> chunk_sliding(const Document& doc, const ChunkingConfig& cfg) {
  cfg.validate();
  const auto s = sentence_spans(doc.text);
  const std::size_t n = s.size();
  const std::size_t limit = cfg.chunk_size;
  const std::size_t overlap = cfg.overlap();
  std::vector<Chunk> out;
  std::size_t start = 0;
  std::size_t must_reach = 0;  // sentences up to and including this index are mandatory
  while (start < n) {
    std::size_t j = start;
    std::size_t tokens = 0;
    while (j < n && (j <= must_reach || tokens + s[j].tokens <= limit)) {
      tokens += s[j].tokens;
      ++j;
    }
    out.push_back(make_chunk(doc, s, {start, j}, "sliding", out.size(),
                             ChunkStrategy::sliding_window));
    if (j == n) break;

    // Smallest trailing run of sentences reaching the overlap length.
    std::size_t o = j - 1;
    std::size_t carried = s[o].tokens;
    while (carried < overlap && o > start) carried += s[--o].tokens;
    // Keep at least one shared sentence, but drop leading overlap sentences
    // that would push the next window past the size limit.
    while (o + 1 < j && carried + s[j].tokens > limit) carried -= s[o++].tokens;
    start = o;
    must_reach = j;
  }
  return out;
}

Small2BigChunks chunk_small2big(const Document& doc, const ChunkingConfig& cfg) {
  cfg.validate();
  const auto spans = sentence_spans(doc.text);
  Small2BigChunks out;
  const auto large_groups = pack(spans, 0, spans.size(), cfg.large_size());
  for (std::size_t li = 0; li < large_groups.size(); ++li) {
    const auto lg = large_groups[li];
    auto large = make_chunk(doc, spans, lg, "s2b-large", li, ChunkStrategy::small2big);
    for (const auto& sg : pack(spans, lg.first, lg.second, cfg.small_size())) {
      auto small = make_chunk(doc, spans, sg, "s2b-small", out.small.size(),
                              ChunkStrategy::small2big);
      small.parent_id = large.id;
      out.small.push_back(std::move(small));
    }
    out.large.push_back(std::move(large));
  }
  return out;
}

ChunkSet chunk_corpus(const std::vector<Document>& docs, const ChunkingConfig& cfg,
                      std::size_t parallelism) {
  cfg.validate();
  std::vector<ChunkSet> per_doc(docs.size());
  parallel_for(docs.size(), parallelism, [&](std::size_t i) {
    switch (cfg.strategy) {
      case ChunkStrategy::vanilla: per_doc[i].retrieval = chunk_vanilla(docs[i], cfg); break;
      case ChunkStrategy::sliding_window: per_doc[i].retrieval = chunk_sliding(docs[i], cfg); break;
      case ChunkStrategy::small2big: {
        auto s2b = chunk_small2big(docs[i], cfg);
        per_doc[i].retrieval = std::move(s2b.small);
        per_doc[i].context = std::move(s2b.large);
        break;
      }
    }
  });
  ChunkSet out;
  for (auto& d : per_doc) {
    std::move(d.retrieval.begin(), d.retrieval.end(), std::back_inserter(out.retrieval));
    std::move(d.context.begin(), d.context.end(), std::back_inserter(out.context));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chunk store
// ---------------------------------------------------------------------------

void write_chunks(const std::string& path, const std::vector<Chunk>& chunks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write chunk store '" + path + "'");
  for (const auto& c : chunks) {
    json obj = {{"id", c.id},
                {"doc_id", c.doc_id},
                {"seq_no", c.seq_no},
                {"text", c.text},
                {"token_count", c.token_count},
                {"parent_id", c.parent_id ? json(*c.parent_id) : json(nullptr)},
                {"strategy", to_string(c.strategy)}};
    out << obj.dump() << '\n';
  }
}

std::vector<Chunk> read_chunks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open chunk store '" + path + "'");
  std::vector<Chunk> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto obj = json::parse(line);
      Chunk c;
      c.id = obj.at("id").get<std::string>();
      c.doc_id = obj.at("doc_id").get<std::string>();
      c.seq_no = obj.at("seq_no").get<std::size_t>();
      c.text = obj.at("text").get<std::string>();
      c.token_count = obj.at("token_count").get<std::size_t>();
      if (const auto& p = obj.at("parent_id"); !p.is_null()) c.parent_id = p.get<std::string>();
      c.strategy = chunk_strategy_from_string(obj.at("strategy").get<std::string>());
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace ragbench::corpus
