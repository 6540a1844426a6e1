#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragbench::corpus {

struct Document {
  std::string id;
  std::string title;
  std::string text;
  std::string source;
};

enum class ChunkStrategy { vanilla, small2big, sliding_window };

std::string to_string(ChunkStrategy s);
ChunkStrategy chunk_strategy_from_string(const std::string& s);

/// Sentence-level chunking parameters. The small-chunk size, large-chunk size
/// and sliding overlap are fixed fractions of `chunk_size`.
struct ChunkingConfig {
  ChunkStrategy strategy = ChunkStrategy::vanilla;
  std::size_t chunk_size = 256;

  std::size_t small_size() const noexcept { return chunk_size / 2; }
  std::size_t large_size() const noexcept { return chunk_size; }
  std::size_t overlap() const noexcept { return chunk_size / 4; }

  /// chunk_size must be positive and divisible by 4.
  void validate() const;
};

struct Chunk {
  std::string id;
  std::string doc_id;
  std::size_t seq_no = 0;
  std::string text;
  std::size_t token_count = 0;
  std::optional<std::string> parent_id;  // small2big: enclosing large chunk
  ChunkStrategy strategy = ChunkStrategy::vanilla;
};

/// Byte range [begin, end) of one sentence inside its source text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t tokens = 0;
};

/// Sentences end at '.', '!', '?' or ';' followed by whitespace or end of
/// text. A '.' does not end a sentence after a lone capital letter or one of
/// Dr. Mr. Mrs. Ms. Fig. e.g. i.e. "et al.". Spans exclude the whitespace
/// between sentences, so text outside all spans is whitespace only.
std::vector<SentenceSpan> sentence_spans(std::string_view text);
std::vector<std::string> split_sentences(std::string_view text);

/// Reads JSON Lines {id, title, text, source}. Blank lines are skipped.
/// Throws ParseError (with line number) or ConflictError on duplicate ids.
std::vector<Document> ingest(const std::string& path);

std::vector<Chunk> chunk_vanilla(const Document& doc, const ChunkingConfig& cfg);
std::vector<Chunk> chunk_sliding(const Document& doc, const ChunkingConfig& cfg);

struct Small2BigChunks {
  std::vector<Chunk> small;  // indexed for retrieval
  std::vector<Chunk> large;  // handed to generation
};
Small2BigChunks chunk_small2big(const Document& doc, const ChunkingConfig& cfg);

/// Chunks of a whole corpus. `retrieval` holds the units that get indexed;
/// `context` holds the small2big parents (empty for other strategies).
struct ChunkSet {
  std::vector<Chunk> retrieval;
  std::vector<Chunk> context;
};

/// Chunks every document with cfg.strategy, in parallel, merged in document order.
ChunkSet chunk_corpus(const std::vector<Document>& docs, const ChunkingConfig& cfg,
                      std::size_t parallelism = 1);

void write_chunks(const std::string& path, const std::vector<Chunk>& chunks);
std::vector<Chunk> read_chunks(const std::string& path);

}  // namespace ragbench::corpus
