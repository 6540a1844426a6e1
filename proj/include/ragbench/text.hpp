#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ragbench::text {

/// Tokens are maximal runs of alphanumeric characters; every other
/// non-whitespace character is a token by itself. Bytes >= 0x80 count as
/// alphanumeric so multi-byte UTF-8 letters stay inside their word.
std::vector<std::string_view> tokenize(std::string_view text);

/// Same as `tokenize` but each token is ASCII-lowercased.
std::vector<std::string> tokenize_lower(std::string_view text);

std::size_t tokenize_count(std::string_view text);

std::string to_lower(std::string_view s);

bool is_space(char c) noexcept;
bool is_word_char(char c) noexcept;

/// 64-bit FNV-1a, optionally seeded by folding the seed into the basis.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0) noexcept;

std::string hex64(std::uint64_t v);

/// Replace every "{name}" placeholder using `vars`; unknown names are kept verbatim.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& vars);

}  // namespace ragbench::text
