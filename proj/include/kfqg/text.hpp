#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kfqg::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Collapses whitespace runs and lowercases; used as the canonical node id.
std::string canonical_id(std::string_view title);

/// Lowercase, split on whitespace. Used by the mock embedder.
std::vector<std::string> whitespace_tokens(std::string_view s);

/// Lowercase, split on runs of non-alphanumeric ASCII. Bytes >= 0x80 count as
/// word characters so UTF-8 words stay intact. Shared by every metric.
std::vector<std::string> word_tokens(std::string_view s);

bool is_stopword(std::string_view lowered_token);

/// word_tokens with stopwords removed.
std::vector<std::string> content_tokens(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

/// FNV-1a 64-bit. Stable across platforms; used for seeds and content hashes.
std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace kfqg::text
