#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kfqg {

struct Triplet {
  std::string initial_question;
  std::string answer;
  std::string follow_up;

  bool operator==(const Triplet&) const = default;
};

/// Maps the raw dataset's field names onto triplet fields.
struct TripletKeys {
  std::string initial_question = "initial_question";
  std::string answer = "answer";
  std::string follow_up = "follow_up";
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct TripletLoad {
  std::vector<Triplet> triplets;
  std::vector<LineError> errors;
  std::size_t total_lines = 0;  // non-blank lines
};

/// Reads JSON-lines triplets. Malformed lines are reported, not dropped
/// silently. Throws FileNotFound, or AllLinesMalformed when no line is valid.
/// An optional [begin, end) index range selects a slice of the valid triplets.
TripletLoad load_triplets(const std::filesystem::path& path, const TripletKeys& keys = {},
                          std::optional<std::pair<std::size_t, std::size_t>> range = std::nullopt);

/// One JSON object per line using the canonical key names.
std::string serialize_triplets(const std::vector<Triplet>& triplets);
void save_triplets(const std::filesystem::path& path, const std::vector<Triplet>& triplets);

struct FieldStats {
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
};

/// Whitespace-token length statistics; fields are nullopt for an empty corpus.
struct CorpusStats {
  std::size_t count = 0;
  std::optional<FieldStats> initial_question;
  std::optional<FieldStats> answer;
  std::optional<FieldStats> follow_up;
};

CorpusStats stats(const std::vector<Triplet>& triplets);

}  // namespace kfqg
