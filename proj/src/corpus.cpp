#include "kfqg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kfqg/error.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

using nlohmann::json;

namespace {

std::string required_text(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument("missing field '" + key + "'");
  if (!it->is_string()) throw std::invalid_argument("field '" + key + "' is not a string");
  auto value = it->get<std::string>();
  if (text::trim(value).empty()) throw std::invalid_argument("field '" + key + "' is empty");
  return value;
}

FieldStats field_stats(const std::vector<Triplet>& ts, std::string Triplet::*field) {
  FieldStats s;
  s.min = std::numeric_limits<std::size_t>::max();
  double total = 0;
  for (const auto& t : ts) {
    auto len = text::whitespace_tokens(t.*field).size();
    total += static_cast<double>(len);
    s.min = std::min(s.min, len);
    s.max = std::max(s.max, len);
  }
  s.mean = total / static_cast<double>(ts.size());
  return s;
}

}  // namespace

TripletLoad load_triplets(const std::filesystem::path& path, const TripletKeys& keys,
                          std::optional<std::pair<std::size_t, std::size_t>> range) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open triplet file " + path.string());
  TripletLoad out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    ++out.total_lines;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("line is not a JSON object");
      out.triplets.push_back({required_text(obj, keys.initial_question), required_text(obj, keys.answer),
                              required_text(obj, keys.follow_up)});
    } catch (const json::exception& e) {
      out.errors.push_back({lineno, std::string("invalid JSON: ") + e.what()});
    } catch (const std::invalid_argument& e) {
      out.errors.push_back({lineno, e.what()});
    }
  }
  if (out.total_lines > 0 && out.triplets.empty())
    throw Error(ErrorCode::AllLinesMalformed, "no valid triplet in " + path.string());
  if (range) {
    auto [begin, end] = *range;
    end = std::min(end, out.triplets.size());
    begin = std::min(begin, end);
    out.triplets = std::vector<Triplet>(out.triplets.begin() + static_cast<std::ptrdiff_t>(begin),
                                        out.triplets.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::string serialize_triplets(const std::vector<Triplet>& triplets) {
  std::ostringstream out;
  for (const auto& t : triplets)
    out << json{{"initial_question", t.initial_question}, {"answer", t.answer}, {"follow_up", t.follow_up}}.dump()
        << '\n';
  return out.str();
}

void save_triplets(const std::filesystem::path& path, const std::vector<Triplet>& triplets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  out << serialize_triplets(triplets);
}

CorpusStats stats(const std::vector<Triplet>& triplets) {
  CorpusStats s;
  s.count = triplets.size();
  if (triplets.empty()) return s;
  s.initial_question = field_stats(triplets, &Triplet::initial_question);
  s.answer = field_stats(triplets, &Triplet::answer);
  s.follow_up = field_stats(triplets, &Triplet::follow_up);
  return s;
}

}  // namespace kfqg
