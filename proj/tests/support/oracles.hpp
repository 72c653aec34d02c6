// Independent reference implementations used by the unit and acceptance tests.
// They share no code with the library beyond plain data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kfqg/backends.hpp"
#include "kfqg/graph.hpp"

namespace oracle {

/// Connected random graph: a random spanning tree plus `extra` random edges.
/// Node 0 is the center. Titles are "n0", "n1", ...
inline kfqg::KnowledgeGraph random_graph(std::size_t n, std::size_t extra, std::mt19937_64& rng) {
  auto node = [](std::size_t i) {
    auto s = "n" + std::to_string(i);
    return kfqg::KGNode{s, s, "definition of " + s, std::nullopt};
  };
  kfqg::KnowledgeGraph g(node(0));
  for (std::size_t i = 1; i < n; ++i) {
    g.add_node(node(i));
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    g.add_edge("n" + std::to_string(parent(rng)), "n" + std::to_string(i), "r");
  }
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t k = 0; k < extra; ++k) {
    auto a = any(rng), b = any(rng);
    if (a != b) g.add_edge("n" + std::to_string(a), "n" + std::to_string(b), "r");
  }
  return g;
}

/// PageRank by power iteration on an explicit N x N column-stochastic matrix
/// over the undirected graph; dangling columns are uniform.
inline std::map<std::string, double> dense_pagerank(const kfqg::KnowledgeGraph& g, double d = 0.85,
                                                    double tol = 1e-14, int max_iter = 100000) {
  const std::size_t n = g.size();
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) idx[g.nodes()[i].id] = i;
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (const auto& e : g.edges()) {
    a[idx[e.source]][idx[e.target]] = 1;
    a[idx[e.target]][idx[e.source]] = 1;
  }
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    int deg = 0;
    for (std::size_t i = 0; i < n; ++i) deg += a[i][j];
    for (std::size_t i = 0; i < n; ++i) m[i][j] = deg == 0 ? 1.0 / n : static_cast<double>(a[i][j]) / deg;
  }
  std::vector<double> r(n, 1.0 / n), next(n);
  for (int it = 0; it < max_iter; ++it) {
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += m[i][j] * r[j];
      next[i] = (1.0 - d) / n + d * s;
      delta += std::fabs(next[i] - r[i]);
    }
    r.swap(next);
    if (delta < tol) break;
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < n; ++i) out[g.nodes()[i].id] = r[i];
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct Row {
  std::string id;
  double w;
  double n;
  double s;
};

/// Importance -> min-max normalization -> composite -> best non-center node,
/// written out longhand. `beta` < 0 stands for infinity.
inline std::string brute_force_select(const std::vector<Row>& rows, const std::string& center, double beta) {
  std::vector<double> imp;
  for (const auto& r : rows) imp.push_back(r.w * r.n);
  double lo = *std::min_element(imp.begin(), imp.end());
  double hi = *std::max_element(imp.begin(), imp.end());
  std::vector<double> norm;
  for (double v : imp) norm.push_back(hi == lo ? 0.5 : (v - lo) / (hi - lo));
  std::string best;
  double best_r = 0, best_s = 0, best_i = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].id == center) continue;
    double r = beta < 0 ? rows[k].s : norm[k] + beta * rows[k].s;
    bool better;
    if (best.empty()) {
      better = true;
    } else if (beta < 0) {
      better = r > best_r || (r == best_r && (norm[k] > best_i || (norm[k] == best_i && rows[k].id < best)));
    } else {
      better = r > best_r || (r == best_r && (rows[k].s > best_s || (rows[k].s == best_s && rows[k].id < best)));
    }
    if (better) {
      best = rows[k].id;
      best_r = r;
      best_s = rows[k].s;
      best_i = norm[k];
    }
  }
  return best;
}

/// Returns preset vectors by exact text; unknown text maps to a zero vector.
class MapEmbedder final : public kfqg::Embedder {
 public:
  explicit MapEmbedder(std::size_t dim) : dim_(dim) {}
  void set(const std::string& text, std::vector<double> v) { table_[text] = std::move(v); }

 protected:
  kfqg::Embedding do_embed(std::string_view text) const override {
    auto it = table_.find(std::string(text));
    if (it == table_.end()) return {std::vector<double>(dim_, 0.0)};
    return {it->second};
  }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

/// Lowercase alphanumeric runs, counted by hand for metric oracles.
inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace oracle
