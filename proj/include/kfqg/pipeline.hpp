#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kfqg/backends.hpp"
#include "kfqg/fusion.hpp"
#include "kfqg/graph.hpp"
#include "kfqg/prompts.hpp"
#include "kfqg/recognition.hpp"
#include "kfqg/selection.hpp"

namespace kfqg {

enum class TraceLevel { Minimal, Full };
enum class Variant { Full, NoReranker, NoKgSelection, NoLlmKnowledge };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
std::string_view to_string(TraceLevel t);

/// A configured backend instance. `type` is "mock" or "http" ("fixture" is
/// accepted as an alias of "mock" for page sources).
struct BackendSpec {
  std::string type = "mock";
  std::string path;         // mock chat rules / scorer table / page directory
  std::size_t dim = 256;    // mock embedder
  std::size_t vocab_size = 32000;  // mock scorer fallback vocabulary
  std::string url;          // http; empty means KFQG_<ROLE>_URL
  std::string model;
  std::string api_key_env;  // name of the env var holding the key
  int retry_attempts = 3;
  int retry_backoff_ms = 200;

  bool operator==(const BackendSpec&) const = default;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  RecognitionConfig recognition;
  SelectionConfig selection;
  GenerationParams generation;
  /// Named backend instances.
  std::map<std::string, BackendSpec> backends;
  /// Role ("chat", "embedder", "scorer", "pages") -> backend instance name.
  std::map<std::string, std::string> bindings;
  TraceLevel trace_level = TraceLevel::Full;
  std::string prompts_dir;  // empty: built-in templates
  std::size_t workers = 4;
  bool emit_timings = false;
  /// Directory relative paths are resolved against; not part of the hash.
  std::filesystem::path base_dir;

  /// All-mock configuration bound to one instance per role.
  static PipelineConfig defaults();
  static PipelineConfig load(const std::filesystem::path& path);

  std::filesystem::path resolve(const std::string& p) const;
  const BackendSpec& backend_for(std::string_view role) const;

  /// Throws InvalidConfig when a value is out of range or a binding dangles.
  void validate() const;
  /// Stable hash over the semantic fields (excludes workers, emit_timings,
  /// base_dir).
  std::string hash() const;
};

struct Backends {
  std::shared_ptr<const ChatBackend> chat;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const ConditionalScorer> scorer;
  std::shared_ptr<const PageSource> pages;
};

/// Instantiates the bound backends of a configuration.
Backends make_backends(const PipelineConfig& config);

struct TraceRecord {
  std::string trace_id;
  std::string variant;
  std::string config_hash;
  std::uint64_t item_seed = 0;
  QAPair qa;
  std::optional<KeyInfo> key_info;
  std::optional<std::vector<RankedPage>> candidates;
  std::optional<WikiPage> topic_page;
  std::optional<KnowledgeGraph> graph;
  std::optional<std::vector<NodeScore>> node_scores;
  std::optional<KGNode> selected_node;
  std::optional<RelatedKnowledge> knowledge;
  std::optional<FollowUpQuestion> question;
  std::map<std::string, std::string> prompt_hashes;  // template name -> hash
  std::map<std::string, double> timings_ms;
};

struct Status {
  bool ok = true;
  std::string stage;
  std::string error_code;
  std::string message;

  static Status failed(std::string stage, std::string code, std::string message) {
    return {false, std::move(stage), std::move(code), std::move(message)};
  }
};

struct PipelineResult {
  std::optional<FollowUpQuestion> question;
  TraceRecord trace;
  Status status;
};

struct BatchSummary {
  std::size_t total = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::map<std::string, std::size_t> failed_by_stage;
  std::map<std::string, std::size_t> failed_by_code;
};

struct BatchResult {
  std::vector<PipelineResult> results;  // input order
  BatchSummary summary;
};

/// Seeds used for one corpus item, all derived from the config seed.
struct ItemSeeds {
  std::uint64_t item = 0;
  std::uint64_t walk = 0;
  std::uint64_t generation = 0;
  std::uint64_t ablation = 0;

  static ItemSeeds derive(std::uint64_t config_seed, std::size_t index);
};

/// Recognition -> Selection -> Fusion for QA pairs.
///
/// Graphs are cached per (topic page, budget, generation seed), so re-running
/// an item under a different beta reuses the expensive construction step.
/// Copies made through with_beta() share backends and cache.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, Backends backends, PromptSet prompts);

  /// Builds backends and loads prompt templates named by the configuration.
  static Pipeline from_config(PipelineConfig config);

  /// Never throws for data or backend failures: they are encoded in the
  /// returned status and the trace holds every stage completed before it.
  PipelineResult run(const QAPair& qa, std::size_t item_index = 0, Variant variant = Variant::Full) const;

  /// Runs items concurrently (config.workers) with per-item isolation.
  BatchResult run_batch(const std::vector<QAPair>& items, Variant variant = Variant::Full) const;

  Pipeline with_beta(const Beta& beta) const;

  /// Re-selects with the cached graph and similarities of `trace` under a
  /// new beta and regenerates knowledge + question. The trace must be a full,
  /// successful one.
  PipelineResult reselect(const TraceRecord& trace, const Beta& beta, std::size_t item_index = 0) const;

  /// Up to k distinct follow-up candidates for a finished trace, each from a
  /// fusion call with a shifted generation seed. Index 0 reproduces the
  /// trace's own question.
  std::vector<FollowUpQuestion> followup_candidates(const TraceRecord& trace, std::size_t k) const;

  /// Plain answer to a question via the chat backend (used by the service).
  std::string answer(std::string_view question, std::uint64_t seed) const;

  const PipelineConfig& config() const { return config_; }
  const Backends& backends() const { return backends_; }
  const PromptSet& prompts() const { return prompts_; }

 private:
  struct GraphCache {
    std::mutex mu;
    std::map<std::string, KnowledgeGraph> graphs;
  };

  KnowledgeGraph graph_for(const WikiPage& page, const GenerationParams& params) const;
  void run_fusion(PipelineResult& result, Variant variant, const GenerationParams& params) const;

  PipelineConfig config_;
  std::string config_hash_;
  Backends backends_;
  PromptSet prompts_;
  std::shared_ptr<GraphCache> cache_;
};

}  // namespace kfqg
