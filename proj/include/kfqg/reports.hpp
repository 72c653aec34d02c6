#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfqg/metrics.hpp"
#include "kfqg/pipeline.hpp"

namespace kfqg {

/// One generated follow-up with its source context. `reference` is the gold
/// follow-up when the dataset provides one.
struct EvalSample {
  std::string initial_question;
  std::string answer;
  std::string generated;
  std::optional<std::string> reference;
};

/// Metric group names accepted by evaluate() and `kfqg eval --metrics`.
inline const std::vector<std::string> kMetricGroups = {"topic_consistency", "mutual_information", "distinct",
                                                       "ttr",               "bleu",               "perplexity"};

/// Accepts group names plus the aliases "topic", "mi", "distinct_1", ...
std::set<std::string> parse_metric_groups(std::string_view csv);

struct EvalOptions {
  std::set<std::string> metrics{kMetricGroups.begin(), kMetricGroups.end()};
  metrics::TopicOptions topic;
  metrics::MiOptions mi;
  bool ttr_pooled = false;
};

struct SampleMetrics {
  std::size_t index = 0;
  std::map<std::string, double> values;
};

/// Corpus-level values (nullopt when not requested) plus per-sample values
/// for the metrics that are defined on a single text.
struct MetricReport {
  std::optional<double> topic_consistency;
  std::optional<double> mutual_information;
  std::optional<double> distinct_1;
  std::optional<double> distinct_2;
  std::optional<double> ttr;
  std::optional<double> bleu_1;
  std::optional<double> bleu_2;
  std::optional<double> perplexity;  // mean of per-sample perplexities
  std::vector<SampleMetrics> per_sample;
};

/// `scorer` is needed only when perplexity is requested.
MetricReport evaluate(const std::vector<EvalSample>& samples, const EvalOptions& options,
                      const ConditionalScorer* scorer);

nlohmann::json to_json(const MetricReport& r);
std::string render_table(const MetricReport& r);

/// "w/o re-ranker", "w/o KGselection", "w/o llmknowledge", "Ours".
std::string ablation_label(Variant v);

struct AblationRow {
  Variant variant = Variant::Full;
  std::size_t samples = 0;
  std::size_t failed = 0;
  std::optional<double> dis_wiki_q;
  std::optional<double> dis_wiki_fq;
  std::optional<double> dis_q_fq;
};

struct AblationReport {
  std::vector<AblationRow> rows;
};

/// Mean pairwise semantic distances between wiki knowledge, initial question
/// and follow-up per variant. Failed results are counted and skipped; a row
/// without any usable result has empty cells. Throws MissingTrace when an ok
/// result lacks knowledge or question.
AblationReport ablation_report(const std::vector<std::pair<Variant, std::vector<PipelineResult>>>& results,
                               const Embedder& embedder);

nlohmann::json to_json(const AblationReport& r);
std::string render_table(const AblationReport& r);

inline const std::vector<Beta> kDefaultBetas = {{0.0, false}, {0.5, false}, {1.0, false},
                                                {1.5, false}, {2.0, false}, Beta::inf()};

struct SweepCell {
  std::optional<double> value;
  std::string error;  // set when the cell failed
};

struct SweepColumn {
  Beta beta;
  std::size_t ok = 0;
  std::size_t failed = 0;
  SweepCell bleu_1, bleu_2, perplexity, topic_consistency;
};

struct SweepReport {
  std::vector<SweepColumn> columns;
  bool any_failed() const;
};

struct SweepOptions {
  metrics::TopicOptions topic;
};

/// Runs the corpus under each beta and scores the selected wiki knowledge
/// against the context (question + " " + answer) with BLEU-1/2, perplexity
/// and topic consistency.
SweepReport beta_sweep(const Pipeline& pipeline, const std::vector<QAPair>& corpus, const std::vector<Beta>& betas,
                       const SweepOptions& options = {});

nlohmann::json to_json(const SweepReport& r);
std::string render_table(const SweepReport& r);

}  // namespace kfqg
