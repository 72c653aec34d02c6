#include "kfqg/reports.hpp"

#include <iomanip>
#include <sstream>

#include "kfqg/error.hpp"
#include "kfqg/serialize.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

namespace {

using Table = std::vector<std::vector<std::string>>;

std::size_t display_width(std::string_view s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

// First column left-aligned, the rest right-aligned, two spaces between.
std::string render(const Table& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    if (widths.size() < r.size()) widths.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], display_width(r[i]));
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::string pad(widths[i] - display_width(r[i]), ' ');
      if (i > 0) line += "  ";
      line += i == 0 ? r[i] + pad : pad + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string cell(const std::optional<double>& v, double scale, int digits) {
  return v ? fixed(*v * scale, digits) : "-";
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

template <typename F>
SweepCell guarded(F&& f) {
  try {
    return {f(), {}};
  } catch (const Error& e) {
    return {std::nullopt, std::string(to_string(e.code())) + ": " + e.what()};
  }
}

}  // namespace

std::set<std::string> parse_metric_groups(std::string_view csv) {
  static const std::map<std::string, std::string, std::less<>> alias = {
      {"topic", "topic_consistency"}, {"consistency", "topic_consistency"}, {"mi", "mutual_information"},
      {"distinct_1", "distinct"},     {"distinct_2", "distinct"},          {"bleu_1", "bleu"},
      {"bleu_2", "bleu"},             {"ppl", "perplexity"}};
  std::set<std::string> out;
  std::string item;
  std::istringstream in{std::string(csv)};
  while (std::getline(in, item, ',')) {
    auto name = text::to_lower(text::trim(item));
    if (name.empty()) continue;
    if (auto it = alias.find(name); it != alias.end()) name = it->second;
    if (std::find(kMetricGroups.begin(), kMetricGroups.end(), name) == kMetricGroups.end())
      throw Error(ErrorCode::InvalidArgument, "unknown metric: " + text::trim(item));
    out.insert(name);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no metric selected");
  return out;
}

MetricReport evaluate(const std::vector<EvalSample>& samples, const EvalOptions& options,
                      const ConditionalScorer* scorer) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to evaluate");
  const auto& want = options.metrics;
  MetricReport r;
  std::vector<std::string> generated;
  std::vector<metrics::TextPair> with_reference, initial_followup, context_question;
  for (const auto& s : samples) {
    generated.push_back(s.generated);
    initial_followup.emplace_back(s.initial_question, s.generated);
    context_question.emplace_back(s.initial_question + " " + s.answer, s.generated);
    if (s.reference) with_reference.emplace_back(s.generated, *s.reference);
  }

  if (want.contains("topic_consistency")) r.topic_consistency = metrics::topic_consistency(context_question, options.topic);
  if (want.contains("mutual_information")) r.mutual_information = metrics::mutual_information(initial_followup, options.mi);
  if (want.contains("distinct")) {
    r.distinct_1 = metrics::distinct_n(generated, 1);
    r.distinct_2 = metrics::distinct_n(generated, 2);
  }
  if (want.contains("ttr")) r.ttr = metrics::ttr(generated, options.ttr_pooled);
  if (want.contains("bleu") && !with_reference.empty()) {
    r.bleu_1 = metrics::corpus_bleu(with_reference, 1);
    r.bleu_2 = metrics::corpus_bleu(with_reference, 2);
  }

  std::vector<double> ppl;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    SampleMetrics m{i, {}};
    auto tokens = text::word_tokens(s.generated);
    if (want.contains("distinct")) {
      if (!tokens.empty()) m.values["distinct_1"] = metrics::distinct_n({s.generated}, 1);
      if (tokens.size() >= 2) m.values["distinct_2"] = metrics::distinct_n({s.generated}, 2);
    }
    if (want.contains("ttr") && !tokens.empty()) m.values["ttr"] = metrics::ttr({s.generated});
    if (want.contains("bleu") && s.reference && !tokens.empty()) {
      m.values["bleu_1"] = metrics::bleu(s.generated, *s.reference, 1);
      m.values["bleu_2"] = metrics::bleu(s.generated, *s.reference, 2);
    }
    if (want.contains("perplexity")) {
      if (!scorer) throw Error(ErrorCode::InvalidArgument, "perplexity needs a scorer backend");
      double p = metrics::perplexity(s.generated, *scorer);
      m.values["perplexity"] = p;
      ppl.push_back(p);
    }
    r.per_sample.push_back(std::move(m));
  }
  if (want.contains("perplexity")) r.perplexity = mean(ppl);
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.per_sample) samples.push_back({{"index", s.index}, {"values", s.values}});
  return {{"topic_consistency", opt(r.topic_consistency)},
          {"mutual_information", opt(r.mutual_information)},
          {"distinct_1", opt(r.distinct_1)},
          {"distinct_2", opt(r.distinct_2)},
          {"ttr", opt(r.ttr)},
          {"bleu_1", opt(r.bleu_1)},
          {"bleu_2", opt(r.bleu_2)},
          {"perplexity", opt(r.perplexity)},
          {"per_sample", samples}};
}

std::string render_table(const MetricReport& r) {
  Table t{{"Metric", "Value"}};
  t.push_back({"Consistency(%)", cell(r.topic_consistency, 100, 2)});
  t.push_back({"Mutual Information", cell(r.mutual_information, 1, 4)});
  t.push_back({"Distinct-1(%)", cell(r.distinct_1, 100, 2)});
  t.push_back({"Distinct-2(%)", cell(r.distinct_2, 100, 2)});
  t.push_back({"TTR(%)", cell(r.ttr, 100, 2)});
  t.push_back({"BLEU-1(%)", cell(r.bleu_1, 100, 2)});
  t.push_back({"BLEU-2(%)", cell(r.bleu_2, 100, 2)});
  t.push_back({"Perplexity", cell(r.perplexity, 1, 2)});
  return render(t);
}

std::string ablation_label(Variant v) {
  switch (v) {
    case Variant::NoReranker: return "w/o re-ranker";
    case Variant::NoKgSelection: return "w/o KGselection";
    case Variant::NoLlmKnowledge: return "w/o llmknowledge";
    case Variant::Full: return "Ours";
  }
  return "Ours";
}

AblationReport ablation_report(const std::vector<std::pair<Variant, std::vector<PipelineResult>>>& results,
                               const Embedder& embedder) {
  AblationReport report;
  for (const auto& [variant, runs] : results) {
    AblationRow row;
    row.variant = variant;
    std::vector<double> wq, wfq, qfq;
    for (const auto& r : runs) {
      if (!r.status.ok) {
        ++row.failed;
        continue;
      }
      if (!r.trace.knowledge || !r.trace.question)
        throw Error(ErrorCode::MissingTrace, "ok result without knowledge or question in its trace");
      const auto& wiki = r.trace.knowledge->wiki_text;
      const auto& q = r.trace.qa.question;
      const auto& fq = r.trace.question->text;
      wq.push_back(metrics::semantic_distance(wiki, q, embedder).value);
      wfq.push_back(metrics::semantic_distance(wiki, fq, embedder).value);
      qfq.push_back(metrics::semantic_distance(q, fq, embedder).value);
      ++row.samples;
    }
    row.dis_wiki_q = mean(wq);
    row.dis_wiki_fq = mean(wfq);
    row.dis_q_fq = mean(qfq);
    report.rows.push_back(row);
  }
  return report;
}

nlohmann::json to_json(const AblationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"variant", std::string(to_string(row.variant))},
                    {"label", ablation_label(row.variant)},
                    {"samples", row.samples},
                    {"failed", row.failed},
                    {"dis_wiki_q", opt(row.dis_wiki_q)},
                    {"dis_wiki_fq", opt(row.dis_wiki_fq)},
                    {"dis_q_fq", opt(row.dis_q_fq)}});
  return {{"rows", rows}};
}

std::string render_table(const AblationReport& r) {
  Table t{{"", "dis(Wiki_k, q)", "dis(Wiki_k, fq)", "dis(q, fq)"}};
  for (const auto& row : r.rows)
    t.push_back({ablation_label(row.variant), cell(row.dis_wiki_q, 1, 2), cell(row.dis_wiki_fq, 1, 2),
                 cell(row.dis_q_fq, 1, 2)});
  return render(t);
}

bool SweepReport::any_failed() const {
  for (const auto& c : columns)
    for (const auto* cellp : {&c.bleu_1, &c.bleu_2, &c.perplexity, &c.topic_consistency})
      if (!cellp->error.empty()) return true;
  return false;
}

SweepReport beta_sweep(const Pipeline& pipeline, const std::vector<QAPair>& corpus, const std::vector<Beta>& betas,
                       const SweepOptions& options) {
  if (betas.empty()) throw Error(ErrorCode::InvalidArgument, "beta list is empty");
  if (corpus.empty()) throw Error(ErrorCode::InvalidArgument, "corpus is empty");
  SweepReport report;
  for (const auto& beta : betas) {
    SweepColumn col;
    col.beta = beta;
    auto batch = pipeline.with_beta(beta).run_batch(corpus);
    std::vector<metrics::TextPair> wiki_context;
    std::vector<metrics::TextPair> context_wiki;
    for (const auto& r : batch.results) {
      if (!r.trace.selected_node) {
        ++col.failed;
        continue;
      }
      ++col.ok;
      const auto context = r.trace.qa.question + " " + r.trace.qa.answer;
      wiki_context.emplace_back(r.trace.selected_node->definition, context);
      context_wiki.emplace_back(context, r.trace.selected_node->definition);
    }
    auto require = [&] {
      if (wiki_context.empty()) throw Error(ErrorCode::MissingTrace, "no item reached node selection");
    };
    col.bleu_1 = guarded([&] { require(); return metrics::corpus_bleu(wiki_context, 1); });
    col.bleu_2 = guarded([&] { require(); return metrics::corpus_bleu(wiki_context, 2); });
    col.perplexity = guarded([&] {
      require();
      std::vector<double> v;
      for (const auto& [wiki, _] : wiki_context) v.push_back(metrics::perplexity(wiki, *pipeline.backends().scorer));
      return *mean(v);
    });
    col.topic_consistency = guarded([&] {
      require();
      return metrics::topic_consistency(context_wiki, options.topic);
    });
    report.columns.push_back(std::move(col));
  }
  return report;
}

nlohmann::json to_json(const SweepReport& r) {
  auto cellj = [](const SweepCell& c) {
    if (c.value) return nlohmann::json(*c.value);
    return nlohmann::json{{"failed", c.error}};
  };
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : r.columns)
    cols.push_back({{"beta", c.beta},
                    {"label", c.beta.label()},
                    {"ok", c.ok},
                    {"failed", c.failed},
                    {"bleu_1", cellj(c.bleu_1)},
                    {"bleu_2", cellj(c.bleu_2)},
                    {"perplexity", cellj(c.perplexity)},
                    {"topic_consistency", cellj(c.topic_consistency)}});
  return {{"columns", cols}};
}

std::string render_table(const SweepReport& r) {
  Table t{{""}};
  for (const auto& c : r.columns) t[0].push_back("\xce\xb2=" + c.beta.label());
  auto row = [&](const std::string& name, SweepCell SweepColumn::*field, double scale) {
    std::vector<std::string> cells{name};
    for (const auto& c : r.columns) {
      const auto& v = c.*field;
      cells.push_back(v.value ? fixed(*v.value * scale, 2) : "failed");
    }
    t.push_back(cells);
  };
  row("BLEU-1", &SweepColumn::bleu_1, 100);
  row("BLEU-2", &SweepColumn::bleu_2, 100);
  row("Perplexity", &SweepColumn::perplexity, 1);
  row("Topic Consistency", &SweepColumn::topic_consistency, 100);
  return render(t);
}

}  // namespace kfqg
