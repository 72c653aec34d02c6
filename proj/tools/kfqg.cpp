// kfqg: command-line front end (generate, eval, ablate, beta-sweep, stats, serve).
//
// Exit codes: 0 success, 2 when any item or report cell failed, 1 on usage
// or input errors.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kfqg/corpus.hpp"
#include "kfqg/error.hpp"
#include "kfqg/mock_backends.hpp"
#include "kfqg/reports.hpp"
#include "kfqg/serialize.hpp"
#include "kfqg/service.hpp"
#include "kfqg/text.hpp"

namespace {

using namespace kfqg;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kPartial = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Each line holds {question, answer} or a triplet {initial_question, answer, ...}.
// Blank answers are kept so the pipeline reports them per item.
std::vector<QAPair> read_qa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input " + path);
  std::vector<QAPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      QAPair qa;
      qa.question = j.contains("question") ? j.at("question").get<std::string>()
                                           : j.at("initial_question").get<std::string>();
      qa.answer = j.at("answer").get<std::string>();
      out.push_back(std::move(qa));
    } catch (const json::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw UsageError("input " + path + " holds no QA pairs");
  return out;
}

PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) throw UsageError("--config is required");
  if (!std::filesystem::exists(path)) throw UsageError("config file not found: " + path);
  auto config = PipelineConfig::load(path);
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("--backend expects name=mock|http, got " + o);
    auto name = o.substr(0, eq);
    auto type = o.substr(eq + 1);
    if (type != "mock" && type != "http") throw UsageError("--backend type must be mock or http");
    if (auto b = config.bindings.find(name); b != config.bindings.end()) name = b->second;
    auto it = config.backends.find(name);
    if (it == config.backends.end()) throw UsageError("--backend names unknown backend " + name);
    it->second.type = type;
  }
  config.validate();
  return config;
}

std::vector<Beta> parse_betas(const std::string& csv) {
  if (csv.empty()) return kDefaultBetas;
  std::vector<Beta> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ','))
    if (!text::trim(item).empty()) out.push_back(Beta::parse(item));
  if (out.empty()) throw UsageError("--betas is empty");
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << content;
}

struct Common {
  std::string config;
  std::string input;
  std::string output;
  std::vector<std::string> backends;
};

void add_config(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline config JSON")->required();
  cmd->add_option("--backend", c.backends, "Override a backend type: <name>=mock|http");
}

void add_common(CLI::App* cmd, Common& c, bool needs_input) {
  add_config(cmd, c);
  auto* in = cmd->add_option("--input", c.input, "QA pairs or triplets, JSON lines");
  if (needs_input) in->required();
  cmd->add_option("--output", c.output, "Output path (default: stdout)");
}

int cmd_generate(const Common& c, const std::string& question, const std::string& answer,
                 const std::string& variant, const std::string& summary_path, bool timings) {
  auto config = load_config(c.config, c.backends);
  if (timings) config.emit_timings = true;
  std::vector<QAPair> items;
  if (!c.input.empty()) {
    items = read_qa(c.input);
  } else if (!question.empty()) {
    items.push_back({question, answer});
  } else {
    throw UsageError("generate needs --input or --question/--answer");
  }
  auto pipeline = Pipeline::from_config(config);
  auto batch = pipeline.run_batch(items, parse_variant(variant));

  std::ostringstream lines;
  for (const auto& r : batch.results) lines << result_to_json(r, config.emit_timings).dump() << '\n';
  json summary = batch.summary;
  if (c.output.empty()) {
    std::cout << lines.str();
  } else {
    write_text(c.output, lines.str());
    write_text(summary_path.empty() ? c.output + ".summary.json" : summary_path, summary.dump(2) + "\n");
  }
  std::cerr << "ok " << batch.summary.ok << " / " << batch.summary.total << "\n";
  for (const auto& r : batch.results)
    if (!r.status.ok) std::cerr << "failed [" << r.status.stage << "] " << r.status.error_code << ": " << r.status.message << "\n";
  return batch.summary.failed == 0 ? kOk : kPartial;
}

int cmd_eval(const std::string& results_path, const std::string& dataset_path, const std::string& metrics_csv,
             const std::string& config_path, const std::string& output, const metrics::TopicOptions& topic) {
  std::ifstream in(results_path);
  if (!in) throw UsageError("cannot open results " + results_path);
  std::map<std::string, std::string> reference;
  if (!dataset_path.empty()) {
    auto load = load_triplets(dataset_path);
    for (const auto& t : load.triplets) reference.emplace(t.initial_question, t.follow_up);
  }

  std::vector<EvalSample> samples;
  std::size_t skipped = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    PipelineResult r;
    try {
      r = result_from_json(json::parse(line));
    } catch (const std::exception& e) {
      throw UsageError(results_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!r.status.ok || !r.question) {
      ++skipped;
      continue;
    }
    EvalSample s{r.trace.qa.question, r.trace.qa.answer, r.question->text, std::nullopt};
    if (auto it = reference.find(s.initial_question); it != reference.end()) s.reference = it->second;
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw UsageError("no successful results in " + results_path);

  EvalOptions options;
  if (!metrics_csv.empty()) options.metrics = parse_metric_groups(metrics_csv);
  options.topic = topic;
  std::shared_ptr<const ConditionalScorer> scorer;
  if (options.metrics.contains("perplexity")) {
    if (config_path.empty())
      scorer = std::make_shared<TableScorer>();
    else
      scorer = make_backends(load_config(config_path, {})).scorer;
  }
  auto report = evaluate(samples, options, scorer.get());
  auto j = to_json(report);
  j["samples"] = samples.size();
  j["skipped_failed"] = skipped;
  if (!output.empty()) write_text(output, j.dump(2) + "\n");
  std::cout << render_table(report);
  return kOk;
}

int cmd_ablate(const Common& c, const std::vector<std::string>& variants) {
  auto config = load_config(c.config, c.backends);
  auto items = read_qa(c.input);
  std::vector<Variant> list;
  for (const auto& v : variants) list.push_back(parse_variant(v));
  if (list.empty()) list = {Variant::NoReranker, Variant::NoKgSelection, Variant::NoLlmKnowledge};
  auto pipeline = Pipeline::from_config(config);
  std::vector<std::pair<Variant, std::vector<PipelineResult>>> runs;
  bool failed = false;
  for (auto v : list) {
    auto batch = pipeline.run_batch(items, v);
    failed = failed || batch.summary.failed > 0;
    runs.emplace_back(v, std::move(batch.results));
  }
  auto report = ablation_report(runs, *pipeline.backends().embedder);
  if (!c.output.empty()) write_text(c.output, to_json(report).dump(2) + "\n");
  std::cout << render_table(report);
  return failed ? kPartial : kOk;
}

int cmd_sweep(const Common& c, const std::string& betas, const metrics::TopicOptions& topic) {
  auto config = load_config(c.config, c.backends);
  auto items = read_qa(c.input);
  auto pipeline = Pipeline::from_config(config);
  auto report = beta_sweep(pipeline, items, parse_betas(betas), {topic});
  if (!c.output.empty()) write_text(c.output, to_json(report).dump(2) + "\n");
  std::cout << render_table(report);
  bool failed = report.any_failed();
  for (const auto& col : report.columns) failed = failed || col.failed > 0;
  return failed ? kPartial : kOk;
}

int cmd_stats(const std::string& input, const std::string& keys_csv) {
  TripletKeys keys;
  if (!keys_csv.empty()) {
    std::vector<std::string> k;
    std::istringstream in(keys_csv);
    std::string item;
    while (std::getline(in, item, ',')) k.push_back(text::trim(item));
    if (k.size() != 3) throw UsageError("--keys expects three comma-separated names");
    keys = {k[0], k[1], k[2]};
  }
  auto load = load_triplets(input, keys);
  json errors = json::array();
  for (const auto& e : load.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
  json out{{"valid", load.triplets.size()},
           {"invalid", load.errors.size()},
           {"total_lines", load.total_lines},
           {"stats", stats(load.triplets)},
           {"errors", errors}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

Service* g_service = nullptr;

int cmd_serve(const Common& c, const std::string& host, int port, const ServiceOptions& options) {
  auto config = load_config(c.config, c.backends);
  config.trace_level = TraceLevel::Full;
  Service service(Pipeline::from_config(config), options);
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::cerr << "listening on http://" << host << ":" << port << "\n";
  service.serve(host, port);
  g_service = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-enhanced follow-up question generation"};
  app.require_subcommand(1);

  Common common;
  std::string question, answer, variant = "full", summary_path;
  bool timings = false;
  auto* gen = app.add_subcommand("generate", "Generate follow-up questions");
  add_common(gen, common, false);
  gen->add_option("--question", question, "Initial question (instead of --input)");
  gen->add_option("--answer", answer, "Answer to the initial question");
  gen->add_option("--variant", variant, "full | no_reranker | no_kg_selection | no_llm_knowledge");
  gen->add_option("--summary", summary_path, "Summary JSON path (default: <output>.summary.json)");
  gen->add_flag("--timings", timings, "Include per-stage timings in the output");

  std::string results, dataset, metrics_csv, eval_config, eval_output;
  metrics::TopicOptions topic;
  auto* ev = app.add_subcommand("eval", "Score generated follow-ups");
  ev->add_option("--results", results, "Output of `generate`")->required();
  ev->add_option("--dataset", dataset, "Triplet file with gold follow-ups");
  ev->add_option("--metrics", metrics_csv, "Comma list: topic_consistency,mutual_information,distinct,ttr,bleu,perplexity");
  ev->add_option("--config", eval_config, "Config whose scorer backend computes perplexity");
  ev->add_option("--output", eval_output, "Report JSON path");
  ev->add_option("--topics", topic.topics, "LDA topic count");
  ev->add_option("--top-n", topic.top_n, "Top words per topic");
  ev->add_option("--lda-iterations", topic.iterations, "Gibbs sweeps");
  ev->add_option("--lda-seed", topic.seed, "LDA seed");

  std::vector<std::string> variants;
  auto* ab = app.add_subcommand("ablate", "Ablation report (semantic distances per variant)");
  add_common(ab, common, true);
  ab->add_option("--variant", variants, "Variant to include (repeatable; default: the three ablations)");

  std::string betas;
  metrics::TopicOptions sweep_topic;
  auto* sw = app.add_subcommand("beta-sweep", "Selection quality across beta values");
  add_common(sw, common, true);
  sw->add_option("--betas", betas, "Comma list, e.g. 0,0.5,1,1.5,2,inf");
  sw->add_option("--topics", sweep_topic.topics, "LDA topic count");
  sw->add_option("--top-n", sweep_topic.top_n, "Top words per topic");
  sw->add_option("--lda-iterations", sweep_topic.iterations, "Gibbs sweeps");

  std::string stats_input, keys;
  auto* st = app.add_subcommand("stats", "Validate a triplet file and print statistics");
  st->add_option("--input", stats_input, "Triplet JSON lines")->required();
  st->add_option("--keys", keys, "Raw field names for question,answer,follow-up");

  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceOptions service_options;
  std::string snapshot_dir, static_dir;
  int ttl = 3600;
  auto* sv = app.add_subcommand("serve", "HTTP session service");
  add_config(sv, common);
  sv->add_option("--host", host, "Bind address");
  sv->add_option("--port", port, "Port");
  sv->add_option("--followups", service_options.followups, "Follow-up candidates per turn");
  sv->add_option("--ttl", ttl, "Idle session lifetime in seconds");
  sv->add_option("--snapshot-dir", snapshot_dir, "Persist sessions as JSON files here");
  sv->add_option("--static-dir", static_dir, "Serve UI assets from this directory");
  sv->add_option("--cors-origin", service_options.cors_origin, "Access-Control-Allow-Origin value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) return cmd_generate(common, question, answer, variant, summary_path, timings);
    if (*ev) return cmd_eval(results, dataset, metrics_csv, eval_config, eval_output, topic);
    if (*ab) return cmd_ablate(common, variants);
    if (*sw) return cmd_sweep(common, betas, sweep_topic);
    if (*st) return cmd_stats(stats_input, keys);
    if (*sv) {
      service_options.ttl = std::chrono::seconds(ttl);
      service_options.snapshot_dir = snapshot_dir;
      service_options.static_dir = static_dir;
      return cmd_serve(common, host, port, service_options);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
