#pragma once

#include <json.hpp>

#include "kfqg/corpus.hpp"
#include "kfqg/pipeline.hpp"

namespace kfqg {

using nlohmann::json;

void to_json(json& j, const WikiPage& p);
void from_json(const json& j, WikiPage& p);
void to_json(json& j, const QAPair& qa);
void from_json(const json& j, QAPair& qa);
void to_json(json& j, const KeyInfo& k);
void from_json(const json& j, KeyInfo& k);
void to_json(json& j, const RankedPage& r);
void from_json(const json& j, RankedPage& r);
void to_json(json& j, const KGNode& n);
void from_json(const json& j, KGNode& n);
void to_json(json& j, const NodeScore& s);
void from_json(const json& j, NodeScore& s);
void to_json(json& j, const RelatedKnowledge& k);
void from_json(const json& j, RelatedKnowledge& k);
void to_json(json& j, const FollowUpQuestion& q);
void from_json(const json& j, FollowUpQuestion& q);
void to_json(json& j, const Beta& b);
void from_json(const json& j, Beta& b);
void to_json(json& j, const Status& s);
void from_json(const json& j, Status& s);
void to_json(json& j, const BatchSummary& s);
void to_json(json& j, const CorpusStats& s);

/// {center, nodes:[{id,title,definition,url}], edges:[{source,target,relation}]}.
/// With scores, each node also carries {w,n,I,I_norm,S,R} and "selected".
json graph_to_json(const KnowledgeGraph& g, const std::vector<NodeScore>* scores = nullptr,
                   const std::string* selected_id = nullptr);
KnowledgeGraph graph_from_json(const json& j);

/// Trace as written to JSON-lines; timings only when `with_timings`.
json trace_to_json(const TraceRecord& t, bool with_timings = false);
TraceRecord trace_from_json(const json& j);

json result_to_json(const PipelineResult& r, bool with_timings = false);
PipelineResult result_from_json(const json& j);

json config_to_json(const PipelineConfig& c);
/// Missing fields keep their defaults. Throws InvalidConfig on bad values.
PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir = {});

}  // namespace kfqg
