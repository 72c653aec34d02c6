#include "kfqg/http_backends.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace kfqg {

using nlohmann::json;

namespace {

std::string env_or_empty(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

struct SplitUrl {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "backend url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

[[noreturn]] void throw_for_status(int status, const std::string& body, const std::string& what) {
  std::string msg = what + " returned HTTP " + std::to_string(status) + ": " + body.substr(0, 200);
  if (status == 429) throw Error(ErrorCode::RateLimited, msg);
  if (status == 404) throw Error(ErrorCode::PageNotFound, msg);
  if (status >= 500) throw Error(ErrorCode::BackendUnreachable, msg);
  throw Error(ErrorCode::InvalidArgument, msg);
}

json post_json(const HttpEndpoint& ep, const std::string& path, const json& body) {
  if (ep.base_url.empty()) throw Error(ErrorCode::InvalidConfig, "backend url is not configured");
  auto url = split_url(ep.base_url);
  return with_retry(ep.retry, [&]() -> json {
    httplib::Client client(url.origin);
    client.set_connection_timeout(ep.timeout);
    client.set_read_timeout(ep.timeout);
    httplib::Headers headers;
    if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
    auto res = client.Post(url.prefix + path, headers, body.dump(), "application/json");
    if (!res)
      throw Error(ErrorCode::BackendUnreachable,
                  url.origin + url.prefix + path + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw_for_status(res->status, res->body, url.prefix + path);
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BackendUnreachable, "malformed JSON from " + path + ": " + e.what());
    }
  });
}

WikiPage page_from_json(const json& j) {
  return {j.at("title").get<std::string>(), j.value("url", std::string()), j.value("definition", std::string()),
          j.value("body", std::string())};
}

}  // namespace

HttpEndpoint HttpEndpoint::from_env(std::string_view kind) {
  std::string upper;
  for (char c : kind) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  HttpEndpoint ep;
  ep.base_url = env_or_empty("KFQG_" + upper + "_URL");
  ep.model = env_or_empty("KFQG_" + upper + "_MODEL");
  ep.api_key = env_or_empty("KFQG_" + upper + "_API_KEY");
  if (ep.api_key.empty()) ep.api_key = env_or_empty("KFQG_API_KEY");
  return ep;
}

std::string HttpChat::do_complete(std::string_view prompt, const GenerationParams& params) const {
  json body = {{"model", endpoint_.model},
               {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
               {"temperature", params.temperature},
               {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  json reply = post_json(endpoint_, "/chat/completions", body);
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendUnreachable, std::string("unexpected chat reply shape: ") + e.what());
  }
}

Embedding HttpEmbedder::do_embed(std::string_view input) const {
  json reply = post_json(endpoint_, "/embeddings", {{"model", endpoint_.model}, {"input", std::string(input)}});
  Embedding e;
  try {
    e.values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::BackendUnreachable, std::string("unexpected embedding reply shape: ") + ex.what());
  }
  if (e.values.empty()) throw Error(ErrorCode::BackendUnreachable, "embedding reply is empty");
  std::size_t expected = 0;
  if (!dim_.compare_exchange_strong(expected, e.dim()) && expected != e.dim())
    throw Error(ErrorCode::BackendUnreachable, "embedding dimension changed between calls");
  return e;
}

TokenLogProbs HttpScorer::do_score(std::string_view condition, std::string_view target) const {
  json reply = post_json(endpoint_, "/score",
                         {{"model", endpoint_.model}, {"condition", std::string(condition)},
                          {"target", std::string(target)}});
  TokenLogProbs out;
  try {
    out.tokens = reply.at("tokens").get<std::vector<std::string>>();
    out.logprobs = reply.at("logprobs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TokenizationFailure, std::string("unexpected score reply shape: ") + e.what());
  }
  return out;
}

std::vector<WikiPage> HttpPageSource::do_search(const SearchQuery& query) const {
  json body = {{"body", query.must_body_contain}, {"limit", query.limit}};
  body["title"] = query.must_title_contain ? json(*query.must_title_contain) : json(nullptr);
  json reply = post_json(endpoint_, "/search", body);
  std::vector<WikiPage> pages;
  for (const auto& p : reply.at("pages")) pages.push_back(page_from_json(p));
  return pages;
}

WikiPage HttpPageSource::do_fetch(std::string_view title_or_url) const {
  return page_from_json(post_json(endpoint_, "/page", {{"id", std::string(title_or_url)}}));
}

}  // namespace kfqg
