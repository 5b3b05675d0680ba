#ifdef WIMPE_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

#include "wimpe/judge.hpp"

namespace wimpe {

using nlohmann::json;

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                    std::chrono::milliseconds timeout) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError("endpoint URL lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    if (!client.is_valid()) throw TransportError("unsupported endpoint URL: " + origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }
};

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::string excerpt(const std::string& s, std::size_t n = 200) {
  return s.size() <= n ? s : s.substr(0, n) + "...";
}

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() { return std::make_shared<HttplibTransport>(); }

HttpJudge::HttpJudge(JudgeConfig cfg, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)),
      transport_(transport ? std::move(transport) : make_default_transport()),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {
  cfg_.validate();
}

std::string HttpJudge::build_body(const JudgeConfig& cfg, const JudgeRequest& req) {
  json messages = json::array();
  if (cfg.system_prompt) messages.push_back({{"role", "system"}, {"content", *cfg.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", req.prompt_text}});
  json body{{"model", cfg.model_name}, {"temperature", cfg.temperature}, {"messages", messages}};
  if (cfg.max_tokens) body["max_tokens"] = *cfg.max_tokens;
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string HttpJudge::extract_content(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw TransportError("judge response body is not JSON: " + excerpt(body));
  }
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw TransportError("judge response has no choices: " + excerpt(body));
  }
  const json& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
    throw TransportError("judge response choice has no message: " + excerpt(body));
  }
  const json& content = first["message"].value("content", json());
  if (!content.is_string()) throw TransportError("judge response content is not a string");
  return content.get<std::string>();
}

std::string HttpJudge::complete(const JudgeRequest& req) {
  if (req.prompt_text.empty()) throw PreconditionError("judge prompt is empty");
  HttpHeaders headers{{"Accept", "application/json"}};
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  const std::string body = build_body(cfg_, req);

  auto delay = cfg_.backoff_initial;
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= cfg_.max_retries;
    try {
      HttpResponse res = transport_->post(cfg_.endpoint_url, headers, body, cfg_.timeout);
      if (res.status >= 200 && res.status < 300) return extract_content(res.body);
      if (!retryable_status(res.status) || last) throw StatusError(res.status, excerpt(res.body));
    } catch (const TransportError& e) {
      if (last) {
        throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) +
                             " attempt(s))");
      }
    }
    sleeper_(delay);
    delay *= 2;
  }
}

std::string complete(const JudgeConfig& cfg, const JudgeRequest& req) {
  HttpJudge judge(cfg);
  return judge.complete(req);
}

}  // namespace wimpe
