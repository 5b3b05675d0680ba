#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wimpe/error.hpp"

namespace wimpe {

struct JudgeConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-4o";
  double temperature = 0.5;
  int max_retries = 3;
  std::chrono::milliseconds timeout{120000};
  // Name of the environment variable holding the API key, never the key.
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<int> max_tokens;
  std::optional<std::string> system_prompt;
  std::chrono::milliseconds backoff_initial{500};
  std::size_t workers = 4;

  void validate() const;
};

namespace tags {
inline constexpr std::string_view kPoints = "points";
inline constexpr std::string_view kWpa = "wpa";
inline constexpr std::string_view kPcp = "pcp";
inline constexpr std::string_view kCoarse3 = "coarse3";
inline constexpr std::string_view kRank = "rank";
inline constexpr std::string_view kRubric = "rubric";
inline constexpr std::string_view kPromptOptim = "prompt_optim";
inline constexpr std::string_view kErrorType = "error_type";
}  // namespace tags

struct JudgeRequest {
  std::string prompt_text;
  std::string tag;
};

struct JudgeTranscript {
  std::string request_hash;
  std::string tag;
  std::string raw_response;
  std::string timestamp;  // ISO-8601 UTC

  bool operator==(const JudgeTranscript&) const = default;
};

std::string sha256_hex(std::string_view data);

// Stable key for a judge call. The endpoint is deliberately not part of it.
std::string request_hash(std::string_view model_name, double temperature,
                         std::string_view prompt_text);

std::string utc_timestamp_now();

class Judge {
 public:
  virtual ~Judge() = default;

  // Returns the judge's raw text for one prompt.
  virtual std::string complete(const JudgeRequest& req) = 0;

  // Signals that the response to `req` failed downstream parsing. Caching
  // layers drop the entry so a retry reaches the backend.
  virtual void discard(const JudgeRequest& req) { (void)req; }

  virtual std::string model_name() const = 0;
  virtual double temperature() const = 0;

  std::string hash_of(const JudgeRequest& req) const {
    return request_hash(model_name(), temperature(), req.prompt_text);
  }
};

// ---- wire client ----

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  // Throws TransportError when no HTTP response was obtained.
  virtual HttpResponse post(const std::string& url, const HttpHeaders& headers,
                            const std::string& body, std::chrono::milliseconds timeout) = 0;
};

std::shared_ptr<HttpTransport> make_default_transport();

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// OpenAI-compatible chat-completions client: one user message carrying the
// whole prompt. Retries transport failures and 5xx/429 with exponential
// backoff; other statuses fail immediately.
class HttpJudge : public Judge {
 public:
  explicit HttpJudge(JudgeConfig cfg, std::shared_ptr<HttpTransport> transport = nullptr,
                     Sleeper sleeper = nullptr);

  std::string complete(const JudgeRequest& req) override;
  std::string model_name() const override { return cfg_.model_name; }
  double temperature() const override { return cfg_.temperature; }

  static std::string build_body(const JudgeConfig& cfg, const JudgeRequest& req);
  // Content of the first choice's message.
  static std::string extract_content(const std::string& body);

 private:
  JudgeConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

std::string complete(const JudgeConfig& cfg, const JudgeRequest& req);

// ---- persistent cache ----

// One JSON file per request hash. Reads of a key may run concurrently;
// writes to a key are serialized.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(const std::string& hash) const;

  // nullopt on miss. A corrupted entry is evicted and reported as CacheError.
  std::optional<JudgeTranscript> load(const std::string& hash);
  void store(const JudgeTranscript& t);
  void evict(const std::string& hash);

  std::shared_mutex& lock_for(const std::string& hash);

  std::optional<JudgeTranscript> load_unlocked(const std::string& hash);
  void store_unlocked(const JudgeTranscript& t);
  void evict_unlocked(const std::string& hash);

 private:
  std::filesystem::path dir_;
  std::array<std::shared_mutex, 64> stripes_;
};

struct CachedCompletion {
  std::string text;
  bool served_from_cache = false;
};

CachedCompletion cached_complete(Judge& backend, ResponseCache& cache, const JudgeRequest& req);

class CachedJudge : public Judge {
 public:
  CachedJudge(std::shared_ptr<Judge> backend, std::shared_ptr<ResponseCache> cache)
      : backend_(std::move(backend)), cache_(std::move(cache)) {}

  std::string complete(const JudgeRequest& req) override;
  void discard(const JudgeRequest& req) override;
  std::string model_name() const override { return backend_->model_name(); }
  double temperature() const override { return backend_->temperature(); }

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<Judge> backend_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// ---- mock judge ----

enum class MockBehavior { echo_fixture, scripted };

// Canned responses keyed by (tag, request hash). A hash of "*" matches any
// prompt with that tag. A key with several responses hands them out in
// order and then keeps repeating the last one.
class FixtureTable {
 public:
  void add(std::string tag, std::string hash, std::vector<std::string> responses);
  void add(std::string tag, std::string hash, std::string response) {
    add(std::move(tag), std::move(hash), std::vector<std::string>{std::move(response)});
  }

  // Loads {"tag": ..., "hash": ..., "response": ... | "responses": [...]} per line.
  static FixtureTable load_jsonl(const std::filesystem::path& path);

  const std::vector<std::string>* find(const std::string& tag, const std::string& hash) const;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> entries_;
};

class MockJudge : public Judge {
 public:
  MockJudge(std::uint64_t seed, MockBehavior behavior, FixtureTable fixtures = {},
            std::string model = "mock-judge", double temperature = 0.5);

  std::string complete(const JudgeRequest& req) override;
  std::string model_name() const override { return model_; }
  double temperature() const override { return temperature_; }

  std::size_t calls() const { return calls_.load(); }
  std::size_t calls_for(std::string_view tag) const;
  std::vector<JudgeTranscript> transcripts() const;

 private:
  std::string echo(const JudgeRequest& req) const;

  std::uint64_t seed_;
  MockBehavior behavior_;
  FixtureTable fixtures_;
  std::string model_;
  double temperature_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::size_t> cursors_;
  std::vector<JudgeTranscript> transcripts_;
};

std::unique_ptr<Judge> mock_judge(std::uint64_t seed, MockBehavior behavior,
                                  FixtureTable fixtures = {});

// Runs fn(0..n-1) on at most `workers` threads. The first exception thrown
// by any task is rethrown after all workers finish.
void bounded_parallel_for(std::size_t n, std::size_t workers,
                          const std::function<void(std::size_t)>& fn);

}  // namespace wimpe
