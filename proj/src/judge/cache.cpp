#include <json.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "wimpe/judge.hpp"

namespace wimpe {

namespace fs = std::filesystem;
using nlohmann::json;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw CacheError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

fs::path ResponseCache::path_for(const std::string& hash) const { return dir_ / (hash + ".json"); }

std::shared_mutex& ResponseCache::lock_for(const std::string& hash) {
  return stripes_[std::hash<std::string>{}(hash) % stripes_.size()];
}

std::optional<JudgeTranscript> ResponseCache::load_unlocked(const std::string& hash) {
  const fs::path p = path_for(hash);
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  in.close();

  json j = json::parse(ss.str(), nullptr, false);
  std::string problem;
  JudgeTranscript t;
  if (j.is_discarded() || !j.is_object()) {
    problem = "unparsable entry";
  } else if (!j.contains("request_hash") || !j["request_hash"].is_string() ||
             !j.contains("raw_response") || !j["raw_response"].is_string() ||
             !j.contains("response_sha256") || !j["response_sha256"].is_string()) {
    problem = "entry lacks required fields";
  } else {
    t.request_hash = j["request_hash"].get<std::string>();
    t.raw_response = j["raw_response"].get<std::string>();
    t.tag = j.value("tag", "");
    t.timestamp = j.value("timestamp", "");
    if (t.request_hash != hash) {
      problem = "request hash mismatch";
    } else if (sha256_hex(t.raw_response) != j["response_sha256"].get<std::string>()) {
      problem = "response checksum mismatch";
    }
  }
  if (!problem.empty()) {
    evict_unlocked(hash);
    throw CacheError("corrupted cache entry " + hash + ": " + problem);
  }
  return t;
}

void ResponseCache::store_unlocked(const JudgeTranscript& t) {
  json j{{"request_hash", t.request_hash},
         {"tag", t.tag},
         {"raw_response", t.raw_response},
         {"response_sha256", sha256_hex(t.raw_response)},
         {"timestamp", t.timestamp}};
  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << t.request_hash << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << '.' << counter.fetch_add(1);
  const fs::path tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot write cache entry " + tmp.string());
    out << j.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    if (!out) throw CacheError("short write to cache entry " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path_for(t.request_hash), ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw CacheError("cannot commit cache entry " + t.request_hash);
  }
}

void ResponseCache::evict_unlocked(const std::string& hash) {
  std::error_code ec;
  fs::remove(path_for(hash), ec);
}

std::optional<JudgeTranscript> ResponseCache::load(const std::string& hash) {
  {
    std::shared_lock lock(lock_for(hash));
    std::ifstream probe(path_for(hash));
    if (!probe) return std::nullopt;
  }
  // Loading may evict, so it takes the writer side.
  std::unique_lock lock(lock_for(hash));
  return load_unlocked(hash);
}

void ResponseCache::store(const JudgeTranscript& t) {
  std::unique_lock lock(lock_for(t.request_hash));
  store_unlocked(t);
}

void ResponseCache::evict(const std::string& hash) {
  std::unique_lock lock(lock_for(hash));
  evict_unlocked(hash);
}

CachedCompletion cached_complete(Judge& backend, ResponseCache& cache, const JudgeRequest& req) {
  const std::string hash = backend.hash_of(req);
  std::unique_lock lock(cache.lock_for(hash));
  try {
    if (auto hit = cache.load_unlocked(hash)) return {hit->raw_response, true};
  } catch (const CacheError&) {
    // Entry already evicted; fall through to a fresh request.
  }
  std::string raw = backend.complete(req);
  cache.store_unlocked({hash, req.tag, raw, utc_timestamp_now()});
  return {std::move(raw), false};
}

std::string CachedJudge::complete(const JudgeRequest& req) {
  CachedCompletion c = cached_complete(*backend_, *cache_, req);
  (c.served_from_cache ? hits_ : misses_).fetch_add(1);
  return std::move(c.text);
}

void CachedJudge::discard(const JudgeRequest& req) {
  cache_->evict(backend_->hash_of(req));
  backend_->discard(req);
}

}  // namespace wimpe
