#include <openssl/evp.h>

#include <cmath>
#include <ctime>
#include <exception>
#include <thread>

#include "wimpe/judge.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

void JudgeConfig::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("judge temperature must be >= 0");
  }
  if (max_retries < 0) throw ConfigError("judge max_retries must be >= 0");
  if (workers == 0) throw ConfigError("judge workers must be >= 1");
  if (model_name.empty()) throw ConfigError("judge model name is empty");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string request_hash(std::string_view model_name, double temperature,
                         std::string_view prompt_text) {
  std::string material;
  material.reserve(model_name.size() + prompt_text.size() + 32);
  material.append(model_name);
  material.push_back('\x1f');
  material.append(text::format_number(temperature));
  material.push_back('\x1f');
  material.append(prompt_text);
  return sha256_hex(material);
}

std::string utc_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void bounded_parallel_for(std::size_t n, std::size_t workers,
                          const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace wimpe
