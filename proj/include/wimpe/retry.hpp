#pragma once

#include <string>
#include <utility>

#include "wimpe/judge.hpp"

namespace wimpe {

// Issues `req` and parses the reply with `parse`. A GrammarError discards the
// reply and re-issues the call, at most `parse_retries` more times. Transport
// failures propagate untouched.
template <class Parse>
auto call_with_parse_retries(Judge& judge, const JudgeRequest& req, int parse_retries,
                             const std::string& what, Parse&& parse) {
  std::string last_raw;
  std::string last_error;
  for (int attempt = 0; attempt <= parse_retries; ++attempt) {
    last_raw = judge.complete(req);
    try {
      return parse(last_raw);
    } catch (const GrammarError& e) {
      last_error = e.what();
      judge.discard(req);
    }
  }
  throw JudgeOutputError(what + " failed after " + std::to_string(parse_retries + 1) +
                             " attempt(s): " + last_error,
                         std::move(last_raw));
}

}  // namespace wimpe
