#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace wimpe {

// Root of every exception the library throws on purpose. Anything else
// escaping a public entry point is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  DatasetError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

// Judge output that does not follow the expected output grammar.
class GrammarError : public Error {
 public:
  using Error::Error;
};

// Two lists that should describe the same points do not line up.
class PairingError : public Error {
 public:
  using Error::Error;
};

// Every attempt at a judge-backed step produced unparsable output.
class JudgeOutputError : public Error {
 public:
  JudgeOutputError(const std::string& what, std::string last_raw)
      : Error(what), last_raw_(std::move(last_raw)) {}

  const std::string& last_raw() const noexcept { return last_raw_; }

 private:
  std::string last_raw_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class StatusError : public Error {
 public:
  StatusError(int status, const std::string& body_excerpt)
      : Error("judge endpoint returned HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class FixtureMissingError : public Error {
 public:
  using Error::Error;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

}  // namespace wimpe
