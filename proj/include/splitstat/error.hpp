#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splitstat {

enum class Errc {
  invalid_argument,
  insufficient_sample,
  insufficient_replicates,
  empty_result,
  infeasible,
  invalid_variance,
  schema,
  parse,
  empty_data,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::insufficient_sample: return "insufficient-sample";
    case Errc::insufficient_replicates: return "insufficient-replicates";
    case Errc::empty_result: return "empty-result";
    case Errc::infeasible: return "infeasible";
    case Errc::invalid_variance: return "invalid-variance";
    case Errc::schema: return "schema";
    case Errc::parse: return "parse";
    case Errc::empty_data: return "empty-data";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised when a budgeted run finishes zero iterations.
class EmptyResultError : public Error {
 public:
  EmptyResultError(const std::string& what, std::size_t completed = 0)
      : Error(Errc::empty_result, what), completed_(completed) {}

  std::size_t completed() const noexcept { return completed_; }

 private:
  std::size_t completed_;
};

namespace detail {

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace detail
}  // namespace splitstat
