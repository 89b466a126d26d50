#pragma once
// Shared primitives: complex alias, error type with machine-readable codes,
// and a per-thread warning channel drained by callers (the CLI echoes it).

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cqnls {

using cplx = std::complex<double>;

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
  throw Error(code, msg);
}

namespace warnings {

inline thread_local std::vector<std::string> log;

inline void emit(std::string msg) { log.push_back(std::move(msg)); }

inline std::vector<std::string> drain() {
  std::vector<std::string> out = std::move(log);
  log.clear();
  return out;
}

}  // namespace warnings

}  // namespace cqnls
