#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairfl {

/// Failure classes surfaced by the library. The CLI maps each one to a
/// distinct exit code and a machine-readable tag.
enum class ErrorKind {
  invalid_argument,
  dataset,
  partition,
  unmeasurable,
  io,
  solver,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dataset: return "dataset";
    case ErrorKind::partition: return "partition";
    case ErrorKind::unmeasurable: return "unmeasurable";
    case ErrorKind::io: return "io";
    case ErrorKind::solver: return "solver";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A (group, label) cell needed for a rate is empty.
class UnmeasurableError : public Error {
 public:
  UnmeasurableError(int group, int label, const std::string& what)
      : Error(ErrorKind::unmeasurable, what), group_(group), label_(label) {}

  int group() const noexcept { return group_; }
  int label() const noexcept { return label_; }

 private:
  int group_;
  int label_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::invalid_argument, what);
}

}  // namespace fairfl
