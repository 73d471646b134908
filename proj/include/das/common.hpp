#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace das {

/// Simulated time and durations, in nanoseconds.
using TimeNs = double;

using ClusterId = int;
using PeId = int;
using TaskTypeId = int;
using AppId = int;
using NodeId = int;
using InstanceId = int;
using JobId = int;

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a configuration fails validation; carries every violation found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Scheduling policy tag recorded on each decision: fast (LUT) or slow (ETF).
enum class PolicyTag : std::uint8_t { Fast, Slow };

inline char tag_char(PolicyTag t) { return t == PolicyTag::Fast ? 'F' : 'S'; }

}  // namespace das
