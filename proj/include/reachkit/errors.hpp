#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reachkit {

enum class ErrorCode {
  kInvalidArgument,
  kDomainEscape,
  kEvaluation,
  kNonuniqueGeodesic,
  kConvergence,
  kResolution,
  kDegeneratePlane,
  kImmersionDegeneracy,
  kProjectionFailure,
  kInvalidReach,
  kInvalidConfiguration,
  kConvention,
  kScanFailure,
};

std::string_view to_string(ErrorCode code);

// Numeric or geometric failure raised by the library.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed or unresolvable scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reachkit
