#pragma once

#include <stdexcept>
#include <string>

namespace guidemap {

enum class Errc {
  kCoordinateRange,
  kParameter,
  kNumericDomain,
  kShape,
  kConfiguration,
  kDegenerateScale,
  kEmptyObject,
  kIo,
  kDecode,
  kNotFound,
  kPayloadTooLarge,
};

const char* errc_name(Errc code) noexcept;

/// Exception type thrown by every guidemap operation. The code lets callers
/// (CLI, HTTP layer) map failures onto exit statuses or response codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace guidemap
