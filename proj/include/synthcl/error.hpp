#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synthcl {

enum class Errc {
  ZeroNorm,
  LengthMismatch,
  KTooLarge,
  BadRange,
  BadShape,
  ShapeMismatch,
  DimMismatch,
  NotNormalized,
  EmptyQueue,
  EmptyInput,
  NoNegatives,
  BadConfig,
  BadLabels,
  Unlabeled,
  IoError,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  ChecksumMismatch,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised for invalid user configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Errc::BadConfig, what) {}
};

}  // namespace synthcl
