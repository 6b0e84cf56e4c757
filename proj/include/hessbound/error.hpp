#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hessbound {

enum class Errc {
  ZeroVector,
  DimMismatch,
  TooLarge,
  NotSymmetric,
  ShapeMismatch,
  InvalidLabel,
  UnsupportedArchitecture,
  EmptyClass,
  UnknownKind,
  ParseError,
  WrongColumnCount,
  BadMagic,
  TruncatedFile,
  NotEnoughSamples,
  WrongDim,
  ClassTooSmall,
  Diverged,
  AuxTrainingFailed,
  NoProgress,
  Io,
  Config,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure surfaced by the library carries one of the codes above so the
// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hessbound
