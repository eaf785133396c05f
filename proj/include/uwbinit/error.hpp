#pragma once

#include <stdexcept>
#include <string>

namespace uwbinit {

enum class Errc {
  InsufficientSamples,
  DegenerateDirection,
  DegenerateGeometry,
  OutOfOrder,
  Diverged,
  NoBracketingPoses,
  PoseGap,
  InvalidArgument,
  Parse,
  Config,
  Io,
};

const char* to_string(Errc code);

/// Base error for everything thrown by the library. The message always
/// starts with the short reason string of `code()`.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                          : std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by the linear solver when the stacked system loses column rank.
class DegenerateGeometryError : public Error {
 public:
  DegenerateGeometryError(int rank, int required)
      : Error(Errc::DegenerateGeometry,
              "rank " + std::to_string(rank) + " < " + std::to_string(required)),
        rank_(rank) {}

  int rank() const noexcept { return rank_; }

 private:
  int rank_;
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::InsufficientSamples: return "insufficient samples";
    case Errc::DegenerateDirection: return "degenerate direction";
    case Errc::DegenerateGeometry: return "degenerate geometry";
    case Errc::OutOfOrder: return "out-of-order timestamp";
    case Errc::Diverged: return "diverged";
    case Errc::NoBracketingPoses: return "no bracketing poses";
    case Errc::PoseGap: return "pose gap";
    case Errc::InvalidArgument: return "invalid argument";
    case Errc::Parse: return "parse error";
    case Errc::Config: return "invalid config";
    case Errc::Io: return "io error";
  }
  return "unknown error";
}

}  // namespace uwbinit
