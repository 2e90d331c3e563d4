#pragma once

#include <stdexcept>
#include <string>

namespace dmst {

enum class ErrorCode {
  InvalidConfig,
  AllOccluded,
  DegenerateTorso,
  TooFewSamples,
  DimensionMismatch,
  BothEmpty,
  SingularInnovation,
  EmptyParticleSet,
  EmptyGallery,
  MalformedMessage,
  ParseError,
  InvalidSpec,
  Io,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dmst
