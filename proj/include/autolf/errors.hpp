#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace autolf {

// Base of every error the engine raises. `code()` is a stable machine name
// used in error JSON written by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define AUTOLF_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

AUTOLF_DEFINE_ERROR(PreconditionError)
AUTOLF_DEFINE_ERROR(UnknownLabel)
AUTOLF_DEFINE_ERROR(DuplicateId)
AUTOLF_DEFINE_ERROR(EmptySelection)
AUTOLF_DEFINE_ERROR(EmptyLfSet)
AUTOLF_DEFINE_ERROR(ProviderUnreachable)
AUTOLF_DEFINE_ERROR(MalformedProviderReply)
AUTOLF_DEFINE_ERROR(EmptyVocabulary)
AUTOLF_DEFINE_ERROR(DegenerateSubsample)
AUTOLF_DEFINE_ERROR(DimensionMismatch)
AUTOLF_DEFINE_ERROR(AllWeightsZero)
AUTOLF_DEFINE_ERROR(NoSignal)
AUTOLF_DEFINE_ERROR(LengthMismatch)
AUTOLF_DEFINE_ERROR(IdAlignment)
AUTOLF_DEFINE_ERROR(DegenerateTargets)
AUTOLF_DEFINE_ERROR(IoError)

#undef AUTOLF_DEFINE_ERROR

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& what)
      : Error("MalformedRecord", "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace autolf
