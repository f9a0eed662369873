#ifndef SHIFTKIT_ERRORS_HPP
#define SHIFTKIT_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace shiftkit {

// Domain error with a stable, machine-readable name. The name is part of the
// CLI contract: it is emitted verbatim in error reports and drives exit codes,
// so it must not change once released. Shape and schema problems are reported
// as std::invalid_argument instead (usage errors, not domain errors).
class ShiftError : public std::runtime_error {
 public:
  ShiftError(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

namespace errors {

inline constexpr const char* kAbsoluteContinuityViolation = "AbsoluteContinuityViolation";
inline constexpr const char* kImplicationViolation = "ImplicationViolation";
inline constexpr const char* kNotEquivalent = "NotEquivalent";
inline constexpr const char* kUndetermined = "Undetermined";
inline constexpr const char* kInconsistentInputs = "InconsistentInputs";
inline constexpr const char* kNoConvergence = "NoConvergence";
inline constexpr const char* kNotBinary = "NotBinary";
inline constexpr const char* kPreconditionFailed = "PreconditionFailed";
inline constexpr const char* kNotSufficient = "NotSufficient";
inline constexpr const char* kNotGroupInvariant = "NotGroupInvariant";
inline constexpr const char* kMissingInput = "MissingInput";
inline constexpr const char* kAllRejected = "AllRejected";
inline constexpr const char* kNotFJS = "NotFJS";
inline constexpr const char* kInvalidDistribution = "InvalidDistribution";

}  // namespace errors

}  // namespace shiftkit

#endif  // SHIFTKIT_ERRORS_HPP
