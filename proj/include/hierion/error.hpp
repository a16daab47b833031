#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hierion {

enum class ErrorCode {
  InvalidArgument,
  ObjectUniverseMismatch,
  DistributionNotDisjoint,
  TooShortSeries,
  NonMonotoneTicks,
  BreakpointOutOfRange,
  NoPredicateSatisfied,
  DisjointnessViolated,
  MissingData,
  EmptySchedule,
  IntervalOrderViolation,
  InvalidChild,
  IntervalMismatch,
  OverlappingBlocks,
  UncoveredRequiredTuple,
  OrderInconsistent,
  UnknownStateId,
  MalformedScenario,
  AmbiguousArc,
  UnknownSupportState,
  ParseError,
  DanglingReference,
  ValidationFailed,
  UnreadableInput,
  MissingReport,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the engine carries a machine-readable code, an
// optional list of report lines (validators) and an optional model tick.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> report = {},
        std::optional<std::int64_t> tick = std::nullopt)
      : std::runtime_error(message),
        code_(code),
        report_(std::move(report)),
        tick_(tick) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& report() const noexcept { return report_; }
  std::optional<std::int64_t> tick() const noexcept { return tick_; }

  // Same error with `prefix: ` prepended to the message (stage or object tags).
  Error annotated(const std::string& prefix) const {
    return Error(code_, prefix + ": " + what(), report_, tick_);
  }

 private:
  ErrorCode code_;
  std::vector<std::string> report_;
  std::optional<std::int64_t> tick_;
};

}  // namespace hierion
