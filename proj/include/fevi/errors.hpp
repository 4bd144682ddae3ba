#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fevi {

/// Failure categories raised by the library. Each maps to one exception type
/// (fevi::Error) carrying the code so callers can branch without string matching.
enum class Errc {
  EmptyActionSet,
  EmptySupport,
  DiscountOutOfRange,
  NonFiniteReward,
  NonStochasticModel,
  UnsupportedSuccessor,
  NonFiniteValue,
  AbsoluteContinuityViolation,
  InvalidBelief,
  NonFiniteFreeEnergy,
  PreconditionViolation,
  MaxIterationsExceeded,
  NonRectangular,
  UnknownCell,
  MissingStart,
  MissingGoal,
  MultipleStart,
  MultipleGoal,
  ArrowIntoWall,
  GoalUnreachable,
  UnavailableAction,
  MissingPolicyRow,
  ParseError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyActionSet: return "EmptyActionSet";
    case Errc::EmptySupport: return "EmptySupport";
    case Errc::DiscountOutOfRange: return "DiscountOutOfRange";
    case Errc::NonFiniteReward: return "NonFiniteReward";
    case Errc::NonStochasticModel: return "NonStochasticModel";
    case Errc::UnsupportedSuccessor: return "UnsupportedSuccessor";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::AbsoluteContinuityViolation: return "AbsoluteContinuityViolation";
    case Errc::InvalidBelief: return "InvalidBelief";
    case Errc::NonFiniteFreeEnergy: return "NonFiniteFreeEnergy";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case Errc::NonRectangular: return "NonRectangular";
    case Errc::UnknownCell: return "UnknownCell";
    case Errc::MissingStart: return "MissingStart";
    case Errc::MissingGoal: return "MissingGoal";
    case Errc::MultipleStart: return "MultipleStart";
    case Errc::MultipleGoal: return "MultipleGoal";
    case Errc::ArrowIntoWall: return "ArrowIntoWall";
    case Errc::GoalUnreachable: return "GoalUnreachable";
    case Errc::UnavailableAction: return "UnavailableAction";
    case Errc::MissingPolicyRow: return "MissingPolicyRow";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fevi
