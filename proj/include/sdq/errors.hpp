#pragma once

#include <stdexcept>
#include <string>

namespace sdq {

// Stable error codes; the C API and the CLI exit status both key off these.
enum class Err : int {
  None = 0,
  ParseError = 1,

  // model validation
  NonPositiveDownRate = 10,
  NegativeRate = 11,
  DownJumpTooFar = 12,
  AllZeroKilling = 13,
  InfiniteRowRate = 14,

  // table / query domain
  TailUnavailable = 20,
  LevelExceeded = 21,
  InvalidQuery = 22,
  InvalidArgument = 23,

  // numerical failures
  NumericalUnderflow = 30,
  NumericalOverflow = 31,
  EigSolverFailure = 32,
  SingularSystem = 33,
  IterationDivergence = 34,
  NegativeMass = 35,
  NotNormalizable = 36,

  // hypothesis gates
  SmallKillingNotEstablished = 40,
  HypothesisNotEstablished = 41,

  // simulation
  NoSurvivors = 50,
  TooManyCensored = 51,
};

struct Error : std::runtime_error {
  Err code;
  Error(Err c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void fail(Err c, const std::string& msg) { throw Error(c, msg); }

inline const char* err_name(Err c) {
  switch (c) {
    case Err::None: return "ok";
    case Err::ParseError: return "ParseError";
    case Err::NonPositiveDownRate: return "NonPositiveDownRate";
    case Err::NegativeRate: return "NegativeRate";
    case Err::DownJumpTooFar: return "DownJumpTooFar";
    case Err::AllZeroKilling: return "AllZeroKilling";
    case Err::InfiniteRowRate: return "InfiniteRowRate";
    case Err::TailUnavailable: return "TailUnavailable";
    case Err::LevelExceeded: return "LevelExceeded";
    case Err::InvalidQuery: return "InvalidQuery";
    case Err::InvalidArgument: return "InvalidArgument";
    case Err::NumericalUnderflow: return "NumericalUnderflow";
    case Err::NumericalOverflow: return "NumericalOverflow";
    case Err::EigSolverFailure: return "EigSolverFailure";
    case Err::SingularSystem: return "SingularSystem";
    case Err::IterationDivergence: return "IterationDivergence";
    case Err::NegativeMass: return "NegativeMass";
    case Err::NotNormalizable: return "NotNormalizable";
    case Err::SmallKillingNotEstablished: return "SmallKillingNotEstablished";
    case Err::HypothesisNotEstablished: return "HypothesisNotEstablished";
    case Err::NoSurvivors: return "NoSurvivors";
    case Err::TooManyCensored: return "TooManyCensored";
  }
  return "unknown";
}

// CLI exit-status groups: 0 ok, 1 usage/parse, 2 validation, 3 numerical,
// 4 hypothesis-not-established, 5 other runtime.
inline int exit_group(Err c) {
  int v = static_cast<int>(c);
  if (v == 0) return 0;
  if (v == 1) return 1;
  if (v < 20) return 2;
  if (v < 30) return 5;
  if (v < 40) return 3;
  if (v < 50) return 4;
  return 5;
}

}  // namespace sdq
