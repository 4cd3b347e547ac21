#pragma once

#include <stdexcept>

namespace tailtree {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// tree construction / queries
struct CycleOrDisconnected : Error { using Error::Error; };
struct SelfLoop : Error { using Error::Error; };
struct DuplicateEdge : Error { using Error::Error; };
struct NodeOutOfRange : Error { using Error::Error; };
struct NotIdentifiable : Error { using Error::Error; };

// numeric kernels
struct NotPositiveDefinite : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct AllZeroInput : Error { using Error::Error; };
struct NonPositiveInput : Error { using Error::Error; };
struct BracketFailure : Error { using Error::Error; };

// estimation
struct DegenerateColumn : Error { using Error::Error; };
struct EmptyExceedanceSet : Error { using Error::Error; };
struct TooFewRows : Error { using Error::Error; };
struct SolverFailure : Error { using Error::Error; };
struct OptimizerDivergence : Error { using Error::Error; };
struct RankDeficientPairs : Error { using Error::Error; };

// inference
struct ResampleEstimationFailure : Error { using Error::Error; };
struct SingularJacobian : Error { using Error::Error; };

// pipeline / file formats
struct UnparseableTimestamp : Error { using Error::Error; };
struct RankDeficientDesign : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

}  // namespace tailtree
