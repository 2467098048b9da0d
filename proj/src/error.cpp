#include "gromovlab/error.hpp"

namespace gromovlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AsymmetricDistance: return "AsymmetricDistance";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::TriangleViolation: return "TriangleViolation";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::WeightSumMismatch: return "WeightSumMismatch";
    case ErrorCode::CoordDistMismatch: return "CoordDistMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::SharedMarginalMismatch: return "SharedMarginalMismatch";
    case ErrorCode::MissingCoords: return "MissingCoords";
    case ErrorCode::MarginalMismatch: return "MarginalMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NumericalOverflow: return "NumericalOverflow";
    case ErrorCode::TensorTooLarge: return "TensorTooLarge";
    case ErrorCode::AnchorNotOptimal: return "AnchorNotOptimal";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace gromovlab
