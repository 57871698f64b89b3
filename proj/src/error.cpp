#include "evadex/error.hpp"

namespace evadex {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::UnknownLabelColumn: return "UnknownLabelColumn";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Corrupt: return "Corrupt";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::NoBackgroundFeatures: return "NoBackgroundFeatures";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::ZeroPerturbations: return "ZeroPerturbations";
    case ErrorCode::Singular: return "Singular";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

Error::Error(ErrorCode code, const std::string& message, std::size_t row,
             std::size_t col)
    : std::runtime_error(std::string(to_string(code)) + ": " + message +
                         " (row " + std::to_string(row) + ", col " +
                         std::to_string(col) + ")"),
      code_(code),
      row_(row),
      col_(col) {}

}  // namespace evadex
