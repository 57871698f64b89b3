#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evadex {

enum class ErrorCode {
  // Input and data errors.
  MissingFile,
  RaggedRow,
  NonNumericCell,
  UnknownLabelColumn,
  InvalidLabel,
  EmptyDataset,
  DegenerateLabels,
  IndexOutOfRange,
  ShapeMismatch,
  VersionMismatch,
  Corrupt,
  // Configuration errors.
  InvalidConfig,
  InvalidFraction,
  InvalidTarget,
  // Attack preconditions.
  NoBackgroundFeatures,
  EmptyCandidateSet,
  // Metric preconditions.
  ZeroPerturbations,
  // Numerical failures.
  Singular,
};

std::string_view to_string(ErrorCode code);

/// Exception type thrown by every library operation. The code identifies the
/// failure class; row/column are set for cell-level ingestion errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, const std::string& message, std::size_t row,
        std::size_t col);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  std::optional<std::size_t> col() const noexcept { return col_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> row_;
  std::optional<std::size_t> col_;
};

}  // namespace evadex
