#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmad/backends.hpp"
#include "llmad/batch.hpp"
#include "llmad/parser.hpp"

namespace llmad {

/// Outcome of one column's round trip through the backend.
struct ColumnResult {
  std::size_t column_index = 0;
  std::string raw_response;
  /// Set when the backend answered.
  std::optional<ParsedPrediction> prediction;
  /// Set when the backend failed.
  std::string error;

  bool ok() const { return prediction.has_value(); }
};

struct ColumnFailure {
  std::size_t column_index = 0;
  std::string message;
};

struct DetectionReport {
  AnomalyScores scores;
  std::vector<ColumnResult> per_column;
  std::vector<ColumnFailure> failures;

  std::size_t successful_columns() const {
    return per_column.size() - failures.size();
  }
};

/// Thrown by detect_batch when no column succeeded.
class DetectionError : public Error {
 public:
  using Error::Error;
};

/// Prompt, ask and parse one column; also returns the raw answer text.
ColumnResult detect_column_verbose(std::span<const double> column,
                                   const DetectorConfig& config,
                                   ChatBackend& backend,
                                   std::size_t column_index = 0);

/// Prompt, ask and parse one column. Backend errors propagate as
/// BackendError with the column index in the message.
ParsedPrediction detect_column(std::span<const double> column,
                               const DetectorConfig& config,
                               ChatBackend& backend,
                               std::size_t column_index = 0);

/// Per-column detection with score aggregation: s_i counts the successful
/// columns whose answer contains row i. Columns run concurrently, at most
/// config.max_parallel_columns at a time. Failed columns are recorded and
/// contribute nothing.
DetectionReport detect_batch(const DataBatch& batch,
                             const DetectorConfig& config,
                             ChatBackend& backend);

/// Sums per-column predictions into scores for `rows` rows. Indices outside
/// 1..rows are ignored.
AnomalyScores aggregate_scores(std::span<const ParsedPrediction> predictions,
                               std::size_t rows);

}  // namespace llmad
