#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace llmad {

/// Wording used for data points in prompts and canonical answers.
enum class NamingScheme { kData, kRow };

/// "Data" or "Row".
std::string_view noun(NamingScheme naming);
/// The system message matching the naming scheme.
std::string_view system_message(NamingScheme naming);
NamingScheme parse_naming(std::string_view text);

inline constexpr std::string_view kDefaultTaskDescription =
    "Abnormal data are different from the majority. Which data are abnormal?";

/// A dense N x K table of finite reals, optionally labelled (1 = anomaly).
///
/// Row ids are the 1-based indices used in serialized prompts and parsed
/// answers. Construction does not validate; call validate_batch().
class DataBatch {
 public:
  DataBatch() = default;
  DataBatch(std::size_t rows, std::size_t cols);
  /// Builds from row-major nested vectors. All rows must have equal length.
  static DataBatch from_rows(const std::vector<std::vector<double>>& rows,
                             std::optional<std::vector<int>> labels = {});
  static DataBatch from_column(std::span<const double> column,
                               std::optional<std::vector<int>> labels = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double at(std::size_t row, std::size_t col) const {
    return values_[row * cols_ + col];
  }
  double& at(std::size_t row, std::size_t col) {
    return values_[row * cols_ + col];
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::vector<double> column(std::size_t c) const;
  std::span<const double> values() const { return values_; }

  const std::optional<std::vector<int>>& labels() const { return labels_; }
  void set_labels(std::optional<std::vector<int>> labels) {
    labels_ = std::move(labels);
  }
  const std::vector<std::int64_t>& row_ids() const { return row_ids_; }
  void set_row_ids(std::vector<std::int64_t> ids) { row_ids_ = std::move(ids); }

  friend bool operator==(const DataBatch&, const DataBatch&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::optional<std::vector<int>> labels_;
  std::vector<std::int64_t> row_ids_;
};

/// Checks shape, label and finiteness invariants. Returns the batch unchanged
/// or throws InvalidArgument.
const DataBatch& validate_batch(const DataBatch& batch);

/// Per-row count of columns whose answer flagged the row.
struct AnomalyScores {
  std::vector<std::int32_t> counts;

  std::vector<double> as_doubles() const {
    return {counts.begin(), counts.end()};
  }
  friend bool operator==(const AnomalyScores&, const AnomalyScores&) = default;
};

struct DetectorConfig {
  NamingScheme naming = NamingScheme::kData;
  int max_parallel_columns = 4;
  std::string prompt_text{kDefaultTaskDescription};
  int decimal_places = 2;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

}  // namespace llmad
