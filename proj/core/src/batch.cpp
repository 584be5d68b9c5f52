#include "llmad/batch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llmad/error.hpp"

namespace llmad {

std::string_view noun(NamingScheme naming) {
  return naming == NamingScheme::kRow ? "Row" : "Data";
}

std::string_view system_message(NamingScheme naming) {
  return naming == NamingScheme::kRow ? "Only answer row numbers."
                                      : "Only answer data indices.";
}

NamingScheme parse_naming(std::string_view text) {
  if (text == "data" || text == "Data") return NamingScheme::kData;
  if (text == "row" || text == "Row") return NamingScheme::kRow;
  throw InvalidArgument("unknown naming scheme '" + std::string(text) +
                        "' (expected data or row)");
}

namespace {

std::vector<std::int64_t> default_row_ids(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::int64_t{1});
  return ids;
}

}  // namespace

DataBatch::DataBatch(std::size_t rows, std::size_t cols)
    : rows_(rows),
      cols_(cols),
      values_(rows * cols, 0.0),
      row_ids_(default_row_ids(rows)) {}

DataBatch DataBatch::from_rows(const std::vector<std::vector<double>>& rows,
                               std::optional<std::vector<int>> labels) {
  const std::size_t k = rows.empty() ? 0 : rows.front().size();
  DataBatch batch(rows.size(), k);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != k) {
      throw InvalidArgument("row " + std::to_string(r + 1) + " has " +
                            std::to_string(rows[r].size()) +
                            " values, expected " + std::to_string(k));
    }
    for (std::size_t c = 0; c < k; ++c) batch.at(r, c) = rows[r][c];
  }
  batch.labels_ = std::move(labels);
  return batch;
}

DataBatch DataBatch::from_column(std::span<const double> column,
                                 std::optional<std::vector<int>> labels) {
  DataBatch batch(column.size(), column.empty() ? 0 : 1);
  std::copy(column.begin(), column.end(), batch.values_.begin());
  batch.labels_ = std::move(labels);
  return batch;
}

std::vector<double> DataBatch::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
  return out;
}

const DataBatch& validate_batch(const DataBatch& batch) {
  if (batch.rows() == 0 || batch.cols() == 0) {
    throw InvalidArgument("empty table: " + std::to_string(batch.rows()) +
                          "x" + std::to_string(batch.cols()));
  }
  if (batch.labels()) {
    const auto& labels = *batch.labels();
    if (labels.size() != batch.rows()) {
      throw InvalidArgument("label length " + std::to_string(labels.size()) +
                            " does not match row count " +
                            std::to_string(batch.rows()));
    }
    for (int l : labels) {
      if (l != 0 && l != 1) {
        throw InvalidArgument("labels must be 0 or 1, got " +
                              std::to_string(l));
      }
    }
  }
  if (batch.row_ids().size() != batch.rows()) {
    throw InvalidArgument("row id count does not match row count");
  }
  {
    std::vector<std::int64_t> ids = batch.row_ids();
    std::sort(ids.begin(), ids.end());
    if (ids.front() < 1 ||
        std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw InvalidArgument("row ids must be unique positive integers");
    }
  }
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    for (std::size_t c = 0; c < batch.cols(); ++c) {
      if (!std::isfinite(batch.at(r, c))) {
        throw InvalidArgument("non-finite value at row " +
                              std::to_string(r + 1) + ", column " +
                              std::to_string(c + 1) +
                              "; clean the data before detection");
      }
    }
  }
  return batch;
}

void DetectorConfig::validate() const {
  if (decimal_places < 1) {
    throw InvalidArgument("decimal_places must be >= 1");
  }
  if (max_parallel_columns < 1) {
    throw InvalidArgument("max_parallel_columns must be >= 1");
  }
}

}  // namespace llmad
