#include "llmad/detector.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "llmad/serializer.hpp"

namespace llmad {

namespace {

std::string tag(std::size_t column_index, const std::string& what) {
  return "column " + std::to_string(column_index + 1) + ": " + what;
}

}  // namespace

ColumnResult detect_column_verbose(std::span<const double> column,
                                   const DetectorConfig& config,
                                   ChatBackend& backend,
                                   std::size_t column_index) {
  const PromptBundle prompt = build_prompt(column, config, column_index);
  const std::vector<ChatMessage> messages = {
      {Role::kSystem, prompt.system},
      {Role::kUser, prompt.user},
  };
  ColumnResult result;
  result.column_index = column_index;
  try {
    result.raw_response = backend.complete_chat(messages);
  } catch (const BackendError& e) {
    throw BackendError(e.kind(), tag(column_index, e.what()), e.status(),
                       e.attempts());
  }
  result.prediction = parse_response(result.raw_response,
                                     static_cast<std::int64_t>(column.size()));
  return result;
}

ParsedPrediction detect_column(std::span<const double> column,
                               const DetectorConfig& config,
                               ChatBackend& backend, std::size_t column_index) {
  return *detect_column_verbose(column, config, backend, column_index).prediction;
}

AnomalyScores aggregate_scores(std::span<const ParsedPrediction> predictions,
                               std::size_t rows) {
  AnomalyScores scores;
  scores.counts.assign(rows, 0);
  for (const auto& p : predictions) {
    for (std::int64_t i : p.indices) {
      if (i >= 1 && static_cast<std::size_t>(i) <= rows) ++scores.counts[i - 1];
    }
  }
  return scores;
}

DetectionReport detect_batch(const DataBatch& batch,
                             const DetectorConfig& config,
                             ChatBackend& backend) {
  validate_batch(batch);
  config.validate();

  const std::size_t k = batch.cols();
  std::vector<ColumnResult> results(k);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < k; c = next++) {
      const std::vector<double> column = batch.column(c);
      try {
        results[c] = detect_column_verbose(column, config, backend, c);
      } catch (const std::exception& e) {
        results[c] = ColumnResult{};
        results[c].column_index = c;
        results[c].error = e.what();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(k, static_cast<std::size_t>(config.max_parallel_columns));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  DetectionReport report;
  std::vector<ParsedPrediction> ok;
  for (auto& r : results) {
    if (r.ok()) {
      ok.push_back(*r.prediction);
    } else {
      report.failures.push_back({r.column_index, r.error});
    }
  }
  if (ok.empty()) {
    throw DetectionError("all " + std::to_string(k) +
                         " columns failed; first error: " +
                         report.failures.front().message);
  }
  report.scores = aggregate_scores(ok, batch.rows());
  report.per_column = std::move(results);
  return report;
}

}  // namespace llmad
