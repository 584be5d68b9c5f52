#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmad/backends.hpp"
#include "llmad/batch.hpp"
#include "llmad/random.hpp"

namespace llmad {

struct CsvOptions {
  /// Treat the last column as labels when no "label" header exists.
  bool last_column_is_label = false;
};

/// Reads a numeric CSV. A header row is detected when any cell of the first
/// non-empty line is not a number. A column named "label" (any case) holds
/// 0/1 labels. Throws IoError or ParseError (naming the line) on failure.
DataBatch load_csv_dataset(const std::filesystem::path& path,
                           const CsvOptions& options = {});

/// Seeded uniform sample of min(N, max_rows) rows without replacement (kept
/// in file order) and the first min(K, max_cols) columns.
DataBatch subsample(const DataBatch& batch, std::size_t max_rows,
                    std::size_t max_cols, std::uint64_t seed);

/// Area under the ROC curve with ties counted as one half, computed from
/// mid-ranks. Throws InvalidArgument on length mismatch or single-class
/// labels.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Per-row anomaly scores for a batch; higher is more anomalous.
using Scorer = std::function<std::vector<double>(const DataBatch&)>;

struct DetectorSpec {
  std::string name;
  Scorer score;
};

DetectorSpec knn_detector(int k);
DetectorSpec ecod_detector();
/// Scores are detect_batch counts. `backend` must outlive the spec.
DetectorSpec llm_detector(std::string name, ChatBackend& backend,
                          DetectorConfig config);

struct BenchmarkConfig {
  std::vector<std::filesystem::path> datasets;
  std::size_t max_rows = 150;
  std::size_t max_cols = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  CsvOptions csv;
  DetectorSpec detector;

  void validate() const;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<double> auroc;
  std::string skipped_reason;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct DatasetResult {
  std::string name;
  std::filesystem::path path;
  std::vector<SeedOutcome> seeds;
  std::optional<double> mean;
  /// Sample standard deviation over seeds with an AUROC (0 for one seed).
  std::optional<double> stddev;
  /// Non-empty when the dataset could not be scored at all.
  std::string error;
};

struct BenchmarkResult {
  std::string detector;
  std::vector<DatasetResult> datasets;
  /// Means over datasets of the per-dataset mean and std.
  std::optional<double> average_mean;
  std::optional<double> average_std;
  double wall_seconds = 0.0;
};

/// Throws Error when every dataset fails.
BenchmarkResult run_benchmark(const BenchmarkConfig& config);

/// Aligned text table, AUROC x 100 as "mean±std" with one decimal.
std::string format_table(const BenchmarkResult& result);
/// dataset,seed,auroc,status rows followed by per-dataset summaries.
std::string format_csv(const BenchmarkResult& result);

struct DensityDemoOptions {
  int batches = 500;
  int batch_size = 50;
  std::uint64_t seed = 0;
  double bandwidth = 5.0;
  double grid_min = -120.0;
  double grid_max = 120.0;
  int grid_points = 801;
  DetectorConfig detector;
};

struct DensityDemoReport {
  std::vector<double> predictions;
  std::vector<double> grid;
  std::vector<double> density;
  double integral = 0.0;
  /// Share of predictions at least 7.5 away from both normal modes.
  double low_density_fraction = 0.0;
  int batches_ok = 0;
  int batches_failed = 0;
};

/// 0.45 N(-25, 2.5^2) + 0.45 N(25, 2.5^2) + 0.1 U(-100, 100).
double demo_mixture_density(double x);
double sample_demo_mixture(Rng& rng);

std::vector<double> gaussian_kde(std::span<const double> samples,
                                 double bandwidth, std::span<const double> grid);
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Runs single-column detection on independent batches from the demo
/// mixture, pools the flagged values and estimates their density. When
/// `out_dir` is non-empty, writes density.csv, predictions.csv and
/// summary.txt there. Throws DetectionError when every batch failed.
DensityDemoReport density_demo(ChatBackend& backend,
                               const std::filesystem::path& out_dir,
                               const DensityDemoOptions& options = {});

}  // namespace llmad
