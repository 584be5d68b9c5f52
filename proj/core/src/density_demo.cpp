#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "llmad/detector.hpp"
#include "llmad/error.hpp"
#include "llmad/eval.hpp"

namespace llmad {

namespace {

constexpr double kModeLeft = -25.0;
constexpr double kModeRight = 25.0;
constexpr double kModeSigma = 2.5;
constexpr double kModeWeight = 0.45;
constexpr double kUniformLo = -100.0;
constexpr double kUniformHi = 100.0;
constexpr double kUniformWeight = 0.1;
// Three standard deviations of a normal mode.
constexpr double kLowDensityDistance = 3.0 * kModeSigma;

double normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double demo_mixture_density(double x) {
  double p = kModeWeight * normal_pdf(x, kModeLeft, kModeSigma) +
             kModeWeight * normal_pdf(x, kModeRight, kModeSigma);
  if (x >= kUniformLo && x <= kUniformHi) {
    p += kUniformWeight / (kUniformHi - kUniformLo);
  }
  return p;
}

double sample_demo_mixture(Rng& rng) {
  const double u = rng.uniform01();
  if (u < kModeWeight) return rng.normal(kModeLeft, kModeSigma);
  if (u < 2.0 * kModeWeight) return rng.normal(kModeRight, kModeSigma);
  return rng.uniform(kUniformLo, kUniformHi);
}

std::vector<double> gaussian_kde(std::span<const double> samples,
                                 double bandwidth, std::span<const double> grid) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("bandwidth must be positive");
  std::vector<double> density(grid.size(), 0.0);
  if (samples.empty()) return density;
  const double scale = 1.0 / static_cast<double>(samples.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double s : samples) acc += normal_pdf(grid[g], s, bandwidth);
    density[g] = acc * scale;
  }
  return density;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("trapezoid: size mismatch");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  }
  return area;
}

DensityDemoReport density_demo(ChatBackend& backend,
                               const std::filesystem::path& out_dir,
                               const DensityDemoOptions& options) {
  if (options.batches < 1 || options.batch_size < 1) {
    throw InvalidArgument("batches and batch_size must be positive");
  }
  if (options.grid_points < 2 || !(options.grid_max > options.grid_min)) {
    throw InvalidArgument("invalid evaluation grid");
  }

  DensityDemoReport report;
  std::vector<std::pair<int, std::int64_t>> origin;  // (batch, 1-based index)
  std::string first_error;
  for (int b = 0; b < options.batches; ++b) {
    Rng rng(mix_seed(options.seed, static_cast<std::uint64_t>(b)));
    std::vector<double> column(static_cast<std::size_t>(options.batch_size));
    for (auto& x : column) x = sample_demo_mixture(rng);
    try {
      const ParsedPrediction p =
          detect_column(column, options.detector, backend);
      for (std::int64_t i : p.indices) {
        report.predictions.push_back(column[static_cast<std::size_t>(i - 1)]);
        origin.emplace_back(b + 1, i);
      }
      ++report.batches_ok;
    } catch (const std::exception& e) {
      if (first_error.empty()) first_error = e.what();
      ++report.batches_failed;
    }
  }
  if (report.batches_ok == 0) {
    throw DetectionError("every demo batch failed: " + first_error);
  }

  report.grid.resize(static_cast<std::size_t>(options.grid_points));
  const double step = (options.grid_max - options.grid_min) /
                      static_cast<double>(options.grid_points - 1);
  for (std::size_t g = 0; g < report.grid.size(); ++g) {
    report.grid[g] = options.grid_min + step * static_cast<double>(g);
  }
  report.density = gaussian_kde(report.predictions, options.bandwidth, report.grid);
  report.integral = trapezoid(report.grid, report.density);

  std::size_t far = 0;
  for (double x : report.predictions) {
    if (std::fabs(x - kModeLeft) >= kLowDensityDistance &&
        std::fabs(x - kModeRight) >= kLowDensityDistance) {
      ++far;
    }
  }
  report.low_density_fraction =
      report.predictions.empty()
          ? 0.0
          : static_cast<double>(far) / static_cast<double>(report.predictions.size());

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream grid(out_dir / "density.csv", std::ios::binary);
    std::ofstream preds(out_dir / "predictions.csv", std::ios::binary);
    std::ofstream summary(out_dir / "summary.txt", std::ios::binary);
    if (!grid || !preds || !summary) {
      throw IoError("cannot write demo output in " + out_dir.string());
    }
    grid << "x,estimated_density,true_density\n";
    for (std::size_t g = 0; g < report.grid.size(); ++g) {
      grid << num(report.grid[g]) << ',' << num(report.density[g]) << ','
           << num(demo_mixture_density(report.grid[g])) << '\n';
    }
    preds << "batch,index,value\n";
    for (std::size_t i = 0; i < report.predictions.size(); ++i) {
      preds << origin[i].first << ',' << origin[i].second << ','
            << num(report.predictions[i]) << '\n';
    }
    summary << "batches=" << options.batches << '\n'
            << "batch_size=" << options.batch_size << '\n'
            << "batches_ok=" << report.batches_ok << '\n'
            << "batches_failed=" << report.batches_failed << '\n'
            << "predictions=" << report.predictions.size() << '\n'
            << "bandwidth=" << num(options.bandwidth) << '\n'
            << "kde_integral=" << num(report.integral) << '\n'
            << "low_density_fraction=" << num(report.low_density_fraction) << '\n';
    if (!grid || !preds || !summary) {
      throw IoError("write failed in " + out_dir.string());
    }
  }
  return report;
}

}  // namespace llmad
