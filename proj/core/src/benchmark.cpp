#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "llmad/baselines.hpp"
#include "llmad/detector.hpp"
#include "llmad/error.hpp"
#include "llmad/eval.hpp"

namespace llmad {

DetectorSpec knn_detector(int k) {
  return {"knn", [k](const DataBatch& b) {
            const int usable = std::min<int>(k, static_cast<int>(b.rows()) - 1);
            return knn_scores(b, usable).scores;
          }};
}

DetectorSpec ecod_detector() {
  return {"ecod", [](const DataBatch& b) { return ecod_scores(b).scores; }};
}

DetectorSpec llm_detector(std::string name, ChatBackend& backend,
                          DetectorConfig config) {
  return {std::move(name), [&backend, config](const DataBatch& b) {
            return detect_batch(b, config, backend).scores.as_doubles();
          }};
}

void BenchmarkConfig::validate() const {
  if (max_rows < 2) throw InvalidArgument("max_rows must be >= 2");
  if (max_cols < 1) throw InvalidArgument("max_cols must be >= 1");
  if (seeds.empty()) throw InvalidArgument("at least one seed is required");
  if (datasets.empty()) throw InvalidArgument("no datasets given");
  if (!detector.score) throw InvalidArgument("no detector configured");
}

namespace {

void summarise(DatasetResult& ds) {
  std::vector<double> values;
  for (const auto& s : ds.seeds) {
    if (s.auroc) values.push_back(*s.auroc);
  }
  if (values.empty()) {
    if (ds.error.empty()) ds.error = "no seed produced an AUROC";
    return;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  ds.mean = mean;
  ds.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkResult result;
  result.detector = config.detector.name;

  for (const auto& path : config.datasets) {
    DatasetResult ds;
    ds.path = path;
    ds.name = path.stem().string();
    DataBatch full;
    try {
      full = load_csv_dataset(path, config.csv);
      if (!full.labels()) throw InvalidArgument("dataset has no labels");
    } catch (const std::exception& e) {
      ds.error = e.what();
      result.datasets.push_back(std::move(ds));
      continue;
    }
    for (std::uint64_t seed : config.seeds) {
      SeedOutcome outcome;
      outcome.seed = seed;
      const DataBatch batch =
          subsample(full, config.max_rows, config.max_cols, seed);
      outcome.rows = batch.rows();
      outcome.cols = batch.cols();
      const auto& labels = *batch.labels();
      const auto positives = std::count(labels.begin(), labels.end(), 1);
      if (positives == 0 || positives == static_cast<long>(labels.size())) {
        outcome.skipped_reason = "subsample has a single class";
      } else {
        try {
          const std::vector<double> scores = config.detector.score(batch);
          outcome.auroc = auroc(scores, labels);
        } catch (const std::exception& e) {
          outcome.skipped_reason = e.what();
        }
      }
      ds.seeds.push_back(std::move(outcome));
    }
    summarise(ds);
    result.datasets.push_back(std::move(ds));
  }

  double mean_sum = 0.0;
  double std_sum = 0.0;
  int ok = 0;
  for (const auto& ds : result.datasets) {
    if (!ds.mean) continue;
    mean_sum += *ds.mean;
    std_sum += *ds.stddev;
    ++ok;
  }
  if (ok == 0) {
    std::string msg = "every dataset failed";
    if (!result.datasets.empty()) msg += "; first: " + result.datasets.front().error;
    throw Error(msg);
  }
  result.average_mean = mean_sum / ok;
  result.average_std = std_sum / ok;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string cell(const std::optional<double>& mean,
                 const std::optional<double>& stddev) {
  if (!mean) return "n/a";
  return pct(*mean) + "±" + pct(*stddev);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

// Display width, counting each UTF-8 sequence as one column.
std::size_t width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

}  // namespace

std::string format_table(const BenchmarkResult& result) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& ds : result.datasets) {
    rows.emplace_back(ds.name, ds.mean ? cell(ds.mean, ds.stddev)
                                       : "failed: " + ds.error);
  }
  rows.emplace_back("average", cell(result.average_mean, result.average_std));

  std::size_t name_w = width(std::string("dataset"));
  for (const auto& [name, _] : rows) name_w = std::max(name_w, width(name));
  std::ostringstream out;
  auto line = [&](const std::string& a, const std::string& b) {
    out << a << std::string(name_w - width(a) + 2, ' ') << b << '\n';
  };
  line("dataset", result.detector);
  line(std::string(name_w, '-'), std::string(std::max<std::size_t>(width(result.detector), 8), '-'));
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) line(rows[i].first, rows[i].second);
  line(std::string(name_w, '-'), std::string(std::max<std::size_t>(width(result.detector), 8), '-'));
  line(rows.back().first, rows.back().second);
  return out.str();
}

std::string format_csv(const BenchmarkResult& result) {
  std::ostringstream out;
  out << "dataset,seed,rows,cols,auroc,status\n";
  for (const auto& ds : result.datasets) {
    if (!ds.error.empty() && ds.seeds.empty()) {
      out << ds.name << ",,,,," << quoted("error: " + ds.error) << '\n';
      continue;
    }
    for (const auto& s : ds.seeds) {
      out << ds.name << ',' << s.seed << ',' << s.rows << ',' << s.cols << ',';
      if (s.auroc) {
        out << fixed(*s.auroc, 6) << ",ok\n";
      } else {
        out << ',' << quoted("skipped: " + s.skipped_reason) << '\n';
      }
    }
  }
  out << "\ndataset,mean,std\n";
  for (const auto& ds : result.datasets) {
    out << ds.name << ',' << (ds.mean ? fixed(*ds.mean, 6) : "") << ','
        << (ds.stddev ? fixed(*ds.stddev, 6) : "") << '\n';
  }
  out << "average," << (result.average_mean ? fixed(*result.average_mean, 6) : "")
      << ',' << (result.average_std ? fixed(*result.average_std, 6) : "") << '\n';
  return out.str();
}

}  // namespace llmad
