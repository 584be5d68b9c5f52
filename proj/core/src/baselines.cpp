#include "llmad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llmad/error.hpp"

namespace llmad {

std::string_view method_name(BaselineMethod method) {
  return method == BaselineMethod::kEcod ? "ecod" : "knn";
}

BaselineScores knn_scores(const DataBatch& batch, int k) {
  validate_batch(batch);
  const std::size_t n = batch.rows();
  if (k < 1 || static_cast<std::size_t>(k) >= n) {
    throw InvalidArgument("knn needs 1 <= k < N (k=" + std::to_string(k) +
                          ", N=" + std::to_string(n) + ")");
  }
  BaselineScores out;
  out.method = BaselineMethod::kKnn;
  out.k = k;
  out.scores.resize(n);
  std::vector<double> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = batch.row(i);
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto xj = batch.row(j);
      double d2 = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) {
        const double d = xi[c] - xj[c];
        d2 += d * d;
      }
      dist[m++] = d2;
    }
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    out.scores[i] = std::sqrt(dist[static_cast<std::size_t>(k - 1)]);
  }
  return out;
}

double sample_skewness(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 3) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  if (m2 <= 0.0) return 0.0;
  const double g1 = m3 / std::pow(m2, 1.5);
  const double nn = static_cast<double>(n);
  return g1 * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
}

BaselineScores ecod_scores(const DataBatch& batch) {
  validate_batch(batch);
  const std::size_t n = batch.rows();
  if (n < 2) throw InvalidArgument("ecod needs at least 2 rows");
  const double nd = static_cast<double>(n);

  std::vector<double> left(n, 0.0);
  std::vector<double> right(n, 0.0);
  std::vector<double> autos(n, 0.0);
  std::vector<double> sorted;
  for (std::size_t c = 0; c < batch.cols(); ++c) {
    const std::vector<double> col = batch.column(c);
    sorted = col;
    std::sort(sorted.begin(), sorted.end());
    const bool use_left = sample_skewness(col) < 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = col[i];
      const auto le = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
      const auto ge = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x);
      const double tail_left = -std::log(static_cast<double>(le) / nd);
      const double tail_right = -std::log(static_cast<double>(ge) / nd);
      left[i] += tail_left;
      right[i] += tail_right;
      autos[i] += use_left ? tail_left : tail_right;
    }
  }
  BaselineScores out;
  out.method = BaselineMethod::kEcod;
  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.scores[i] = std::max({left[i], right[i], autos[i]});
  }
  return out;
}

}  // namespace llmad
