#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "llmad/baselines.hpp"
#include "llmad/error.hpp"

namespace llmad {
namespace {

DataBatch random_table(std::mt19937_64& gen, std::size_t n, std::size_t k) {
  std::normal_distribution<double> dist(0, 1);
  std::vector<std::vector<double>> rows(n, std::vector<double>(k));
  for (auto& r : rows) {
    for (auto& v : r) v = dist(gen);
  }
  return DataBatch::from_rows(rows);
}

std::vector<std::size_t> ranking(const std::vector<double>& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s[a] < s[b]; });
  return idx;
}

TEST(Knn, HandComputed) {
  const DataBatch b = DataBatch::from_rows({{0, 0}, {0, 1}, {10, 10}});
  const BaselineScores s = knn_scores(b, 1);
  EXPECT_EQ(s.method, BaselineMethod::kKnn);
  EXPECT_EQ(s.k, 1);
  EXPECT_DOUBLE_EQ(s.scores[0], 1.0);
  EXPECT_DOUBLE_EQ(s.scores[1], 1.0);
  EXPECT_DOUBLE_EQ(s.scores[2], std::sqrt(181.0));
  const BaselineScores s2 = knn_scores(b, 2);
  EXPECT_DOUBLE_EQ(s2.scores[0], std::sqrt(200.0));
}

TEST(Knn, IdenticalRowsScoreZero) {
  const DataBatch b = DataBatch::from_rows({{3, 1}, {3, 1}, {3, 1}, {3, 1}});
  for (double v : knn_scores(b, 3).scores) EXPECT_EQ(v, 0.0);
}

TEST(Knn, KOutOfRange) {
  const DataBatch b = DataBatch::from_rows({{0}, {1}, {2}});
  EXPECT_THROW(knn_scores(b, 3), InvalidArgument);
  EXPECT_THROW(knn_scores(b, 0), InvalidArgument);
}

TEST(Knn, MatchesSortedDistances) {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 30; ++t) {
    const DataBatch b = random_table(gen, 15, 3);
    const int k = 1 + static_cast<int>(gen() % 14);
    const auto s = knn_scores(b, k).scores;
    for (std::size_t i = 0; i < b.rows(); ++i) {
      std::vector<double> d;
      for (std::size_t j = 0; j < b.rows(); ++j) {
        if (j == i) continue;
        double acc = 0;
        for (std::size_t c = 0; c < 3; ++c) acc += std::pow(b.at(i, c) - b.at(j, c), 2);
        d.push_back(std::sqrt(acc));
      }
      std::sort(d.begin(), d.end());
      EXPECT_NEAR(s[i], d[static_cast<std::size_t>(k - 1)], 1e-12);
    }
  }
}

TEST(Knn, RigidMotionAndScale) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> angle(0, 6.283185307179586);
  for (int t = 0; t < 30; ++t) {
    const DataBatch b = random_table(gen, 20, 2);
    const double th = angle(gen), c = 0.5 + t * 0.25;
    std::vector<std::vector<double>> moved(b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) {
      const double x = b.at(r, 0), y = b.at(r, 1);
      moved[r] = {c * (std::cos(th) * x - std::sin(th) * y) + 4,
                  c * (std::sin(th) * x + std::cos(th) * y) - 9};
    }
    const auto s0 = knn_scores(b, 5).scores;
    const auto s1 = knn_scores(DataBatch::from_rows(moved), 5).scores;
    for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_NEAR(s1[i], c * s0[i], 1e-9 * (1 + c * s0[i]));
  }
}

TEST(Ecod, SpikeAttainsMaximum) {
  const std::vector<double> col = {1, 2, 3, 100};
  const auto s = ecod_scores(DataBatch::from_column(col)).scores;
  EXPECT_DOUBLE_EQ(s[3], *std::max_element(s.begin(), s.end()));
  EXPECT_DOUBLE_EQ(s[3], std::log(4.0));
}

TEST(Ecod, SymmetricColumn) {
  const std::vector<double> col = {-1, 0, 1};
  const auto s = ecod_scores(DataBatch::from_column(col)).scores;
  EXPECT_DOUBLE_EQ(s[0], s[2]);
  EXPECT_DOUBLE_EQ(s[0], std::log(3.0));
  EXPECT_DOUBLE_EQ(s[1], std::log(1.5));
}

TEST(Ecod, HandComputedTails) {
  // Left tails F = (1/3, 2/3, 1), right tails G = (1, 2/3, 1/3) for
  // [0, 1, 5]; skewness is positive so the auto sum takes right tails.
  const std::vector<double> col = {0, 1, 5};
  EXPECT_GT(sample_skewness(col), 0.0);
  const auto s = ecod_scores(DataBatch::from_column(col)).scores;
  EXPECT_DOUBLE_EQ(s[0], std::log(3.0));
  EXPECT_DOUBLE_EQ(s[1], std::log(1.5));
  EXPECT_DOUBLE_EQ(s[2], std::log(3.0));
}

TEST(Ecod, ConstantColumnAddsUniformTerm) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 20; ++t) {
    const DataBatch b = random_table(gen, 30, 2);
    std::vector<std::vector<double>> with(b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) with[r] = {b.at(r, 0), 7.0, b.at(r, 1)};
    const auto s0 = ecod_scores(b).scores;
    const auto s1 = ecod_scores(DataBatch::from_rows(with)).scores;
    // Every row sees F = G = 1 in the constant column, a zero term.
    for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_NEAR(s0[i], s1[i], 1e-12);
  }
}

TEST(Ecod, MonotoneTransformInvariance) {
  // With one dimension the auto sum equals one of the one-sided sums, so the
  // score is max(left, right) and depends on order statistics only.
  std::mt19937_64 gen(4);
  for (int t = 0; t < 30; ++t) {
    const std::vector<double> x = random_table(gen, 40, 1).column(0);
    std::vector<double> up(x.size()), down(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      up[i] = std::exp(x[i]) * 3 + 1;
      down[i] = -std::pow(x[i], 3);
    }
    const auto s0 = ecod_scores(DataBatch::from_column(x)).scores;
    const auto s1 = ecod_scores(DataBatch::from_column(up)).scores;
    const auto s2 = ecod_scores(DataBatch::from_column(down)).scores;
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_DOUBLE_EQ(s0[i], s1[i]);
      EXPECT_DOUBLE_EQ(s0[i], s2[i]);
    }
  }
}

TEST(Ecod, IncreasingTransformKeepsOneSidedTails) {
  // In several dimensions an increasing transform that keeps each
  // dimension's skewness sign leaves every score unchanged.
  std::mt19937_64 gen(5);
  for (int t = 0; t < 30; ++t) {
    const DataBatch b = random_table(gen, 40, 3);
    std::vector<std::vector<double>> tr(b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) {
      tr[r] = {5 * b.at(r, 0) - 1, b.at(r, 1) + 100, 0.01 * b.at(r, 2)};
    }
    const auto s0 = ecod_scores(b).scores;
    const auto s1 = ecod_scores(DataBatch::from_rows(tr)).scores;
    EXPECT_EQ(ranking(s0), ranking(s1));
    for (std::size_t i = 0; i < s0.size(); ++i) {
      EXPECT_NEAR(s0[i], s1[i], 1e-12);
      EXPECT_TRUE(std::isfinite(s0[i]) && s0[i] >= 0);
    }
  }
}

TEST(Ecod, NeedsTwoRows) {
  const std::vector<double> one = {1};
  EXPECT_THROW(ecod_scores(DataBatch::from_column(one)), InvalidArgument);
}

TEST(Skewness, Reference) {
  EXPECT_EQ(sample_skewness({1, 1, 1}), 0.0);
  EXPECT_EQ(sample_skewness({1, 2}), 0.0);
  EXPECT_DOUBLE_EQ(sample_skewness({1, 2, 3}), 0.0);
  // scipy.stats.skew([1, 2, 10], bias=False)
  EXPECT_NEAR(sample_skewness({1, 2, 10}), 1.6523167403, 1e-9);
  EXPECT_LT(sample_skewness({-10, 1, 2}), 0.0);
}

}  // namespace
}  // namespace llmad
