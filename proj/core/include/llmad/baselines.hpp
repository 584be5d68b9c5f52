#pragma once

#include <string_view>
#include <vector>

#include "llmad/batch.hpp"

namespace llmad {

enum class BaselineMethod { kKnn, kEcod };

std::string_view method_name(BaselineMethod method);

/// Higher is more anomalous.
struct BaselineScores {
  std::vector<double> scores;
  BaselineMethod method = BaselineMethod::kKnn;
  int k = 0;  // knn only
};

inline constexpr int kDefaultKnnK = 5;

/// Euclidean distance from each row to its k-th nearest other row.
/// Exact brute force. Throws InvalidArgument when k < 1 or k >= N.
BaselineScores knn_scores(const DataBatch& batch, int k = kDefaultKnnK);

/// Empirical-CDF outlier scores.
///
/// For every dimension, left and right tail probabilities are
/// F(x) = #{x_j <= x} / N and G(x) = #{x_j >= x} / N (the point itself is
/// counted, so neither is ever zero). Per row, the negative log tails are
/// summed over dimensions three ways: left only, right only, and a
/// skewness-chosen tail per dimension (left when the sample skewness is
/// negative, right otherwise; zero variance counts as zero skewness). The
/// score is the largest of the three. Throws InvalidArgument when N < 2.
BaselineScores ecod_scores(const DataBatch& batch);

/// Adjusted Fisher-Pearson sample skewness; 0 for constant input or N < 3.
double sample_skewness(const std::vector<double>& x);

}  // namespace llmad
