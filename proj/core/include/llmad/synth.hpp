#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "llmad/batch.hpp"
#include "llmad/random.hpp"

namespace llmad {

/// Ranges from which each synthetic batch draws its mixture parameters.
/// Defaults are the standard corpus settings.
struct GeneratorParams {
  int n_low = 20;
  int n_high = 100;
  double pi_low = 0.01;
  double pi_high = 0.2;
  double mu_low = -100.0;
  double mu_high = 100.0;
  double sigma_low = 0.5;
  double sigma_high = 5.0;
  int m_low = 1;
  int m_high = 4;
  double alpha = 20.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class DataKind { kContinuous, kDiscrete };

std::string_view kind_name(DataKind kind);

/// The parameter values one batch actually used.
struct RealizedParams {
  int n = 0;
  double pi = 0.0;
  // Continuous only.
  double mu_normal = 0.0;
  double mu_anomaly = 0.0;
  double sigma_normal = 0.0;
  double sigma_anomaly = 0.0;
  // Discrete only.
  int m_normal = 0;
  int m_anomaly = 0;
  std::vector<double> p_normal;
  std::vector<double> p_anomaly;
};

struct SyntheticBatch {
  DataKind kind = DataKind::kContinuous;
  /// Reals for continuous batches, category ids for discrete ones.
  std::vector<double> values;
  /// 1 iff the value came from the anomalous component.
  std::vector<int> labels;
  RealizedParams params_used;

  /// Sorted 1-based indices of anomalous values.
  std::vector<std::int64_t> anomaly_indices() const;
};

/// Two-component Gaussian mixture; the anomalous component is ten times
/// wider than the normal one.
SyntheticBatch gen_continuous_batch(const GeneratorParams& params, Rng& rng);

/// Two-component categorical mixture with Dirichlet(alpha) weights. Normal
/// categories are 0..M_n-1, anomalous ones M_n..M_n+M_a-1.
SyntheticBatch gen_discrete_batch(const GeneratorParams& params, Rng& rng);

/// One supervised chat example.
struct ChatRecord {
  std::string system;
  std::string user;
  std::string assistant;
  DataKind kind = DataKind::kContinuous;
  std::vector<int> labels;

  friend bool operator==(const ChatRecord&, const ChatRecord&) = default;
};

struct RenderOptions {
  DetectorConfig detector;
  /// Fractional digits for discrete category ids.
  int discrete_decimal_places = 0;
};

ChatRecord render_finetune_example(const SyntheticBatch& batch,
                                   const RenderOptions& options);
ChatRecord render_finetune_example(const SyntheticBatch& batch,
                                   NamingScheme naming);

struct CorpusExample {
  SyntheticBatch batch;
  ChatRecord record;
};

struct Corpus {
  std::vector<CorpusExample> train;
  std::vector<CorpusExample> validation;
};

inline constexpr int kDefaultTrainBatches = 5000;
inline constexpr int kDefaultValidationBatches = 400;

/// Generates both splits, half continuous and half discrete (interleaved,
/// continuous first). Every batch gets its own seed derived from
/// (params.seed, split, index), so the splits never share a seed.
/// Throws InvalidArgument for odd or negative counts.
Corpus build_corpus(int train_batches, int val_batches,
                    const GeneratorParams& params,
                    const RenderOptions& options = {});

/// One JSON object per line: system, user, assistant, kind, labels.
std::string to_jsonl(const ChatRecord& record);
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<CorpusExample>& examples);

}  // namespace llmad
