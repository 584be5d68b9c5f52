#include "llmad/synth.hpp"

#include <fstream>

#include "json.hpp"
#include "llmad/error.hpp"
#include "llmad/parser.hpp"
#include "llmad/serializer.hpp"

namespace llmad {

void GeneratorParams::validate() const {
  if (n_low < 1 || n_high < n_low) throw InvalidArgument("need 1 <= n_low <= n_high");
  if (!(pi_low >= 0.0 && pi_low <= pi_high && pi_high <= 1.0)) {
    throw InvalidArgument("need 0 <= pi_low <= pi_high <= 1");
  }
  if (!(mu_low <= mu_high)) throw InvalidArgument("need mu_low <= mu_high");
  if (!(sigma_low > 0.0 && sigma_low <= sigma_high)) {
    throw InvalidArgument("need 0 < sigma_low <= sigma_high");
  }
  if (m_low < 1 || m_high < m_low) throw InvalidArgument("need 1 <= m_low <= m_high");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
}

std::string_view kind_name(DataKind kind) {
  return kind == DataKind::kDiscrete ? "discrete" : "continuous";
}

std::vector<std::int64_t> SyntheticBatch::anomaly_indices() const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) out.push_back(static_cast<std::int64_t>(i + 1));
  }
  return out;
}

namespace {

void draw_size_and_ratio(const GeneratorParams& params, Rng& rng,
                         RealizedParams& p) {
  p.n = static_cast<int>(rng.uniform_int(params.n_low, params.n_high));
  p.pi = rng.uniform(params.pi_low, params.pi_high);
}

}  // namespace

SyntheticBatch gen_continuous_batch(const GeneratorParams& params, Rng& rng) {
  params.validate();
  SyntheticBatch batch;
  batch.kind = DataKind::kContinuous;
  RealizedParams& p = batch.params_used;
  draw_size_and_ratio(params, rng, p);
  p.mu_normal = rng.uniform(params.mu_low, params.mu_high);
  p.mu_anomaly = rng.uniform(params.mu_low, params.mu_high);
  p.sigma_normal = rng.uniform(params.sigma_low, params.sigma_high);
  p.sigma_anomaly = 10.0 * p.sigma_normal;

  batch.values.resize(static_cast<std::size_t>(p.n));
  batch.labels.resize(static_cast<std::size_t>(p.n));
  for (int i = 0; i < p.n; ++i) {
    const bool anomalous = rng.uniform01() < p.pi;
    batch.labels[i] = anomalous ? 1 : 0;
    batch.values[i] = anomalous ? rng.normal(p.mu_anomaly, p.sigma_anomaly)
                                : rng.normal(p.mu_normal, p.sigma_normal);
  }
  return batch;
}

SyntheticBatch gen_discrete_batch(const GeneratorParams& params, Rng& rng) {
  params.validate();
  SyntheticBatch batch;
  batch.kind = DataKind::kDiscrete;
  RealizedParams& p = batch.params_used;
  draw_size_and_ratio(params, rng, p);
  p.m_normal = static_cast<int>(rng.uniform_int(params.m_low, params.m_high));
  p.m_anomaly = static_cast<int>(rng.uniform_int(params.m_low, params.m_high));
  p.p_normal = rng.dirichlet(params.alpha, static_cast<std::size_t>(p.m_normal));
  p.p_anomaly = rng.dirichlet(params.alpha, static_cast<std::size_t>(p.m_anomaly));

  batch.values.resize(static_cast<std::size_t>(p.n));
  batch.labels.resize(static_cast<std::size_t>(p.n));
  for (int i = 0; i < p.n; ++i) {
    const bool anomalous = rng.uniform01() < p.pi;
    batch.labels[i] = anomalous ? 1 : 0;
    const std::size_t category =
        anomalous ? static_cast<std::size_t>(p.m_normal) + rng.categorical(p.p_anomaly)
                  : rng.categorical(p.p_normal);
    batch.values[i] = static_cast<double>(category);
  }
  return batch;
}

ChatRecord render_finetune_example(const SyntheticBatch& batch,
                                   const RenderOptions& options) {
  DetectorConfig config = options.detector;
  const int decimals = batch.kind == DataKind::kDiscrete
                           ? options.discrete_decimal_places
                           : config.decimal_places;
  ChatRecord record;
  record.system = std::string(system_message(config.naming));
  record.user = serialize_column(batch.values, config.naming, decimals);
  record.user.push_back(' ');
  record.user.append(config.prompt_text);
  record.assistant = render_response(batch.anomaly_indices(), config.naming);
  record.kind = batch.kind;
  record.labels = batch.labels;
  return record;
}

ChatRecord render_finetune_example(const SyntheticBatch& batch,
                                   NamingScheme naming) {
  RenderOptions options;
  options.detector.naming = naming;
  return render_finetune_example(batch, options);
}

namespace {

std::vector<CorpusExample> build_split(int count, std::uint64_t split,
                                       const GeneratorParams& params,
                                       const RenderOptions& options) {
  std::vector<CorpusExample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t stream = (split << 32) | static_cast<std::uint64_t>(i);
    Rng rng(mix_seed(params.seed, stream));
    CorpusExample ex;
    ex.batch = (i % 2 == 0) ? gen_continuous_batch(params, rng)
                            : gen_discrete_batch(params, rng);
    ex.record = render_finetune_example(ex.batch, options);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

Corpus build_corpus(int train_batches, int val_batches,
                    const GeneratorParams& params,
                    const RenderOptions& options) {
  if (train_batches < 0 || val_batches < 0 || train_batches % 2 != 0 ||
      val_batches % 2 != 0) {
    throw InvalidArgument(
        "batch counts must be even and non-negative (half continuous, half "
        "discrete)");
  }
  params.validate();
  Corpus corpus;
  corpus.train = build_split(train_batches, 0, params, options);
  corpus.validation = build_split(val_batches, 1, params, options);
  return corpus;
}

std::string to_jsonl(const ChatRecord& record) {
  nlohmann::ordered_json j;
  j["system"] = record.system;
  j["user"] = record.user;
  j["assistant"] = record.assistant;
  j["kind"] = kind_name(record.kind);
  j["labels"] = record.labels;
  return j.dump();
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<CorpusExample>& examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& ex : examples) out << to_jsonl(ex.record) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace llmad
