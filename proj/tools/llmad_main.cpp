#include <glob.h>
#include <signal.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "llmad/llmad.hpp"

namespace fs = std::filesystem;
using namespace llmad;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

struct BackendFlags {
  std::string kind = "mock";
  BackendConfig http;
  long long timeout_ms = 60'000;
  long long backoff_ms = 1'000;
};

struct DetectorFlags {
  std::string naming = "data";
  int decimals = 2;
  int max_parallel = 4;
  std::string prompt{kDefaultTaskDescription};
};

void add_detector_flags(CLI::App* cmd, DetectorFlags& f) {
  cmd->add_option("--naming", f.naming, "Index wording in prompts and answers")
      ->check(CLI::IsMember({"data", "row"}))
      ->capture_default_str();
  cmd->add_option("--decimals", f.decimals, "Fractional digits when serializing values")
      ->check(CLI::Range(1, 300))
      ->capture_default_str();
  cmd->add_option("--max-parallel", f.max_parallel, "Columns sent to the backend concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--prompt", f.prompt, "Task description appended to each column")
      ->capture_default_str();
}

void add_backend_flags(CLI::App* cmd, BackendFlags& f) {
  cmd->add_option("--base-url", f.http.base_url, "Chat-completions endpoint root")
      ->capture_default_str();
  cmd->add_option("--model", f.http.model_name, "Model name sent with each request")
      ->capture_default_str();
  cmd->add_option("--temperature", f.http.temperature, "Sampling temperature")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--top-p", f.http.top_p, "Nucleus sampling mass")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_flag("--provider-defaults", f.http.provider_defaults,
                "Omit temperature and top_p from requests");
  cmd->add_option("--max-retries", f.http.max_retries, "Retries on transport errors, 429 and 5xx")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--timeout-ms", f.timeout_ms, "Per-request timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--backoff-ms", f.backoff_ms, "First retry delay")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

DetectorConfig resolve(const DetectorFlags& f) {
  DetectorConfig c;
  c.naming = parse_naming(f.naming);
  c.decimal_places = f.decimals;
  c.max_parallel_columns = f.max_parallel;
  c.prompt_text = f.prompt;
  c.validate();
  return c;
}

std::unique_ptr<ChatBackend> make_backend(const BackendFlags& f, NamingScheme naming) {
  if (f.kind == "mock") return std::make_unique<MockOracleBackend>(naming);
  BackendConfig config = f.http;
  config.timeout = std::chrono::milliseconds(f.timeout_ms);
  config.backoff_base = std::chrono::milliseconds(f.backoff_ms);
  config.api_key = api_key_from_env();
  config.validate();
  return std::make_unique<HttpChatBackend>(config);
}

std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    ::globfree(&g);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

// detect

struct DetectArgs {
  std::string input;
  std::string out;
  bool label_last = false;
  BackendFlags backend;
  DetectorFlags detector;
};

int run_detect(const DetectArgs& a) {
  const DetectorConfig config = resolve(a.detector);
  if (!fs::exists(a.input)) throw IoError("input file not found: " + a.input);
  const DataBatch batch = load_csv_dataset(a.input, {.last_column_is_label = a.label_last});
  auto backend = make_backend(a.backend, config.naming);
  const DetectionReport report = detect_batch(batch, config, *backend);
  for (const auto& f : report.failures) {
    std::cerr << "llmad: warning: column " << f.column_index + 1 << " failed: " << f.message << '\n';
  }
  std::ostringstream csv;
  csv << "row_id,score\n";
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    csv << batch.row_ids()[r] << ',' << report.scores.counts[r] << '\n';
  }
  if (a.out.empty()) {
    std::cout << csv.str() << std::flush;
  } else {
    write_text(a.out, csv.str());
  }
  return 0;
}

// synth

struct SynthArgs {
  int train = kDefaultTrainBatches;
  int val = kDefaultValidationBatches;
  std::string out_dir = ".";
  GeneratorParams params;
  DetectorFlags detector;
  int discrete_decimals = 0;
};

int run_synth(const SynthArgs& a) {
  RenderOptions options;
  options.detector = resolve(a.detector);
  options.discrete_decimal_places = a.discrete_decimals;
  const Corpus corpus = build_corpus(a.train, a.val, a.params, options);
  fs::create_directories(a.out_dir);
  write_jsonl(fs::path(a.out_dir) / "train.jsonl", corpus.train);
  write_jsonl(fs::path(a.out_dir) / "val.jsonl", corpus.validation);
  std::cerr << "llmad: wrote " << corpus.train.size() << " train and " << corpus.validation.size()
            << " validation records to " << a.out_dir << '\n';
  return 0;
}

// eval

struct EvalArgs {
  std::vector<std::string> datasets;
  std::string detector = "knn";
  std::size_t max_rows = 150;
  std::size_t max_cols = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int k = kDefaultKnnK;
  bool label_last = false;
  std::string csv_out;
  BackendFlags backend;
  DetectorFlags llm;
};

int run_eval(EvalArgs a) {
  BenchmarkConfig config;
  config.datasets = expand_globs(a.datasets);
  if (config.datasets.empty()) {
    std::string joined;
    for (const auto& d : a.datasets) joined += (joined.empty() ? "" : " ") + d;
    throw IoError("no datasets matched: " + joined);
  }
  config.max_rows = a.max_rows;
  config.max_cols = a.max_cols;
  config.seeds = a.seeds;
  config.csv.last_column_is_label = a.label_last;

  std::unique_ptr<ChatBackend> backend;
  if (a.detector == "knn") {
    config.detector = knn_detector(a.k);
  } else if (a.detector == "ecod") {
    config.detector = ecod_detector();
  } else {
    const DetectorConfig dc = resolve(a.llm);
    a.backend.kind = a.detector == "mock" ? "mock" : "http";
    backend = make_backend(a.backend, dc.naming);
    config.detector = llm_detector(a.detector == "mock" ? "mock" : a.backend.http.model_name,
                                   *backend, dc);
  }
  const BenchmarkResult result = run_benchmark(config);
  std::cout << format_table(result) << std::flush;
  for (const auto& ds : result.datasets) {
    for (const auto& s : ds.seeds) {
      if (!s.auroc) {
        std::cerr << "llmad: " << ds.name << " seed " << s.seed << " skipped: " << s.skipped_reason
                  << '\n';
      }
    }
  }
  if (!a.csv_out.empty()) write_text(a.csv_out, format_csv(result));
  return 0;
}

// serve-mock

struct ServeArgs {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string naming = "data";
};

int run_serve(const ServeArgs& a) {
  // Block the stop signals before the listener thread starts so that only
  // sigwait below receives them.
  sigset_t stop;
  sigemptyset(&stop);
  sigaddset(&stop, SIGINT);
  sigaddset(&stop, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop, nullptr);

  auto server = serve_mock(a.port, parse_naming(a.naming), a.host);
  std::cout << "listening on " << server->base_url() << std::endl;
  int sig = 0;
  sigwait(&stop, &sig);
  std::cerr << "llmad: signal " << sig << ", shutting down\n";
  server->stop();
  server->wait();
  return 0;
}

// demo

struct DemoArgs {
  std::string out_dir = "demo_out";
  DensityDemoOptions options;
  BackendFlags backend;
  DetectorFlags detector;
};

int run_demo(DemoArgs a) {
  a.options.detector = resolve(a.detector);
  auto backend = make_backend(a.backend, a.options.detector.naming);
  fs::create_directories(a.out_dir);
  const DensityDemoReport r = density_demo(*backend, a.out_dir, a.options);
  std::printf("batches ok %d, failed %d\n", r.batches_ok, r.batches_failed);
  std::printf("predicted anomalies %zu\n", r.predictions.size());
  std::printf("low-density fraction %.4f\n", r.low_density_fraction);
  std::printf("kde integral %.9f\n", r.integral);
  std::printf("outputs in %s\n", a.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot batch-level tabular anomaly detection with chat models"};
  app.name("llmad");
  app.set_version_flag("--version", "llmad 0.1.0");
  app.set_config("--config", "", "INI file; each subcommand reads its own [section]");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  DetectArgs detect;
  auto* det = app.add_subcommand("detect", "Score every row of a CSV table");
  det->add_option("input", detect.input, "CSV file")->required();
  det->add_option("--out", detect.out, "Write scores here instead of stdout");
  det->add_flag("--label-last", detect.label_last,
                "Drop the last column as labels when there is no label header");
  det->add_option("--backend", detect.backend.kind, "mock: in-process oracle; http: remote endpoint")
      ->check(CLI::IsMember({"mock", "http"}))
      ->capture_default_str();
  add_backend_flags(det, detect.backend);
  add_detector_flags(det, detect.detector);

  SynthArgs synth;
  auto* syn = app.add_subcommand("synth", "Write a synthetic fine-tuning corpus");
  syn->add_option("--train", synth.train, "Training batches (even)")
      ->check(
          [](const std::string& text) {
            const int v = std::atoi(text.c_str());
            return v >= 0 && v % 2 == 0 ? std::string() : "must be even and non-negative";
          },
          "EVEN")->capture_default_str();
  syn->add_option("--val", synth.val, "Validation batches (even)")
      ->check(
          [](const std::string& text) {
            const int v = std::atoi(text.c_str());
            return v >= 0 && v % 2 == 0 ? std::string() : "must be even and non-negative";
          },
          "EVEN")->capture_default_str();
  syn->add_option("--out-dir", synth.out_dir, "Directory for train.jsonl and val.jsonl")
      ->capture_default_str();
  syn->add_option("--seed", synth.params.seed, "Corpus seed")->capture_default_str();
  syn->add_option("--n-low", synth.params.n_low, "Smallest batch size")->capture_default_str();
  syn->add_option("--n-high", synth.params.n_high, "Largest batch size")->capture_default_str();
  syn->add_option("--pi-low", synth.params.pi_low, "Smallest anomaly ratio")->capture_default_str();
  syn->add_option("--pi-high", synth.params.pi_high, "Largest anomaly ratio")->capture_default_str();
  syn->add_option("--mu-low", synth.params.mu_low, "Lower bound for component means")
      ->capture_default_str();
  syn->add_option("--mu-high", synth.params.mu_high, "Upper bound for component means")
      ->capture_default_str();
  syn->add_option("--sigma-low", synth.params.sigma_low, "Smallest normal std")
      ->capture_default_str();
  syn->add_option("--sigma-high", synth.params.sigma_high, "Largest normal std")
      ->capture_default_str();
  syn->add_option("--m-low", synth.params.m_low, "Fewest categories per component")
      ->capture_default_str();
  syn->add_option("--m-high", synth.params.m_high, "Most categories per component")
      ->capture_default_str();
  syn->add_option("--alpha", synth.params.alpha, "Dirichlet concentration")->capture_default_str();
  syn->add_option("--discrete-decimals", synth.discrete_decimals,
                  "Fractional digits for category ids")
      ->check(CLI::Range(0, 300))
      ->capture_default_str();
  add_detector_flags(syn, synth.detector);

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "AUROC benchmark over labelled CSV files");
  ev->add_option("datasets", eval.datasets, "CSV paths or glob patterns")->required();
  ev->add_option("--detector", eval.detector, "Scoring method")
      ->check(CLI::IsMember({"llm", "mock", "knn", "ecod"}))
      ->capture_default_str();
  ev->add_option("--max-rows", eval.max_rows, "Rows sampled per seed")->capture_default_str();
  ev->add_option("--max-cols", eval.max_cols, "Leading columns kept")->capture_default_str();
  ev->add_option("--seeds", eval.seeds, "Comma-separated subsampling seeds")
      ->delimiter(',')
      ->capture_default_str();
  ev->add_option("--k", eval.k, "Neighbour rank for knn")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ev->add_flag("--label-last", eval.label_last,
               "Use the last column as labels when there is no label header");
  ev->add_option("--csv-out", eval.csv_out, "Also write per-seed results as CSV");
  add_backend_flags(ev, eval.backend);
  add_detector_flags(ev, eval.llm);

  ServeArgs serve;
  auto* srv = app.add_subcommand("serve-mock", "Serve the two-sigma oracle over HTTP until SIGINT");
  srv->add_option("--port", serve.port, "TCP port, 0 for any free port")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  srv->add_option("--host", serve.host, "Bind address")->capture_default_str();
  srv->add_option("--naming", serve.naming, "Index wording in replies")
      ->check(CLI::IsMember({"data", "row"}))
      ->capture_default_str();

  DemoArgs demo;
  auto* dem = app.add_subcommand("demo", "Density of flagged values on a bimodal mixture");
  dem->add_option("--out-dir", demo.out_dir, "Directory for the demo outputs")->capture_default_str();
  dem->add_option("--batches", demo.options.batches, "Independent batches")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dem->add_option("--batch-size", demo.options.batch_size, "Values per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dem->add_option("--seed", demo.options.seed, "Sampling seed")->capture_default_str();
  dem->add_option("--bandwidth", demo.options.bandwidth, "KDE bandwidth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dem->add_option("--backend", demo.backend.kind, "mock: in-process oracle; http: remote endpoint")
      ->check(CLI::IsMember({"mock", "http"}))
      ->capture_default_str();
  add_backend_flags(dem, demo.backend);
  add_detector_flags(dem, demo.detector);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*det) return run_detect(detect);
    if (*syn) return run_synth(synth);
    if (*ev) return run_eval(eval);
    if (*srv) return run_serve(serve);
    if (*dem) return run_demo(demo);
  } catch (const std::exception& e) {
    std::cerr << "llmad: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
