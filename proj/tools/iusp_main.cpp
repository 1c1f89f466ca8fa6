// Single entry point for the whole pipeline: synthesize a corpus, extract
// feature caches, train teacher/student models, run the setup suite, tune
// hint placement, evaluate predictions or checkpoints, and render report
// figures. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "iusp/error.hpp"
#include "iusp/features.hpp"
#include "iusp/manifest.hpp"
#include "iusp/metrics.hpp"
#include "iusp/report.hpp"
#include "iusp/synth.hpp"
#include "iusp/trainer.hpp"

namespace fs = std::filesystem;
using namespace iusp;

namespace {

std::string env_data_dir() {
  const char* v = std::getenv("IUSP_DATA_DIR");
  return v ? v : "";
}

// Data directory resolution: explicit flag first, IUSP_DATA_DIR second.
std::string resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  const std::string env = env_data_dir();
  if (!env.empty()) return env;
  throw ConfigError("no data directory: pass --data or set IUSP_DATA_DIR");
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    out.push_back(std::stoull(item, &pos));
    if (pos != item.size()) throw ConfigError("bad list element '" + item + "'");
  }
  if (out.empty()) throw ConfigError("empty list '" + s + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (std::uint64_t v : parse_u64_list(s)) out.push_back(static_cast<int>(v));
  return out;
}

void print_eval(const EvalResult& r) {
  std::cout << "clips " << r.n_clips << "\n";
  std::cout << "micro_auprc " << r.micro << "\n";
  for (int k = 0; k < kNumClasses; ++k)
    std::cout << "auprc_" << kClassNames[static_cast<std::size_t>(k)] << " "
              << r.classwise[static_cast<std::size_t>(k)] << "\n";
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 1;
  int n_train = 96, n_val = 32, n_test = 48;
  double snr_lo = 5.0, snr_hi = 20.0;
};

int cmd_synth(const SynthArgs& a) {
  DatasetSpec spec;
  spec.out_dir = resolve_data_dir(a.out);
  spec.seed = a.seed;
  spec.n_train = a.n_train;
  spec.n_val = a.n_val;
  spec.n_test = a.n_test;
  spec.snr_lo = a.snr_lo;
  spec.snr_hi = a.snr_hi;
  generate_dataset(spec);
  std::cout << "wrote " << (spec.n_train + spec.n_val + spec.n_test)
            << " clips under " << spec.out_dir << "\n";
  return 0;
}

int cmd_features(const std::string& data_flag) {
  const std::string root = resolve_data_dir(data_flag);
  const Corpus corpus = load_corpus(root);
  fs::create_directories(root + "/features");
  int n = 0;
  for (const auto* split : {&corpus.train, &corpus.val, &corpus.test}) {
    for (const auto& e : *split) {
      const FeaturePair fp = extract_pair(read_wav(audio_path(root, e.clip_id)));
      write_feature_file(feature_path(root, e.clip_id), fp);
      ++n;
    }
  }
  std::cout << "wrote " << n << " feature files under " << root
            << "/features\n";
  return 0;
}

struct TrainArgs {
  std::string config, data, out, run_name, setup, teacher, arch = "student";
  std::uint64_t seed = 0;
  int lstm_hidden = 0, epochs = -1, patience = -1, batch = 0;
  double lr = 0.0;
  // count flags from CLI11 decide which overrides apply
  bool has_seed = false, has_hidden = false, has_epochs = false,
       has_patience = false, has_batch = false, has_lr = false;
};

int cmd_train(const TrainArgs& a) {
  if (a.arch == "teacher") {
    TeacherTrainConfig cfg;
    cfg.data_dir = resolve_data_dir(a.data);
    cfg.out_dir = a.out.empty() ? "teacher_out" : a.out;
    if (a.has_seed) cfg.seed = a.seed;
    if (a.has_epochs) cfg.max_epochs = a.epochs;
    if (a.has_patience) cfg.patience = a.patience;
    if (a.has_batch) cfg.batch_size = a.batch;
    if (a.has_lr) cfg.lr = a.lr;
    const TeacherTrainResult r = train_teacher(cfg);
    std::cout << "checkpoint " << r.checkpoint_path << "\n"
              << "epochs " << r.epochs_run << "\n"
              << "best_epoch " << r.best_epoch << "\n"
              << "val_auprc " << r.val_auprc << "\n"
              << "test_auprc " << r.test_auprc << "\n";
    return 0;
  }
  if (a.arch != "student")
    throw ConfigError("unknown arch '" + a.arch + "' (want student|teacher)");

  TrainConfig cfg;
  if (!a.config.empty()) cfg = train_config_from_kv(read_config_file(a.config));
  if (!a.data.empty() || cfg.data_dir.empty())
    cfg.data_dir = resolve_data_dir(a.data.empty() ? cfg.data_dir : a.data);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (cfg.out_dir.empty()) cfg.out_dir = "train_out";
  if (!a.run_name.empty()) cfg.run_name = a.run_name;
  if (!a.teacher.empty()) cfg.teacher_checkpoint = a.teacher;
  if (a.has_seed) cfg.seed = a.seed;
  if (a.has_hidden) cfg.lstm_hidden = a.lstm_hidden;
  if (a.has_epochs) cfg.max_epochs = a.epochs;
  if (a.has_patience) cfg.patience = a.patience;
  if (a.has_batch) cfg.batch_size = a.batch;
  if (a.has_lr) cfg.lr = a.lr;
  // --setup zeroes excluded alphas last so it wins over config-file alphas.
  if (!a.setup.empty()) cfg.weights = setup_weights(setup_from_name(a.setup), cfg.weights);

  const TrainResult r = train_student(cfg);
  std::cout << "run " << cfg.run_name << "\n"
            << "epochs " << r.epochs_run << "\n"
            << "best_epoch " << r.best_epoch << "\n"
            << "val_auprc " << r.val_auprc << "\n"
            << "test_auprc " << r.test_auprc << "\n";
  if (!r.checkpoint_path.empty())
    std::cout << "checkpoint " << r.checkpoint_path << "\n";
  return 0;
}

struct SuiteArgs {
  std::string data, out, teacher, seeds = "1,2,3,4,5,6,7,8", sizes = "32";
  int jobs = 1, epochs = -1, patience = -1, batch = 0;
  double lr = 0.0;
  std::uint64_t unused = 0;
  bool has_epochs = false, has_patience = false, has_batch = false,
       has_lr = false;
};

int cmd_suite(const SuiteArgs& a) {
  SuiteConfig cfg;
  cfg.data_dir = resolve_data_dir(a.data);
  cfg.out_dir = a.out.empty() ? "suite_out" : a.out;
  cfg.teacher_checkpoint = a.teacher;
  cfg.seeds = parse_u64_list(a.seeds);
  cfg.lstm_sizes = parse_int_list(a.sizes);
  cfg.jobs = a.jobs;
  if (a.has_epochs) cfg.base.max_epochs = a.epochs;
  if (a.has_patience) cfg.base.patience = a.patience;
  if (a.has_batch) cfg.base.batch_size = a.batch;
  if (a.has_lr) cfg.base.lr = a.lr;

  const SuiteResult res = run_setup_suite(cfg);
  int failed = 0;
  for (const auto& row : res.rows)
    if (row.failed) ++failed;
  std::cout << "runs " << res.rows.size() << " (" << failed << " failed)\n";
  std::cout << "metrics " << res.metrics_csv << "\n";
  std::cout << "summary " << res.summary_csv << "\n";
  const double base = res.mean_test_auprc(Setup::kBce);
  for (int i = 0; i < 5; ++i) {
    const auto s = static_cast<Setup>(i);
    const double mean = res.mean_test_auprc(s);
    std::cout << setup_name(s) << " mean_test_auprc " << mean;
    if (i > 0) std::cout << " (" << (mean >= base ? "+" : "") << mean - base
                         << " vs bce)";
    std::cout << "\n";
  }
  return 0;
}

struct TuneArgs {
  std::string data, out, teacher, setup = "bce_kd_iusp", sizes = "32";
  int trials = 1, jobs = 1, epochs = -1, patience = -1;
  std::uint64_t seed = 1;
  bool has_epochs = false, has_patience = false;
};

int cmd_tune(const TuneArgs& a) {
  TuneConfig cfg;
  cfg.data_dir = resolve_data_dir(a.data);
  cfg.out_dir = a.out.empty() ? "tune_out" : a.out;
  cfg.teacher_checkpoint = a.teacher;
  cfg.setup = setup_from_name(a.setup);
  cfg.lstm_sizes = parse_int_list(a.sizes);
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.jobs = a.jobs;
  if (a.has_epochs) cfg.base.max_epochs = a.epochs;
  if (a.has_patience) cfg.base.patience = a.patience;

  const TuneResult res = tune_hint_layers(cfg);
  for (const auto& row : res.rows)
    std::cout << row.teacher_hint << " + " << row.student_hint
              << "  mean_val_auprc " << row.mean_val_auprc
              << "  mean_test_auprc " << row.mean_test_auprc << "\n";
  std::cout << "best " << res.best.teacher_hint << " + "
            << res.best.student_hint << "\n";
  std::cout << "table " << res.csv_path << "\n";
  return 0;
}

struct EvalArgs {
  std::string pred, labels, checkpoint, data, split = "test";
};

int cmd_eval(const EvalArgs& a) {
  if (!a.pred.empty() || !a.labels.empty()) {
    if (a.pred.empty() || a.labels.empty())
      throw ConfigError("prediction mode needs both --pred and --labels");
    if (!a.checkpoint.empty())
      throw ConfigError("pass either --pred/--labels or --checkpoint, not both");
    print_eval(evaluate_predictions(a.pred, a.labels));
    return 0;
  }
  if (a.checkpoint.empty())
    throw ConfigError("eval needs --pred/--labels or --checkpoint");
  print_eval(
      evaluate_checkpoint(a.checkpoint, resolve_data_dir(a.data), a.split));
  return 0;
}

struct ReportArgs {
  std::string run_dir, data, out;
};

int cmd_report(const ReportArgs& a) {
  const std::string metrics = a.run_dir + "/metrics.csv";
  if (!fs::exists(metrics))
    throw IoError("no suite results under " + a.run_dir + " (missing metrics.csv)");
  const std::string out = a.out.empty() ? a.run_dir + "/report" : a.out;
  write_suite_report(metrics, out);

  // Sample-clip figures are best-effort: they need the corpus audio.
  std::string data = a.data;
  if (data.empty()) data = env_data_dir();
  if (!data.empty() && fs::exists(data + "/test.csv")) {
    const auto rows = read_manifest(data + "/test.csv");
    const int tonal = class_index("alert-signal");
    const int voice = class_index("human-voice");
    const ManifestEntry* tonal_clip = nullptr;
    const ManifestEntry* voice_clip = nullptr;
    for (const auto& e : rows) {
      if (!tonal_clip && e.labels[static_cast<std::size_t>(tonal)]) tonal_clip = &e;
      if (!voice_clip && e.labels[static_cast<std::size_t>(voice)]) voice_clip = &e;
    }
    if (tonal_clip)
      write_clip_figures(data, tonal_clip->clip_id, out, "repetitive_tonal");
    if (voice_clip)
      write_clip_figures(data, voice_clip->clip_id, out, "nonstationary");
  } else {
    std::cerr << "note: no corpus audio available, skipping clip figures\n";
  }
  std::cout << "report written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"similarity-preserving knowledge distillation toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  synth->add_option("--out", synth_args.out, "output corpus directory");
  synth->add_option("--seed", synth_args.seed, "corpus seed");
  synth->add_option("--train", synth_args.n_train, "train clip count");
  synth->add_option("--val", synth_args.n_val, "val clip count");
  synth->add_option("--test", synth_args.n_test, "test clip count");
  synth->add_option("--snr-lo", synth_args.snr_lo, "min event SNR (dB)");
  synth->add_option("--snr-hi", synth_args.snr_hi, "max event SNR (dB)");

  std::string features_data;
  auto* features = app.add_subcommand("features", "write per-clip feature caches");
  features->add_option("--data", features_data, "corpus directory");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train one model");
  train->add_option("--config", train_args.config, "key=value run config file");
  train->add_option("--data", train_args.data, "corpus directory");
  train->add_option("--out", train_args.out, "output directory");
  train->add_option("--run-name", train_args.run_name, "run name prefix");
  train->add_option("--setup", train_args.setup,
                    "bce|bce_kd|bce_kd_sp|bce_kd_iusp|bce_kd_sp_iusp");
  train->add_option("--teacher", train_args.teacher, "teacher checkpoint");
  train->add_option("--arch", train_args.arch, "student|teacher");
  auto* t_seed = train->add_option("--seed", train_args.seed, "run seed");
  auto* t_hidden =
      train->add_option("--lstm-hidden", train_args.lstm_hidden, "LSTM width");
  auto* t_epochs = train->add_option("--epochs", train_args.epochs, "max epochs");
  auto* t_pat = train->add_option("--patience", train_args.patience,
                                  "early-stopping patience");
  auto* t_batch = train->add_option("--batch-size", train_args.batch, "batch size");
  auto* t_lr = train->add_option("--lr", train_args.lr, "learning rate");

  SuiteArgs suite_args;
  auto* suite = app.add_subcommand("suite", "run the five-setup protocol");
  suite->add_option("--data", suite_args.data, "corpus directory");
  suite->add_option("--out", suite_args.out, "output directory");
  suite->add_option("--teacher", suite_args.teacher,
                    "teacher checkpoint (trained here when omitted)");
  suite->add_option("--seeds", suite_args.seeds, "comma list of run seeds");
  suite->add_option("--lstm-hidden", suite_args.sizes, "comma list of LSTM widths");
  suite->add_option("--jobs", suite_args.jobs, "parallel runs");
  auto* s_epochs = suite->add_option("--epochs", suite_args.epochs, "max epochs");
  auto* s_pat =
      suite->add_option("--patience", suite_args.patience, "early-stopping patience");
  auto* s_batch = suite->add_option("--batch-size", suite_args.batch, "batch size");
  auto* s_lr = suite->add_option("--lr", suite_args.lr, "learning rate");

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune-hints", "grid-search hint placement");
  tune->add_option("--data", tune_args.data, "corpus directory");
  tune->add_option("--out", tune_args.out, "output directory");
  tune->add_option("--teacher", tune_args.teacher,
                   "teacher checkpoint (trained here when omitted)");
  tune->add_option("--setup", tune_args.setup, "setup whose hint loss is placed");
  tune->add_option("--lstm-hidden", tune_args.sizes, "comma list of LSTM widths");
  tune->add_option("--trials", tune_args.trials, "trials per grid cell");
  tune->add_option("--seed", tune_args.seed, "base seed for trials");
  tune->add_option("--jobs", tune_args.jobs, "parallel runs");
  auto* g_epochs = tune->add_option("--epochs", tune_args.epochs, "max epochs");
  auto* g_pat =
      tune->add_option("--patience", tune_args.patience, "early-stopping patience");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score predictions or a checkpoint");
  eval->add_option("--pred", eval_args.pred, "predictions CSV (clip_id + scores)");
  eval->add_option("--labels", eval_args.labels, "label manifest CSV");
  eval->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint");
  eval->add_option("--data", eval_args.data, "corpus directory (checkpoint mode)");
  eval->add_option("--split", eval_args.split, "train|val|test (checkpoint mode)");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "render figures from suite results");
  report
      ->add_option("run_dir", report_args.run_dir, "suite output directory")
      ->required();
  report->add_option("--data", report_args.data, "corpus directory for clip figures");
  report->add_option("--out", report_args.out, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (features->parsed()) return cmd_features(features_data);
    if (train->parsed()) {
      train_args.has_seed = t_seed->count() > 0;
      train_args.has_hidden = t_hidden->count() > 0;
      train_args.has_epochs = t_epochs->count() > 0;
      train_args.has_patience = t_pat->count() > 0;
      train_args.has_batch = t_batch->count() > 0;
      train_args.has_lr = t_lr->count() > 0;
      return cmd_train(train_args);
    }
    if (suite->parsed()) {
      suite_args.has_epochs = s_epochs->count() > 0;
      suite_args.has_patience = s_pat->count() > 0;
      suite_args.has_batch = s_batch->count() > 0;
      suite_args.has_lr = s_lr->count() > 0;
      return cmd_suite(suite_args);
    }
    if (tune->parsed()) {
      tune_args.has_epochs = g_epochs->count() > 0;
      tune_args.has_patience = g_pat->count() > 0;
      return cmd_tune(tune_args);
    }
    if (eval->parsed()) return cmd_eval(eval_args);
    if (report->parsed()) return cmd_report(report_args);
    std::cerr << "usage: no subcommand\n";
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid-input: " << e.what() << "\n";
  } catch (const IoError& e) {
    std::cerr << "io: " << e.what() << "\n";
  } catch (const ParseError& e) {
    std::cerr << "parse: " << e.what() << "\n";
  } catch (const IndexError& e) {
    std::cerr << "index: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << "\n";
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
  } catch (const UndefinedRecallError& e) {
    std::cerr << "undefined-recall: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << "\n";
  }
  return 1;
}
