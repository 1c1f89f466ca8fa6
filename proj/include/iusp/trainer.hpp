#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "iusp/losses.hpp"
#include "iusp/manifest.hpp"
#include "iusp/model.hpp"

namespace iusp {

// Tracks the best value of a maximized validation metric. Improvement is
// strict; `update` returns true when the new value sets a record. Training
// stops once the metric has failed to improve for MORE than `patience`
// consecutive epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  bool update(double metric);
  bool should_stop() const { return since_best_ > patience_; }
  int best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  int patience_;
  int epoch_ = 0, best_epoch_ = -1, since_best_ = 0;
  double best_ = -1.0;
};

// key=value per line; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> read_config_file(const std::string& path);

// The five published training setups.
enum class Setup { kBce = 0, kBceKd, kBceKdSp, kBceKdIusp, kAll };
inline constexpr std::array<const char*, 5> kSetupNames = {
    "bce", "bce_kd", "bce_kd_sp", "bce_kd_iusp", "bce_kd_sp_iusp"};
const char* setup_name(Setup s);
Setup setup_from_name(const std::string& name);  // throws ConfigError
// Zeroes the alphas of the terms a setup excludes; kept terms keep the base
// weights (1, 10, 10, 1 by default).
LossWeights setup_weights(Setup s, const LossWeights& base = LossWeights{});

struct TrainConfig {
  std::string data_dir;
  std::string out_dir;
  std::string run_name = "run";
  int lstm_hidden = 32;
  int batch_size = 16;
  int max_epochs = 300;
  int patience = 20;
  double lr = 1e-4;
  uint64_t seed = 1;
  LossWeights weights;
  // Hint pairing, teacher side / student side, one pair per hint loss.
  std::string sp_teacher_hint = "mp2";
  std::string sp_student_hint = "cnn";
  std::string iusp_teacher_hint = "mp1";
  std::string iusp_student_hint = "cnn";
  std::string teacher_checkpoint;  // required when any of kd/sp/iusp is on
  bool write_loss_log = true;
  bool write_checkpoint = true;
};

// Builds a TrainConfig from key=value pairs — the same format every run
// writes next to its outputs, so a run can be reproduced from its own
// manifest. Unknown keys and malformed numbers raise ConfigError.
TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv);
void write_train_config(const std::string& path, const TrainConfig& cfg);

struct TrainResult {
  double val_auprc = 0.0;
  double test_auprc = 0.0;
  std::vector<double> test_classwise;
  int best_epoch = -1;
  int epochs_run = 0;
  long steps = 0;
  std::string checkpoint_path;
  std::string loss_log_path;   // per-step loss components (TSV)
  std::string epoch_log_path;  // per-epoch mean components + val AUPRC (CSV)
};

// In-memory per-clip feature store (both input resolutions), loaded once
// and shared by every run over the same corpus.
class FeatureStore;

// Frozen-teacher quantities for one corpus: logits, the hint maps named in
// the config, and squashed frame grams for the IUSP pairing. Built lazily,
// shared across runs.
class TeacherContext;

std::shared_ptr<FeatureStore> open_feature_store(const Corpus& corpus);
std::shared_ptr<TeacherContext> open_teacher_context(
    const std::string& teacher_checkpoint, const Corpus& corpus,
    std::shared_ptr<FeatureStore> features);

struct TeacherTrainConfig {
  std::string data_dir;
  std::string out_dir;
  int max_epochs = 40;
  int patience = 10;
  int batch_size = 16;
  double lr = 1e-3;
  uint64_t seed = 1;
};

struct TeacherTrainResult {
  double val_auprc = 0.0;
  double test_auprc = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  std::string checkpoint_path;
};

TeacherTrainResult train_teacher(const TeacherTrainConfig& cfg);
TeacherTrainResult train_teacher(const TeacherTrainConfig& cfg, const Corpus& corpus,
                                 std::shared_ptr<FeatureStore> features);

TrainResult train_student(const TrainConfig& cfg);
// Shared-cache variant used by suite/tune runs. `teacher` may be null only
// when every distillation alpha is zero.
TrainResult train_student(const TrainConfig& cfg, const Corpus& corpus,
                          std::shared_ptr<FeatureStore> features,
                          std::shared_ptr<TeacherContext> teacher);

struct SuiteConfig {
  std::string data_dir;
  std::string out_dir;
  // When empty, the suite trains its own teacher under out_dir/teacher first.
  std::string teacher_checkpoint;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> lstm_sizes = {32};
  TrainConfig base;  // epochs, lr, hints, ...
  int jobs = 1;      // parallel worker threads over independent runs
};

struct SuiteRow {
  Setup setup;
  uint64_t seed = 0;
  int lstm_hidden = 0;
  TrainResult result;
  bool failed = false;  // a failed run is recorded, the suite continues
  std::string error;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  std::string metrics_csv;  // out_dir/metrics.csv, one row per run
  std::string summary_csv;  // out_dir/summary.csv, one row per (setup, size)
  double mean_test_auprc(Setup s) const;
  double mean_val_auprc(Setup s) const;
};

// Runs the full setup x size x seed cross-product. metrics.csv rows:
//   setup,seed,lstm_hidden,val_auprc,test_auprc,best_epoch,epochs,steps,
//   <classwise columns>,status
// summary.csv rows carry per-(setup, size) mean and standard error plus
// absolute and relative improvement over the BCE baseline of the same size.
SuiteResult run_setup_suite(const SuiteConfig& cfg);

struct TuneConfig {
  std::string data_dir;
  std::string out_dir;
  std::string teacher_checkpoint;  // empty: train one under out_dir/teacher
  Setup setup = Setup::kBceKdIusp;  // which hint loss is being placed
  std::vector<int> lstm_sizes = {32};
  int trials = 1;     // runs per (pair, size) cell
  uint64_t seed = 1;  // per-trial seeds derive from this
  TrainConfig base;
  int jobs = 1;
};

struct TuneRow {
  std::string teacher_hint, student_hint;
  // Averaged over every LSTM size and trial in the cell.
  double mean_val_auprc = 0.0, mean_test_auprc = 0.0;
};

struct TuneResult {
  std::vector<TuneRow> rows;  // all 8 teacher x student combinations
  std::string csv_path;       // out_dir/hints.csv
  TuneRow best;  // best mean val AUPRC; ties break to the first combination
                 // in (teacher layer, student layer) enumeration order
};

TuneResult tune_hint_layers(const TuneConfig& cfg);

// Loads a saved checkpoint (teacher or student, recognized from the header),
// scores one manifest split of a corpus, and reports micro + classwise AUPRC.
struct EvalResult {
  double micro = 0.0;
  std::vector<double> classwise;
  int n_clips = 0;
  std::string arch;  // "teacher" or "student"
};
EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& data_dir,
                               const std::string& split);

// Scores a predictions CSV (header `clip_id` + the 8 class columns, scores
// in [0,1]) against a label manifest, joined by clip_id. Every manifest clip
// needs exactly one prediction row; unmatched rows on either side are a
// ParseError.
EvalResult evaluate_predictions(const std::string& pred_csv,
                                const std::string& labels_csv);

}  // namespace iusp
