#include "iusp/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "iusp/error.hpp"
#include "iusp/features.hpp"
#include "iusp/metrics.hpp"
#include "iusp/rng.hpp"
#include "iusp/synth.hpp"
#include "iusp/tensor_io.hpp"

namespace fs = std::filesystem;

namespace iusp {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// %.17g round-trips doubles exactly, so logs and config manifests can be
// re-read without loss.
std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long out = 0;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  return static_cast<int>(out);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

// Commas and newlines inside a recorded error message would break the CSV row.
std::string csv_sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::string header_value(const std::string& header, const std::string& key) {
  std::istringstream in(header);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (trim(line.substr(0, eq)) == key) return trim(line.substr(eq + 1));
  }
  return {};
}

Eigen::MatrixXd labels_matrix(const std::vector<ManifestEntry>& rows) {
  Eigen::MatrixXd m(static_cast<int>(rows.size()), kNumClasses);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    for (int k = 0; k < kNumClasses; ++k) m(i, k) = rows[i].labels[k];
  return m;
}

std::vector<Eigen::MatrixXd> snapshot_params(const std::vector<Param*>& ps) {
  std::vector<Eigen::MatrixXd> snap;
  snap.reserve(ps.size());
  for (const Param* p : ps) snap.push_back(p->value);
  return snap;
}

void restore_params(const std::vector<Param*>& ps,
                    const std::vector<Eigen::MatrixXd>& snap) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = snap[i];
}

void validate_hint_pair(const std::string& teacher, const std::string& student) {
  const auto& tn = TeacherNet::hint_names();
  if (std::find(tn.begin(), tn.end(), teacher) == tn.end())
    throw ConfigError("unknown teacher hint layer '" + teacher + "'");
  const auto& sn = StudentNet::hint_names();
  if (std::find(sn.begin(), sn.end(), student) == sn.end())
    throw ConfigError("unknown student hint layer '" + student + "'");
}

// Runs fn(0..n-1) over `jobs` worker threads. Exceptions surface on the
// calling thread after every worker has drained.
void run_parallel(int jobs, int n, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_kv_file(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

}  // namespace

bool EarlyStopper::update(double metric) {
  const int epoch = epoch_++;
  if (metric > best_) {
    best_ = metric;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

const char* setup_name(Setup s) { return kSetupNames[static_cast<int>(s)]; }

Setup setup_from_name(const std::string& name) {
  for (int i = 0; i < static_cast<int>(kSetupNames.size()); ++i)
    if (name == kSetupNames[i]) return static_cast<Setup>(i);
  throw ConfigError("unknown setup '" + name + "'");
}

LossWeights setup_weights(Setup s, const LossWeights& base) {
  LossWeights w = base;
  switch (s) {
    case Setup::kBce:
      w.alpha_kd = w.alpha_sp = w.alpha_iusp = 0.0;
      break;
    case Setup::kBceKd:
      w.alpha_sp = w.alpha_iusp = 0.0;
      break;
    case Setup::kBceKdSp:
      w.alpha_iusp = 0.0;
      break;
    case Setup::kBceKdIusp:
      w.alpha_sp = 0.0;
      break;
    case Setup::kAll:
      break;
  }
  return w;
}

TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv) {
  TrainConfig cfg;
  const Setup* setup_seen = nullptr;
  Setup setup_value = Setup::kBce;
  for (const auto& [key, v] : kv) {
    if (key == "data_dir") cfg.data_dir = v;
    else if (key == "out_dir") cfg.out_dir = v;
    else if (key == "run_name") cfg.run_name = v;
    else if (key == "lstm_hidden") cfg.lstm_hidden = parse_int(key, v);
    else if (key == "batch_size") cfg.batch_size = parse_int(key, v);
    else if (key == "max_epochs") cfg.max_epochs = parse_int(key, v);
    else if (key == "patience") cfg.patience = parse_int(key, v);
    else if (key == "lr") cfg.lr = parse_double(key, v);
    else if (key == "seed") cfg.seed = parse_u64(key, v);
    else if (key == "alpha_bce") cfg.weights.alpha_bce = parse_double(key, v);
    else if (key == "alpha_kd") cfg.weights.alpha_kd = parse_double(key, v);
    else if (key == "alpha_sp") cfg.weights.alpha_sp = parse_double(key, v);
    else if (key == "alpha_iusp") cfg.weights.alpha_iusp = parse_double(key, v);
    else if (key == "kd_temperature")
      cfg.weights.kd_temperature = parse_double(key, v);
    else if (key == "squash_gamma") cfg.weights.squash.gamma = parse_double(key, v);
    else if (key == "squash_delta") cfg.weights.squash.delta = parse_double(key, v);
    else if (key == "sp_teacher_hint") cfg.sp_teacher_hint = v;
    else if (key == "sp_student_hint") cfg.sp_student_hint = v;
    else if (key == "iusp_teacher_hint") cfg.iusp_teacher_hint = v;
    else if (key == "iusp_student_hint") cfg.iusp_student_hint = v;
    else if (key == "teacher_checkpoint") cfg.teacher_checkpoint = v;
    else if (key == "write_loss_log") cfg.write_loss_log = parse_bool(key, v);
    else if (key == "write_checkpoint") cfg.write_checkpoint = parse_bool(key, v);
    else if (key == "setup") {
      setup_value = setup_from_name(v);
      setup_seen = &setup_value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  // `setup` zeroes the excluded alphas after any explicit alpha overrides, so
  // the two ways of writing a config cannot silently disagree.
  if (setup_seen) cfg.weights = setup_weights(setup_value, cfg.weights);
  return cfg;
}

void write_train_config(const std::string& path, const TrainConfig& cfg) {
  write_kv_file(
      path,
      {{"data_dir", cfg.data_dir},
       {"out_dir", cfg.out_dir},
       {"run_name", cfg.run_name},
       {"lstm_hidden", std::to_string(cfg.lstm_hidden)},
       {"batch_size", std::to_string(cfg.batch_size)},
       {"max_epochs", std::to_string(cfg.max_epochs)},
       {"patience", std::to_string(cfg.patience)},
       {"lr", fmt17(cfg.lr)},
       {"seed", std::to_string(cfg.seed)},
       {"alpha_bce", fmt17(cfg.weights.alpha_bce)},
       {"alpha_kd", fmt17(cfg.weights.alpha_kd)},
       {"alpha_sp", fmt17(cfg.weights.alpha_sp)},
       {"alpha_iusp", fmt17(cfg.weights.alpha_iusp)},
       {"kd_temperature", fmt17(cfg.weights.kd_temperature)},
       {"squash_gamma", fmt17(cfg.weights.squash.gamma)},
       {"squash_delta", fmt17(cfg.weights.squash.delta)},
       {"sp_teacher_hint", cfg.sp_teacher_hint},
       {"sp_student_hint", cfg.sp_student_hint},
       {"iusp_teacher_hint", cfg.iusp_teacher_hint},
       {"iusp_student_hint", cfg.iusp_student_hint},
       {"teacher_checkpoint", cfg.teacher_checkpoint},
       {"write_loss_log", cfg.write_loss_log ? "1" : "0"},
       {"write_checkpoint", cfg.write_checkpoint ? "1" : "0"}});
}

// ---------------------------------------------------------------------------
// Feature store

class FeatureStore {
 public:
  explicit FeatureStore(const Corpus& corpus) : root_(corpus.root) {
    load_split(corpus.train);
    load_split(corpus.val);
    load_split(corpus.test);
    teacher_std_ = compute_std(corpus.train, /*teacher_view=*/true);
    student_std_ = compute_std(corpus.train, /*teacher_view=*/false);
  }

  const FeaturePair& get(const std::string& clip_id) const {
    const auto it = by_id_.find(clip_id);
    if (it == by_id_.end()) throw IndexError("unknown clip id '" + clip_id + "'");
    return it->second;
  }

  Standardization teacher_standardization() const { return teacher_std_; }
  Standardization student_standardization() const { return student_std_; }

 private:
  void load_split(const std::vector<ManifestEntry>& rows) {
    for (const auto& e : rows) {
      if (by_id_.count(e.clip_id)) continue;
      const std::string path = audio_path(root_, e.clip_id);
      if (!fs::exists(path))
        throw IoError("clip '" + e.clip_id + "': missing audio file " + path);
      by_id_.emplace(e.clip_id, extract_pair(read_wav(path)));
    }
  }

  // Scalar population mean/std over every train-split cell, two-pass.
  Standardization compute_std(const std::vector<ManifestEntry>& rows,
                              bool teacher_view) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : rows) {
      const auto& m = teacher_view ? get(e.clip_id).teacher_input
                                   : get(e.clip_id).student_input;
      for (double v : m.values) sum += v;
      n += m.values.size();
    }
    Standardization st;
    if (n == 0) return st;
    st.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& e : rows) {
      const auto& m = teacher_view ? get(e.clip_id).teacher_input
                                   : get(e.clip_id).student_input;
      for (double v : m.values) ss += (v - st.mean) * (v - st.mean);
    }
    st.std = std::sqrt(std::max(ss / static_cast<double>(n), 1e-12));
    return st;
  }

  std::string root_;
  std::map<std::string, FeaturePair> by_id_;
  Standardization teacher_std_, student_std_;
};

std::shared_ptr<FeatureStore> open_feature_store(const Corpus& corpus) {
  return std::make_shared<FeatureStore>(corpus);
}

namespace {

// Standardized input batch, rows[order[lo..hi)] stacked along the batch axis.
FeatureMap batch_input(const FeatureStore& store,
                       const std::vector<ManifestEntry>& rows,
                       const std::vector<int>& order, int lo, int hi,
                       bool teacher_view, const Standardization& st) {
  const int b = hi - lo;
  const auto& first = teacher_view
                          ? store.get(rows[order[lo]].clip_id).teacher_input
                          : store.get(rows[order[lo]].clip_id).student_input;
  FeatureMap in(b, 1, first.mel_bins, first.frames, "input");
  const double inv = 1.0 / st.std;
  for (int bi = 0; bi < b; ++bi) {
    const auto& m = teacher_view
                        ? store.get(rows[order[lo + bi]].clip_id).teacher_input
                        : store.get(rows[order[lo + bi]].clip_id).student_input;
    double* dst = in.v.data() + static_cast<std::size_t>(bi) * m.values.size();
    for (std::size_t k = 0; k < m.values.size(); ++k)
      dst[k] = (m.values[k] - st.mean) * inv;
  }
  return in;
}

Eigen::MatrixXd batch_targets(const std::vector<ManifestEntry>& rows,
                              const std::vector<int>& order, int lo, int hi) {
  Eigen::MatrixXd t(hi - lo, kNumClasses);
  for (int bi = 0; bi < hi - lo; ++bi)
    for (int k = 0; k < kNumClasses; ++k)
      t(bi, k) = rows[order[lo + bi]].labels[k];
  return t;
}

std::vector<int> identity_order(std::size_t n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

Eigen::MatrixXd student_scores(StudentNet& net, const FeatureStore& store,
                               const std::vector<ManifestEntry>& rows,
                               const Standardization& st, int batch_size) {
  const int n = static_cast<int>(rows.size());
  const std::vector<int> order = identity_order(rows.size());
  Eigen::MatrixXd scores(n, kNumClasses);
  for (int lo = 0; lo < n; lo += batch_size) {
    const int hi = std::min(n, lo + batch_size);
    const FeatureMap in = batch_input(store, rows, order, lo, hi, false, st);
    scores.middleRows(lo, hi - lo) = sigmoid(net.forward(in).logits);
  }
  return scores;
}

Eigen::MatrixXd teacher_scores(TeacherNet& net, const FeatureStore& store,
                               const std::vector<ManifestEntry>& rows,
                               const Standardization& st, int batch_size) {
  const int n = static_cast<int>(rows.size());
  const std::vector<int> order = identity_order(rows.size());
  Eigen::MatrixXd scores(n, kNumClasses);
  for (int lo = 0; lo < n; lo += batch_size) {
    const int hi = std::min(n, lo + batch_size);
    const FeatureMap in = batch_input(store, rows, order, lo, hi, true, st);
    scores.middleRows(lo, hi - lo) = sigmoid(net.forward(in).logits);
  }
  return scores;
}

}  // namespace

// ---------------------------------------------------------------------------
// Frozen-teacher context

class TeacherContext {
 public:
  TeacherContext(const std::string& checkpoint, std::shared_ptr<FeatureStore> features)
      : features_(std::move(features)), net_(load_teacher(checkpoint, &std_)) {}

  Eigen::RowVectorXd logits(const std::string& clip_id) {
    std::lock_guard<std::mutex> lock(mu_);
    return ensure(clip_id).logits;
  }

  // b = 1 map for one clip; reference stays valid for the context's lifetime.
  const FeatureMap& hint(const std::string& clip_id, const std::string& layer) {
    std::lock_guard<std::mutex> lock(mu_);
    return ensure(clip_id).hints[static_cast<std::size_t>(TeacherNet::hint_index(layer))];
  }

  // Squashed frame gram of the clip's hint map, resized to the student's
  // (h, w) before normalization. Cached per (layer, shape, squash, clip).
  const Eigen::MatrixXd& iusp_gram(const std::string& clip_id,
                                   const std::string& layer, int h, int w,
                                   const SquashParams& p) {
    std::lock_guard<std::mutex> lock(mu_);
    const std::string key = layer + "|" + std::to_string(h) + "x" +
                            std::to_string(w) + "|" + fmt17(p.gamma) + "|" +
                            fmt17(p.delta) + "|" + clip_id;
    const auto it = gram_cache_.find(key);
    if (it != gram_cache_.end()) return it->second;
    const FeatureMap& hm =
        ensure(clip_id).hints[static_cast<std::size_t>(TeacherNet::hint_index(layer))];
    std::vector<Eigen::MatrixXd> grams = iusp_teacher_grams(hm, h, w, p);
    return gram_cache_.emplace(key, std::move(grams[0])).first->second;
  }

  // Frees the per-shape gram cache between hint-grid cells.
  void drop_iusp_cache() {
    std::lock_guard<std::mutex> lock(mu_);
    gram_cache_.clear();
  }

  Standardization standardization() const { return std_; }

 private:
  struct ClipOut {
    Eigen::RowVectorXd logits;
    std::array<FeatureMap, 4> hints;
    ClipOut()
        : hints{FeatureMap(0, 0, 0, 0), FeatureMap(0, 0, 0, 0),
                FeatureMap(0, 0, 0, 0), FeatureMap(0, 0, 0, 0)} {}
  };

  ClipOut& ensure(const std::string& clip_id) {
    const auto it = clip_cache_.find(clip_id);
    if (it != clip_cache_.end()) return it->second;
    const LogMelSpectrogram& m = features_->get(clip_id).teacher_input;
    FeatureMap in(1, 1, m.mel_bins, m.frames, "input");
    const double inv = 1.0 / std_.std;
    for (std::size_t k = 0; k < m.values.size(); ++k)
      in.v[k] = (m.values[k] - std_.mean) * inv;
    TeacherNet::Output out = net_.forward(in);
    ClipOut co;
    co.logits = out.logits.row(0);
    co.hints = std::move(out.hints);
    return clip_cache_.emplace(clip_id, std::move(co)).first->second;
  }

  std::shared_ptr<FeatureStore> features_;
  Standardization std_;
  TeacherNet net_;
  std::mutex mu_;
  std::map<std::string, ClipOut> clip_cache_;
  std::map<std::string, Eigen::MatrixXd> gram_cache_;
};

std::shared_ptr<TeacherContext> open_teacher_context(
    const std::string& teacher_checkpoint, const Corpus& corpus,
    std::shared_ptr<FeatureStore> features) {
  (void)corpus;  // the context resolves clips lazily through the store
  return std::make_shared<TeacherContext>(teacher_checkpoint, std::move(features));
}

namespace {

FeatureMap stack_teacher_hints(TeacherContext& teacher,
                               const std::vector<ManifestEntry>& rows,
                               const std::vector<int>& order, int lo, int hi,
                               const std::string& layer) {
  const FeatureMap& first = teacher.hint(rows[order[lo]].clip_id, layer);
  FeatureMap out(hi - lo, first.c, first.h, first.w, layer);
  const std::size_t slice = first.v.size();
  for (int bi = 0; bi < hi - lo; ++bi) {
    const FeatureMap& m = teacher.hint(rows[order[lo + bi]].clip_id, layer);
    std::copy(m.v.begin(), m.v.end(),
              out.v.begin() + static_cast<std::size_t>(bi) * slice);
  }
  return out;
}

// Accumulates alpha * g into the gradient slot for one student hint layer.
void add_scaled(const FeatureMap& g, double alpha, FeatureMap* acc) {
  if (acc->b == 0) {
    *acc = g;
    for (double& v : acc->v) v *= alpha;
    return;
  }
  if (!acc->same_shape(g))
    throw InvalidInput("hint gradient shape mismatch on layer '" + g.layer_id + "'");
  for (std::size_t i = 0; i < g.v.size(); ++i) acc->v[i] += alpha * g.v[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Teacher training

TeacherTrainResult train_teacher(const TeacherTrainConfig& cfg,
                                 const Corpus& corpus,
                                 std::shared_ptr<FeatureStore> features) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (cfg.max_epochs > 0 && cfg.patience >= cfg.max_epochs)
    throw ConfigError("patience must be smaller than max_epochs");
  if (corpus.train.empty()) throw ConfigError("train split is empty");
  if (corpus.val.empty()) throw ConfigError("val split is empty");
  fs::create_directories(cfg.out_dir);

  TeacherNet net;
  {
    Rng init_rng(derive_seed(cfg.seed, "teacher-init"));
    net.init(init_rng);
  }
  const Standardization st = features->teacher_standardization();
  auto params = net.params();
  Adam opt(params, cfg.lr);
  Rng order_rng(derive_seed(cfg.seed, "teacher-order"));
  EarlyStopper stopper(cfg.patience);
  std::vector<Eigen::MatrixXd> best = snapshot_params(params);

  const Eigen::MatrixXd val_labels = labels_matrix(corpus.val);
  const int n = static_cast<int>(corpus.train.size());
  std::vector<int> order = identity_order(corpus.train.size());
  long step = 0;

  TeacherTrainResult res;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    for (int lo = 0; lo < n; lo += cfg.batch_size) {
      const int hi = std::min(n, lo + cfg.batch_size);
      const FeatureMap in = batch_input(*features, corpus.train, order, lo, hi,
                                        /*teacher_view=*/true, st);
      const Eigen::MatrixXd targets = batch_targets(corpus.train, order, lo, hi);
      TeacherNet::Output out = net.forward(in);
      const double loss = bce_with_logits(out.logits, targets);
      ++step;
      if (!std::isfinite(loss))
        throw DivergenceError(
            "teacher training diverged: non-finite loss at step " +
                std::to_string(step),
            step);
      opt.zero_grad();
      net.backward(bce_with_logits_grad(out.logits, targets));
      opt.step();
    }
    ++res.epochs_run;
    const double val = micro_auprc(
        teacher_scores(net, *features, corpus.val, st, cfg.batch_size),
        val_labels);
    if (stopper.update(val)) best = snapshot_params(params);
    if (stopper.should_stop()) break;
  }

  restore_params(params, best);
  if (stopper.best_epoch() >= 0) {
    res.val_auprc = stopper.best();
    res.best_epoch = stopper.best_epoch();
  } else {
    res.val_auprc = micro_auprc(
        teacher_scores(net, *features, corpus.val, st, cfg.batch_size),
        val_labels);
  }
  if (!corpus.test.empty()) {
    res.test_auprc = micro_auprc(
        teacher_scores(net, *features, corpus.test, st, cfg.batch_size),
        labels_matrix(corpus.test));
  }
  res.checkpoint_path = cfg.out_dir + "/teacher.ckpt";
  save_teacher(res.checkpoint_path, net, st);
  write_kv_file(cfg.out_dir + "/teacher_config.txt",
                {{"data_dir", cfg.data_dir},
                 {"out_dir", cfg.out_dir},
                 {"max_epochs", std::to_string(cfg.max_epochs)},
                 {"patience", std::to_string(cfg.patience)},
                 {"batch_size", std::to_string(cfg.batch_size)},
                 {"lr", fmt17(cfg.lr)},
                 {"seed", std::to_string(cfg.seed)}});
  return res;
}

TeacherTrainResult train_teacher(const TeacherTrainConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.data_dir);
  return train_teacher(cfg, corpus, open_feature_store(corpus));
}

// ---------------------------------------------------------------------------
// Student training

TrainResult train_student(const TrainConfig& cfg, const Corpus& corpus,
                          std::shared_ptr<FeatureStore> features,
                          std::shared_ptr<TeacherContext> teacher) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (cfg.max_epochs > 0 && cfg.patience >= cfg.max_epochs)
    throw ConfigError("patience must be smaller than max_epochs");
  if (corpus.train.empty()) throw ConfigError("train split is empty");
  if (corpus.val.empty()) throw ConfigError("val split is empty");

  const LossWeights& w = cfg.weights;
  const bool needs_teacher =
      w.alpha_kd != 0.0 || w.alpha_sp != 0.0 || w.alpha_iusp != 0.0;
  if (needs_teacher && !teacher)
    throw ConfigError("setup distills from a teacher; provide teacher_checkpoint");
  if (!needs_teacher) teacher.reset();  // BCE runs cannot touch the teacher
  if (w.alpha_sp != 0.0) validate_hint_pair(cfg.sp_teacher_hint, cfg.sp_student_hint);
  if (w.alpha_iusp != 0.0)
    validate_hint_pair(cfg.iusp_teacher_hint, cfg.iusp_student_hint);

  fs::create_directories(cfg.out_dir);
  const std::string base = cfg.out_dir + "/" + cfg.run_name;

  StudentNet net(cfg.lstm_hidden);
  {
    Rng init_rng(derive_seed(cfg.seed, "student-init"));
    net.init(init_rng);
  }
  const Standardization st = features->student_standardization();
  auto params = net.params();
  Adam opt(params, cfg.lr);
  Rng order_rng(derive_seed(cfg.seed, "epoch-order"));
  EarlyStopper stopper(cfg.patience);
  std::vector<Eigen::MatrixXd> best = snapshot_params(params);

  TrainResult res;
  std::ofstream loss_log, epoch_log;
  if (cfg.write_loss_log) {
    res.loss_log_path = base + "_loss.tsv";
    loss_log.open(res.loss_log_path, std::ios::binary);
    if (!loss_log) throw IoError("cannot write " + res.loss_log_path);
    loss_log << "step\tbce\tkd\tsp\tiusp\ttotal\n";
    res.epoch_log_path = base + "_epochs.csv";
    epoch_log.open(res.epoch_log_path, std::ios::binary);
    if (!epoch_log) throw IoError("cannot write " + res.epoch_log_path);
    epoch_log << "epoch,bce,kd,sp,iusp,total,val_auprc\n";
  }

  const Eigen::MatrixXd val_labels = labels_matrix(corpus.val);
  const int n = static_cast<int>(corpus.train.size());
  std::vector<int> order = identity_order(corpus.train.size());
  long step = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double sum_bce = 0, sum_kd = 0, sum_sp = 0, sum_iusp = 0, sum_total = 0;
    int epoch_steps = 0;
    for (int lo = 0; lo < n; lo += cfg.batch_size) {
      const int hi = std::min(n, lo + cfg.batch_size);
      const int b = hi - lo;
      const FeatureMap in = batch_input(*features, corpus.train, order, lo, hi,
                                        /*teacher_view=*/false, st);
      const Eigen::MatrixXd targets = batch_targets(corpus.train, order, lo, hi);
      StudentNet::Output out = net.forward(in);

      const double bce = bce_with_logits(out.logits, targets);
      Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(b, kNumClasses);
      if (w.alpha_bce != 0.0)
        dlogits += w.alpha_bce * bce_with_logits_grad(out.logits, targets);

      double kd = 0.0, sp = 0.0, iusp = 0.0;
      FeatureMap dcnn, dlstm;
      if (w.alpha_kd != 0.0) {
        Eigen::MatrixXd tl(b, kNumClasses);
        for (int bi = 0; bi < b; ++bi)
          tl.row(bi) = teacher->logits(corpus.train[order[lo + bi]].clip_id);
        kd = kd_logit_loss(out.logits, tl, w.kd_temperature);
        dlogits +=
            w.alpha_kd * kd_logit_loss_grad(out.logits, tl, w.kd_temperature);
      }
      if (w.alpha_sp != 0.0) {
        const FeatureMap tmap = stack_teacher_hints(*teacher, corpus.train,
                                                    order, lo, hi,
                                                    cfg.sp_teacher_hint);
        const FeatureMap& smap =
            cfg.sp_student_hint == "cnn" ? out.cnn_hint : out.lstm_hint;
        std::vector<FeatureMap> dmaps;
        sp = sp_loss_grad({tmap}, {smap}, {{0, 0}}, &dmaps);
        add_scaled(dmaps[0], w.alpha_sp,
                   cfg.sp_student_hint == "cnn" ? &dcnn : &dlstm);
      }
      if (w.alpha_iusp != 0.0) {
        const FeatureMap& smap =
            cfg.iusp_student_hint == "cnn" ? out.cnn_hint : out.lstm_hint;
        std::vector<Eigen::MatrixXd> tgrams;
        tgrams.reserve(b);
        for (int bi = 0; bi < b; ++bi)
          tgrams.push_back(teacher->iusp_gram(corpus.train[order[lo + bi]].clip_id,
                                              cfg.iusp_teacher_hint, smap.h,
                                              smap.w, w.squash));
        FeatureMap dmap;
        iusp = iusp_loss_grad_cached(tgrams, smap, w.squash, &dmap);
        add_scaled(dmap, w.alpha_iusp,
                   cfg.iusp_student_hint == "cnn" ? &dcnn : &dlstm);
      }

      const LossValue lv = total_loss(bce, kd, sp, iusp, w);
      ++step;
      if (!std::isfinite(lv.total))
        throw DivergenceError("training diverged: non-finite total loss at step " +
                                  std::to_string(step),
                              step);
      if (loss_log)
        loss_log << step << '\t' << fmt17(bce) << '\t' << fmt17(kd) << '\t'
                 << fmt17(sp) << '\t' << fmt17(iusp) << '\t' << fmt17(lv.total)
                 << '\n';
      sum_bce += bce;
      sum_kd += kd;
      sum_sp += sp;
      sum_iusp += iusp;
      sum_total += lv.total;
      ++epoch_steps;

      opt.zero_grad();
      net.backward(dlogits, dcnn, dlstm);
      opt.step();
    }
    ++res.epochs_run;
    const double val = micro_auprc(
        student_scores(net, *features, corpus.val, st, cfg.batch_size),
        val_labels);
    if (stopper.update(val)) best = snapshot_params(params);
    if (epoch_log) {
      const double inv = 1.0 / std::max(epoch_steps, 1);
      epoch_log << epoch << ',' << fmt17(sum_bce * inv) << ','
                << fmt17(sum_kd * inv) << ',' << fmt17(sum_sp * inv) << ','
                << fmt17(sum_iusp * inv) << ',' << fmt17(sum_total * inv) << ','
                << fmt17(val) << '\n';
    }
    if (stopper.should_stop()) break;
  }
  res.steps = step;

  restore_params(params, best);
  if (stopper.best_epoch() >= 0) {
    res.val_auprc = stopper.best();
    res.best_epoch = stopper.best_epoch();
  } else {
    res.val_auprc = micro_auprc(
        student_scores(net, *features, corpus.val, st, cfg.batch_size),
        val_labels);
    res.best_epoch = -1;
  }
  if (!corpus.test.empty()) {
    const Eigen::MatrixXd ts =
        student_scores(net, *features, corpus.test, st, cfg.batch_size);
    const Eigen::MatrixXd tlabels = labels_matrix(corpus.test);
    res.test_auprc = micro_auprc(ts, tlabels);
    res.test_classwise = classwise_auprc(ts, tlabels);
  }
  if (cfg.write_checkpoint) {
    res.checkpoint_path = base + ".ckpt";
    save_student(res.checkpoint_path, net, st);
  }
  write_train_config(base + "_config.txt", cfg);
  return res;
}

TrainResult train_student(const TrainConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.data_dir);
  auto features = open_feature_store(corpus);
  std::shared_ptr<TeacherContext> teacher;
  const LossWeights& w = cfg.weights;
  if (w.alpha_kd != 0.0 || w.alpha_sp != 0.0 || w.alpha_iusp != 0.0) {
    if (cfg.teacher_checkpoint.empty())
      throw ConfigError("setup distills from a teacher; provide teacher_checkpoint");
    teacher = open_teacher_context(cfg.teacher_checkpoint, corpus, features);
  }
  return train_student(cfg, corpus, features, teacher);
}

// ---------------------------------------------------------------------------
// Setup suite

double SuiteResult::mean_test_auprc(Setup s) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& row : rows)
    if (row.setup == s && !row.failed) {
      sum += row.result.test_auprc;
      ++n;
    }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

double SuiteResult::mean_val_auprc(Setup s) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& row : rows)
    if (row.setup == s && !row.failed) {
      sum += row.result.val_auprc;
      ++n;
    }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

namespace {

const std::array<Setup, 5> kAllSetups = {Setup::kBce, Setup::kBceKd,
                                         Setup::kBceKdSp, Setup::kBceKdIusp,
                                         Setup::kAll};

std::string ensure_teacher(const std::string& checkpoint,
                           const std::string& data_dir,
                           const std::string& out_dir, const Corpus& corpus,
                           std::shared_ptr<FeatureStore> features) {
  if (!checkpoint.empty()) {
    if (!fs::exists(checkpoint))
      throw IoError("teacher checkpoint not found: " + checkpoint);
    return checkpoint;
  }
  TeacherTrainConfig tcfg;
  tcfg.data_dir = data_dir;
  tcfg.out_dir = out_dir + "/teacher";
  return train_teacher(tcfg, corpus, std::move(features)).checkpoint_path;
}

}  // namespace

SuiteResult run_setup_suite(const SuiteConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("suite needs at least one seed");
  if (cfg.lstm_sizes.empty())
    throw ConfigError("suite needs at least one LSTM size");
  fs::create_directories(cfg.out_dir);

  const Corpus corpus = load_corpus(cfg.data_dir);
  auto features = open_feature_store(corpus);
  const std::string teacher_ckpt = ensure_teacher(
      cfg.teacher_checkpoint, cfg.data_dir, cfg.out_dir, corpus, features);
  auto teacher = open_teacher_context(teacher_ckpt, corpus, features);

  struct RunSpec {
    Setup setup;
    int lstm_hidden;
    std::uint64_t seed;
  };
  std::vector<RunSpec> specs;
  for (Setup s : kAllSetups)
    for (int size : cfg.lstm_sizes)
      for (std::uint64_t seed : cfg.seeds) specs.push_back({s, size, seed});

  SuiteResult out;
  out.rows.resize(specs.size());
  run_parallel(cfg.jobs, static_cast<int>(specs.size()), [&](int i) {
    const RunSpec& spec = specs[static_cast<std::size_t>(i)];
    SuiteRow& row = out.rows[static_cast<std::size_t>(i)];
    row.setup = spec.setup;
    row.seed = spec.seed;
    row.lstm_hidden = spec.lstm_hidden;
    TrainConfig tc = cfg.base;
    tc.data_dir = cfg.data_dir;
    tc.out_dir = cfg.out_dir + "/runs";
    tc.run_name = std::string(setup_name(spec.setup)) + "_h" +
                  std::to_string(spec.lstm_hidden) + "_seed" +
                  std::to_string(spec.seed);
    tc.lstm_hidden = spec.lstm_hidden;
    tc.seed = spec.seed;
    tc.weights = setup_weights(spec.setup, cfg.base.weights);
    tc.teacher_checkpoint = teacher_ckpt;
    const bool needs = tc.weights.alpha_kd != 0.0 || tc.weights.alpha_sp != 0.0 ||
                       tc.weights.alpha_iusp != 0.0;
    try {
      row.result =
          train_student(tc, corpus, features, needs ? teacher : nullptr);
    } catch (const std::exception& e) {  // record, keep the suite going
      row.failed = true;
      row.error = e.what();
    }
  });

  out.metrics_csv = cfg.out_dir + "/metrics.csv";
  {
    std::ofstream csv(out.metrics_csv, std::ios::binary);
    if (!csv) throw IoError("cannot write " + out.metrics_csv);
    csv << "setup,seed,lstm_hidden,val_auprc,test_auprc,best_epoch,epochs,steps";
    for (const char* cls : kClassNames) csv << ",auprc_" << cls;
    csv << ",status\n";
    for (const auto& row : out.rows) {
      csv << setup_name(row.setup) << ',' << row.seed << ',' << row.lstm_hidden;
      if (row.failed) {
        csv << ",nan,nan,-1,0,0";
        for (int k = 0; k < kNumClasses; ++k) csv << ",nan";
        csv << ",failed: " << csv_sanitize(row.error) << '\n';
        continue;
      }
      const TrainResult& r = row.result;
      csv << ',' << fmt12(r.val_auprc) << ',' << fmt12(r.test_auprc) << ','
          << r.best_epoch << ',' << r.epochs_run << ',' << r.steps;
      for (int k = 0; k < kNumClasses; ++k)
        csv << ','
            << fmt12(k < static_cast<int>(r.test_classwise.size())
                         ? r.test_classwise[static_cast<std::size_t>(k)]
                         : std::numeric_limits<double>::quiet_NaN());
      csv << ",ok\n";
    }
  }

  out.summary_csv = cfg.out_dir + "/summary.csv";
  {
    std::ofstream csv(out.summary_csv, std::ios::binary);
    if (!csv) throw IoError("cannot write " + out.summary_csv);
    csv << "setup,lstm_hidden,runs,mean_val_auprc,mean_test_auprc,"
           "se_test_auprc,improvement_abs,improvement_rel_pct\n";
    for (int size : cfg.lstm_sizes) {
      // Baseline mean for this size: the BCE cell.
      double base_mean = std::numeric_limits<double>::quiet_NaN();
      {
        double sum = 0.0;
        int n = 0;
        for (const auto& row : out.rows)
          if (row.setup == Setup::kBce && row.lstm_hidden == size && !row.failed) {
            sum += row.result.test_auprc;
            ++n;
          }
        if (n) base_mean = sum / n;
      }
      for (Setup s : kAllSetups) {
        double sum_val = 0.0, sum_test = 0.0;
        std::vector<double> tests;
        for (const auto& row : out.rows)
          if (row.setup == s && row.lstm_hidden == size && !row.failed) {
            sum_val += row.result.val_auprc;
            sum_test += row.result.test_auprc;
            tests.push_back(row.result.test_auprc);
          }
        const int n = static_cast<int>(tests.size());
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double mean_val = n ? sum_val / n : nan;
        const double mean_test = n ? sum_test / n : nan;
        double se = nan;
        if (n >= 2) {
          double ss = 0.0;
          for (double t : tests) ss += (t - mean_test) * (t - mean_test);
          se = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
        }
        const double imp = mean_test - base_mean;
        const double rel = 100.0 * imp / base_mean;
        csv << setup_name(s) << ',' << size << ',' << n << ','
            << fmt12(mean_val) << ',' << fmt12(mean_test) << ',' << fmt12(se)
            << ',' << fmt12(imp) << ',' << fmt12(rel) << '\n';
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hint-layer grid tuning

TuneResult tune_hint_layers(const TuneConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (cfg.lstm_sizes.empty())
    throw ConfigError("tuning needs at least one LSTM size");
  const LossWeights weights = setup_weights(cfg.setup, cfg.base.weights);
  const bool uses_sp = weights.alpha_sp != 0.0;
  const bool uses_iusp = weights.alpha_iusp != 0.0;
  if (!uses_sp && !uses_iusp)
    throw ConfigError(std::string("setup '") + setup_name(cfg.setup) +
                      "' has no hint loss to place");
  fs::create_directories(cfg.out_dir);

  const Corpus corpus = load_corpus(cfg.data_dir);
  auto features = open_feature_store(corpus);
  const std::string teacher_ckpt = ensure_teacher(
      cfg.teacher_checkpoint, cfg.data_dir, cfg.out_dir, corpus, features);
  auto teacher = open_teacher_context(teacher_ckpt, corpus, features);

  const auto& teacher_layers = TeacherNet::hint_names();
  const auto& student_layers = StudentNet::hint_names();

  TuneResult out;
  for (const std::string& tname : teacher_layers) {
    for (const std::string& sname : student_layers) {
      struct Cell {
        int size;
        int trial;
      };
      std::vector<Cell> cells;
      for (int size : cfg.lstm_sizes)
        for (int trial = 0; trial < cfg.trials; ++trial)
          cells.push_back({size, trial});
      std::vector<TrainResult> results(cells.size());
      run_parallel(cfg.jobs, static_cast<int>(cells.size()), [&](int i) {
        const Cell& cell = cells[static_cast<std::size_t>(i)];
        TrainConfig tc = cfg.base;
        tc.data_dir = cfg.data_dir;
        tc.out_dir = cfg.out_dir + "/runs";
        tc.run_name = "tune_" + tname + "_" + sname + "_h" +
                      std::to_string(cell.size) + "_t" +
                      std::to_string(cell.trial);
        tc.lstm_hidden = cell.size;
        // Trial t shares its seed across the 8 candidate pairs so the grid is
        // compared on identical initializations and batch orders.
        tc.seed = derive_seed(cfg.seed, "trial-" + std::to_string(cell.trial) +
                                            "-h" + std::to_string(cell.size));
        tc.weights = weights;
        tc.teacher_checkpoint = teacher_ckpt;
        if (uses_sp) {
          tc.sp_teacher_hint = tname;
          tc.sp_student_hint = sname;
        }
        if (uses_iusp) {
          tc.iusp_teacher_hint = tname;
          tc.iusp_student_hint = sname;
        }
        tc.write_loss_log = false;
        tc.write_checkpoint = false;
        results[static_cast<std::size_t>(i)] =
            train_student(tc, corpus, features, teacher);
      });
      TuneRow row;
      row.teacher_hint = tname;
      row.student_hint = sname;
      for (const TrainResult& r : results) {
        row.mean_val_auprc += r.val_auprc;
        row.mean_test_auprc += r.test_auprc;
      }
      row.mean_val_auprc /= static_cast<double>(results.size());
      row.mean_test_auprc /= static_cast<double>(results.size());
      out.rows.push_back(row);
      teacher->drop_iusp_cache();  // next cell pairs a different shape
    }
  }

  // Strict > keeps the first candidate in enumeration order on exact ties.
  out.best = out.rows.front();
  for (const TuneRow& row : out.rows)
    if (row.mean_val_auprc > out.best.mean_val_auprc) out.best = row;

  out.csv_path = cfg.out_dir + "/hints.csv";
  std::ofstream csv(out.csv_path, std::ios::binary);
  if (!csv) throw IoError("cannot write " + out.csv_path);
  csv << "teacher_hint,student_hint,mean_val_auprc,mean_test_auprc\n";
  for (const TuneRow& row : out.rows)
    csv << row.teacher_hint << ',' << row.student_hint << ','
        << fmt12(row.mean_val_auprc) << ',' << fmt12(row.mean_test_auprc)
        << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint / prediction evaluation

EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& data_dir,
                               const std::string& split) {
  const Corpus corpus = load_corpus(data_dir);
  const std::vector<ManifestEntry>* rows = nullptr;
  if (split == "train") rows = &corpus.train;
  else if (split == "val") rows = &corpus.val;
  else if (split == "test") rows = &corpus.test;
  else throw ConfigError("unknown split '" + split + "' (want train|val|test)");
  if (rows->empty()) throw ConfigError("split '" + split + "' is empty");

  std::string header;
  read_tensor_container_with_header(checkpoint_path, &header);
  const std::string arch = header_value(header, "arch");

  auto features = open_feature_store(corpus);
  EvalResult res;
  res.arch = arch;
  res.n_clips = static_cast<int>(rows->size());
  Eigen::MatrixXd scores;
  if (arch == "student") {
    Standardization st;
    StudentNet net = load_student(checkpoint_path, &st);
    scores = student_scores(net, *features, *rows, st, 16);
  } else if (arch == "teacher") {
    Standardization st;
    TeacherNet net = load_teacher(checkpoint_path, &st);
    scores = teacher_scores(net, *features, *rows, st, 16);
  } else {
    throw ParseError("checkpoint " + checkpoint_path + ": unknown arch '" +
                     arch + "'");
  }
  const Eigen::MatrixXd labels = labels_matrix(*rows);
  res.micro = micro_auprc(scores, labels);
  res.classwise = classwise_auprc(scores, labels);
  return res;
}

EvalResult evaluate_predictions(const std::string& pred_csv,
                                const std::string& labels_csv) {
  const std::vector<ManifestEntry> labels = read_manifest(labels_csv);

  std::ifstream in(pred_csv, std::ios::binary);
  if (!in) throw IoError("cannot open predictions file " + pred_csv);
  std::string expected = "clip_id";
  for (const char* cls : kClassNames) expected += std::string(",") + cls;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(pred_csv + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected)
    throw ParseError(pred_csv + ":1: bad header, expected '" + expected + "'");

  std::map<std::string, std::array<double, 8>> preds;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (fields.size() != 9)
      throw ParseError(pred_csv + ":" + std::to_string(lineno) +
                       ": expected 9 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty())
      throw ParseError(pred_csv + ":" + std::to_string(lineno) + ": empty clip_id");
    if (preds.count(fields[0]))
      throw ParseError(pred_csv + ":" + std::to_string(lineno) +
                       ": duplicate clip_id '" + fields[0] + "'");
    std::array<double, 8> row{};
    for (int k = 0; k < kNumClasses; ++k) {
      const std::string& v = fields[static_cast<std::size_t>(k) + 1];
      std::size_t pos = 0;
      double score = 0.0;
      try {
        score = std::stod(v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != v.size() || v.empty() || !std::isfinite(score) || score < 0.0 ||
          score > 1.0)
        throw ParseError(pred_csv + ":" + std::to_string(lineno) +
                         ": score must be in [0,1], got '" + v + "'");
      row[static_cast<std::size_t>(k)] = score;
    }
    preds.emplace(fields[0], row);
  }

  if (preds.size() != labels.size()) {
    for (const auto& [id, unused] : preds) {
      (void)unused;
      const bool known = std::any_of(labels.begin(), labels.end(),
                                     [&](const ManifestEntry& e) {
                                       return e.clip_id == id;
                                     });
      if (!known)
        throw ParseError(pred_csv + ": prediction for unknown clip '" + id + "'");
    }
  }
  Eigen::MatrixXd scores(static_cast<int>(labels.size()), kNumClasses);
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    const auto it = preds.find(labels[static_cast<std::size_t>(i)].clip_id);
    if (it == preds.end())
      throw ParseError(pred_csv + ": no prediction for clip '" +
                       labels[static_cast<std::size_t>(i)].clip_id + "'");
    for (int k = 0; k < kNumClasses; ++k)
      scores(i, k) = it->second[static_cast<std::size_t>(k)];
  }

  EvalResult res;
  res.arch = "predictions";
  res.n_clips = static_cast<int>(labels.size());
  const Eigen::MatrixXd lm = labels_matrix(labels);
  res.micro = micro_auprc(scores, lm);
  res.classwise = classwise_auprc(scores, lm);
  return res;
}

}  // namespace iusp
