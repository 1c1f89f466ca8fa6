#include "iusp/losses.hpp"

#include <cmath>

#include "iusp/error.hpp"

namespace iusp {

namespace {

constexpr double kProbClampLo = 1e-7;
constexpr double kProbClampHi = 1.0 - 1e-7;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput(std::string(who) + ": shape mismatch");
}

double softplus(double x) {
  // log(1 + e^x) without overflow.
  return (x > 0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gradient of the row-L2-normalized gram w.r.t. the raw gram, folded with
// the upstream d = dL/dG_normalized. Returns M = dL/dG_raw.
Eigen::MatrixXd row_normalize_backward(const Eigen::MatrixXd& g_raw,
                                       const Eigen::MatrixXd& d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g_raw.rows(), g_raw.cols());
  for (Eigen::Index i = 0; i < g_raw.rows(); ++i) {
    const double r = g_raw.row(i).norm();
    if (r < kNormEpsilon) continue;  // zeroed row: no gradient flows
    const Eigen::RowVectorXd u = g_raw.row(i) / r;
    const double proj = u.dot(d.row(i));
    m.row(i) = (d.row(i) - proj * u) / r;
  }
  return m;
}

// Raw (unnormalized) batch gram QQ^T of a flattened map.
Eigen::MatrixXd raw_batch_gram(const FeatureMap& a) {
  Eigen::Map<const RowMat> q(a.v.data(), a.b,
                             static_cast<Eigen::Index>(a.c) * a.h * a.w);
  Eigen::MatrixXd gl = Eigen::MatrixXd::Zero(a.b, a.b);
  gl.selfadjointView<Eigen::Lower>().rankUpdate(q);
  return gl.selfadjointView<Eigen::Lower>();
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& g) {
  Eigen::MatrixXd out = g;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double r = out.row(i).norm();
    if (r < kNormEpsilon)
      out.row(i).setZero();
    else
      out.row(i) /= r;
  }
  return out;
}

// Backward of channel_normalize: given d = dL/d(normalized map), produce
// dL/d(raw map). Slices under the zero guard pass no gradient.
void channel_normalize_backward(const FeatureMap& raw, const FeatureMap& d,
                                FeatureMap* draw) {
  const size_t slice = static_cast<size_t>(raw.h) * raw.w;
  for (int bi = 0; bi < raw.b; ++bi) {
    for (int ci = 0; ci < raw.c; ++ci) {
      const size_t off = (static_cast<size_t>(bi) * raw.c + ci) * slice;
      const double* a = raw.v.data() + off;
      const double* g = d.v.data() + off;
      double* out = draw->v.data() + off;
      double ss = 0.0;
      for (size_t k = 0; k < slice; ++k) ss += a[k] * a[k];
      const double r = std::sqrt(ss);
      if (r < kNormEpsilon) continue;  // slice was zeroed; grad stays 0
      double proj = 0.0;               // <a_hat, g>
      for (size_t k = 0; k < slice; ++k) proj += a[k] * g[k];
      proj /= r * r;  // = <a/r, g> / r, folded into the loop below
      for (size_t k = 0; k < slice; ++k) out[k] += (g[k] - proj * a[k]) / r;
    }
  }
}

}  // namespace

double bce_loss(const Eigen::MatrixXd& pred_probs, const Eigen::MatrixXd& targets) {
  check_same_shape(pred_probs, targets, "bce_loss");
  const auto p = pred_probs.array().max(kProbClampLo).min(kProbClampHi);
  const auto t = targets.array();
  const double n = static_cast<double>(pred_probs.size());
  return -((t * p.log() + (1.0 - t) * (1.0 - p).log()).sum()) / n;
}

Eigen::MatrixXd bce_loss_grad(const Eigen::MatrixXd& pred_probs,
                              const Eigen::MatrixXd& targets) {
  check_same_shape(pred_probs, targets, "bce_loss_grad");
  const double n = static_cast<double>(pred_probs.size());
  Eigen::MatrixXd g(pred_probs.rows(), pred_probs.cols());
  for (Eigen::Index j = 0; j < pred_probs.cols(); ++j) {
    for (Eigen::Index i = 0; i < pred_probs.rows(); ++i) {
      const double p = pred_probs(i, j);
      if (p < kProbClampLo || p > kProbClampHi) {
        g(i, j) = 0.0;  // inside the clamp's flat region
        continue;
      }
      const double t = targets(i, j);
      g(i, j) = (-t / p + (1.0 - t) / (1.0 - p)) / n;
    }
  }
  return g;
}

double bce_with_logits(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets) {
  check_same_shape(logits, targets, "bce_with_logits");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j)
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double z = logits(i, j), t = targets(i, j);
      // -t*log(sigmoid(z)) - (1-t)*log(1-sigmoid(z))
      acc += t * softplus(-z) + (1.0 - t) * softplus(z);
    }
  return acc / static_cast<double>(logits.size());
}

Eigen::MatrixXd bce_with_logits_grad(const Eigen::MatrixXd& logits,
                                     const Eigen::MatrixXd& targets) {
  check_same_shape(logits, targets, "bce_with_logits_grad");
  const double n = static_cast<double>(logits.size());
  Eigen::MatrixXd g(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j)
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
      g(i, j) = (sigmoid_scalar(logits(i, j)) - targets(i, j)) / n;
  return g;
}

double kd_logit_loss(const Eigen::MatrixXd& student_logits,
                     const Eigen::MatrixXd& teacher_logits, double temperature) {
  check_same_shape(student_logits, teacher_logits, "kd_logit_loss");
  if (temperature <= 0) throw InvalidInput("kd_logit_loss: temperature must be > 0");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < student_logits.cols(); ++j)
    for (Eigen::Index i = 0; i < student_logits.rows(); ++i) {
      const double zs = student_logits(i, j) / temperature;
      const double q = sigmoid_scalar(teacher_logits(i, j) / temperature);
      acc += q * softplus(-zs) + (1.0 - q) * softplus(zs);
    }
  return acc / static_cast<double>(student_logits.size());
}

Eigen::MatrixXd kd_logit_loss_grad(const Eigen::MatrixXd& student_logits,
                                   const Eigen::MatrixXd& teacher_logits,
                                   double temperature) {
  check_same_shape(student_logits, teacher_logits, "kd_logit_loss_grad");
  if (temperature <= 0) throw InvalidInput("kd_logit_loss_grad: temperature must be > 0");
  const double n = static_cast<double>(student_logits.size());
  Eigen::MatrixXd g(student_logits.rows(), student_logits.cols());
  for (Eigen::Index j = 0; j < student_logits.cols(); ++j)
    for (Eigen::Index i = 0; i < student_logits.rows(); ++i) {
      const double p = sigmoid_scalar(student_logits(i, j) / temperature);
      const double q = sigmoid_scalar(teacher_logits(i, j) / temperature);
      g(i, j) = (p - q) / (temperature * n);
    }
  return g;
}

double sp_loss(const std::vector<FeatureMap>& teacher_maps,
               const std::vector<FeatureMap>& student_maps,
               const std::vector<std::pair<int, int>>& pairs) {
  double acc = 0.0;
  for (const auto& [ti, si] : pairs) {
    const FeatureMap& t = teacher_maps.at(static_cast<size_t>(ti));
    const FeatureMap& s = student_maps.at(static_cast<size_t>(si));
    if (t.b != s.b) throw InvalidInput("sp_loss: batch size mismatch");
    const Eigen::MatrixXd gt = sp_gram(t).values;
    const Eigen::MatrixXd gs = sp_gram(s).values;
    acc += (gt - gs).squaredNorm() / (static_cast<double>(t.b) * t.b);
  }
  return acc;
}

double sp_loss_grad(const std::vector<FeatureMap>& teacher_maps,
                    const std::vector<FeatureMap>& student_maps,
                    const std::vector<std::pair<int, int>>& pairs,
                    std::vector<FeatureMap>* dstudent_maps) {
  dstudent_maps->clear();
  for (const auto& s : student_maps)
    dstudent_maps->emplace_back(s.b, s.c, s.h, s.w, s.layer_id);

  double acc = 0.0;
  for (const auto& [ti, si] : pairs) {
    const FeatureMap& t = teacher_maps.at(static_cast<size_t>(ti));
    const FeatureMap& s = student_maps.at(static_cast<size_t>(si));
    if (t.b != s.b) throw InvalidInput("sp_loss_grad: batch size mismatch");
    const double b2 = static_cast<double>(t.b) * t.b;

    const Eigen::MatrixXd gt = sp_gram(t).values;
    const Eigen::MatrixXd gs_raw = raw_batch_gram(s);
    const Eigen::MatrixXd gs = normalize_rows(gs_raw);
    acc += (gt - gs).squaredNorm() / b2;

    const Eigen::MatrixXd d = (2.0 / b2) * (gs - gt);
    const Eigen::MatrixXd m = row_normalize_backward(gs_raw, d);
    Eigen::Map<const RowMat> q(s.v.data(), s.b,
                               static_cast<Eigen::Index>(s.c) * s.h * s.w);
    RowMat dq = (m + m.transpose()) * q;
    FeatureMap& ds = (*dstudent_maps)[static_cast<size_t>(si)];
    Eigen::Map<RowMat>(ds.v.data(), dq.rows(), dq.cols()) += dq;
  }
  return acc;
}

std::vector<Eigen::MatrixXd> iusp_teacher_grams(const FeatureMap& teacher_map,
                                                int student_h, int student_w,
                                                const SquashParams& p) {
  FeatureMap t = (teacher_map.h == student_h && teacher_map.w == student_w)
                     ? teacher_map
                     : bilinear_resize(teacher_map, student_h, student_w);
  FeatureMap tn = channel_normalize(t);
  std::vector<Eigen::MatrixXd> grams;
  grams.reserve(static_cast<size_t>(t.b));
  for (int bi = 0; bi < t.b; ++bi)
    grams.push_back(sigmoid_squash(frame_gram(tn, bi), p).values);
  return grams;
}

double iusp_loss(const FeatureMap& teacher_map, const FeatureMap& student_map,
                 const SquashParams& p) {
  if (teacher_map.b != student_map.b)
    throw InvalidInput("iusp_loss: batch size mismatch");
  const auto tg = iusp_teacher_grams(teacher_map, student_map.h, student_map.w, p);
  const FeatureMap sn = channel_normalize(student_map);
  double acc = 0.0;
  for (int bi = 0; bi < student_map.b; ++bi) {
    const Eigen::MatrixXd gs = sigmoid_squash(frame_gram(sn, bi), p).values;
    acc += (tg[static_cast<size_t>(bi)] - gs).squaredNorm();
  }
  return acc / static_cast<double>(student_map.b);
}

double iusp_loss_grad_cached(const std::vector<Eigen::MatrixXd>& teacher_grams,
                             const FeatureMap& student_map, const SquashParams& p,
                             FeatureMap* dstudent_map) {
  if (teacher_grams.size() != static_cast<size_t>(student_map.b))
    throw InvalidInput("iusp_loss_grad: batch size mismatch");
  *dstudent_map = FeatureMap(student_map.b, student_map.c, student_map.h,
                             student_map.w, student_map.layer_id);
  const FeatureMap sn = channel_normalize(student_map);
  FeatureMap dsn(student_map.b, student_map.c, student_map.h, student_map.w);

  const double b = static_cast<double>(student_map.b);
  const Eigen::Index ch = static_cast<Eigen::Index>(student_map.c) * student_map.h;
  const Eigen::Index w = student_map.w;
  double acc = 0.0;
  for (int bi = 0; bi < student_map.b; ++bi) {
    Eigen::Map<const RowMat> f(sn.v.data() + static_cast<size_t>(bi) * ch * w, ch, w);
    Eigen::MatrixXd gl = Eigen::MatrixXd::Zero(w, w);
    gl.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose());
    const Eigen::MatrixXd g_raw = gl.selfadjointView<Eigen::Lower>();
    const Eigen::MatrixXd gs =
        (1.0 / (1.0 + (-p.gamma * (g_raw.array() - p.delta)).exp())).matrix();
    const Eigen::MatrixXd& gt = teacher_grams[static_cast<size_t>(bi)];
    if (gt.rows() != w || gt.cols() != w)
      throw InvalidInput("iusp_loss_grad: teacher gram size mismatch");
    acc += (gt - gs).squaredNorm();

    // dL/dG_squashed, then through the squash, then through F^T F.
    Eigen::MatrixXd m = ((2.0 / b) * (gs - gt).array() * p.gamma * gs.array() *
                         (1.0 - gs.array()))
                            .matrix();
    RowMat df = f * (m + m.transpose());
    Eigen::Map<RowMat>(dsn.v.data() + static_cast<size_t>(bi) * ch * w, ch, w) = df;
  }
  channel_normalize_backward(student_map, dsn, dstudent_map);
  return acc / b;
}

double iusp_loss_grad(const FeatureMap& teacher_map, const FeatureMap& student_map,
                      const SquashParams& p, FeatureMap* dstudent_map) {
  if (teacher_map.b != student_map.b)
    throw InvalidInput("iusp_loss_grad: batch size mismatch");
  const auto tg = iusp_teacher_grams(teacher_map, student_map.h, student_map.w, p);
  return iusp_loss_grad_cached(tg, student_map, p, dstudent_map);
}

LossValue total_loss(double bce, double kd, double sp, double iusp,
                     const LossWeights& weights) {
  LossValue v;
  v.components["bce"] = bce;
  v.components["kd"] = kd;
  v.components["sp"] = sp;
  v.components["iusp"] = iusp;
  v.total = weights.alpha_bce * bce + weights.alpha_kd * kd + weights.alpha_sp * sp +
            weights.alpha_iusp * iusp;
  return v;
}

}  // namespace iusp
