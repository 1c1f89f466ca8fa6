#include "iusp/kernels.hpp"

#include <cmath>

#include "iusp/error.hpp"

namespace iusp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;

}  // namespace

// Batch-level gram: flatten each item to a row of Q (b x chw), form QQ^T,
// then L2-normalize each row. Rows with norm below kNormEpsilon are zeroed.
SimilarityMatrix sp_gram(const FeatureMap& a) {
  if (a.b < 1) throw InvalidInput("sp_gram: empty batch");
  const Eigen::Index b = a.b;
  const Eigen::Index d = static_cast<Eigen::Index>(a.c) * a.h * a.w;
  ConstMap q(a.v.data(), b, d);
  Eigen::MatrixXd gl = Eigen::MatrixXd::Zero(b, b);
  gl.selfadjointView<Eigen::Lower>().rankUpdate(q);
  Eigen::MatrixXd g = gl.selfadjointView<Eigen::Lower>();
  for (Eigen::Index i = 0; i < b; ++i) {
    const double r = g.row(i).norm();
    if (r < kNormEpsilon)
      g.row(i).setZero();
    else
      g.row(i) /= r;
  }
  SimilarityMatrix out;
  out.values = std::move(g);
  out.kind = SimilarityMatrix::Kind::kBatch;
  return out;
}

// Divide every (item, channel) h x w slice by its Frobenius norm; slices
// with norm below kNormEpsilon come back as zeros.
FeatureMap channel_normalize(const FeatureMap& a) {
  FeatureMap out = a;
  const size_t slice = static_cast<size_t>(a.h) * a.w;
  for (int bi = 0; bi < a.b; ++bi) {
    for (int ci = 0; ci < a.c; ++ci) {
      double* p = out.v.data() + (static_cast<size_t>(bi) * a.c + ci) * slice;
      double ss = 0.0;
      for (size_t k = 0; k < slice; ++k) ss += p[k] * p[k];
      const double r = std::sqrt(ss);
      if (r < kNormEpsilon) {
        for (size_t k = 0; k < slice; ++k) p[k] = 0.0;
      } else {
        for (size_t k = 0; k < slice; ++k) p[k] /= r;
      }
    }
  }
  return out;
}

// Frame gram of one batch item: view the item's c*h x w slice as frames
// F(:, t) and return F^T F (w x w, symmetric PSD). b_index is 0-based.
SimilarityMatrix frame_gram(const FeatureMap& a, int b_index) {
  if (b_index < 0 || b_index >= a.b)
    throw IndexError("frame_gram: batch index " + std::to_string(b_index) +
                     " out of range for b=" + std::to_string(a.b));
  const Eigen::Index ch = static_cast<Eigen::Index>(a.c) * a.h;
  const Eigen::Index w = a.w;
  ConstMap f(a.v.data() + static_cast<size_t>(b_index) * ch * w, ch, w);
  Eigen::MatrixXd gl = Eigen::MatrixXd::Zero(w, w);
  gl.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose());
  SimilarityMatrix out;
  out.values = gl.selfadjointView<Eigen::Lower>();
  out.kind = SimilarityMatrix::Kind::kFrame;
  return out;
}

SimilarityMatrix sigmoid_squash(const SimilarityMatrix& g, const SquashParams& p) {
  if (g.squashed) throw InvalidInput("sigmoid_squash: input already squashed");
  SimilarityMatrix out;
  out.kind = g.kind;
  out.squashed = true;
  out.values = 1.0 / (1.0 + (-p.gamma * (g.values.array() - p.delta)).exp());
  return out;
}

// Corner-aligned bilinear interpolation of every (item, channel) slice.
// A target axis of extent 1 samples source position 0.
FeatureMap bilinear_resize(const FeatureMap& a, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1)
    throw InvalidInput("bilinear_resize: target dims must be >= 1");
  FeatureMap out(a.b, a.c, target_h, target_w, a.layer_id);
  const double sy = target_h > 1 ? static_cast<double>(a.h - 1) / (target_h - 1) : 0.0;
  const double sx = target_w > 1 ? static_cast<double>(a.w - 1) / (target_w - 1) : 0.0;
  for (int bi = 0; bi < a.b; ++bi) {
    for (int ci = 0; ci < a.c; ++ci) {
      for (int y = 0; y < target_h; ++y) {
        const double fy = sy * y;
        const int y0 = static_cast<int>(fy);
        const int y1 = y0 + 1 < a.h ? y0 + 1 : a.h - 1;
        const double wy = fy - y0;
        for (int x = 0; x < target_w; ++x) {
          const double fx = sx * x;
          const int x0 = static_cast<int>(fx);
          const int x1 = x0 + 1 < a.w ? x0 + 1 : a.w - 1;
          const double wx = fx - x0;
          const double top = a.at(bi, ci, y0, x0) * (1.0 - wx) + a.at(bi, ci, y0, x1) * wx;
          const double bot = a.at(bi, ci, y1, x0) * (1.0 - wx) + a.at(bi, ci, y1, x1) * wx;
          out.at(bi, ci, y, x) = top * (1.0 - wy) + bot * wy;
        }
      }
    }
  }
  return out;
}

}  // namespace iusp
