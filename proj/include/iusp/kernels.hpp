#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace iusp {

// Rank-4 activation tensor, axes (batch, channels, height, width). Width
// indexes time frames and height indexes frequency; layer_id names the layer
// that produced it.
struct FeatureMap {
  int b = 0, c = 0, h = 0, w = 0;
  std::string layer_id;
  std::vector<double> v;  // row-major [b][c][h][w]

  FeatureMap() = default;
  FeatureMap(int b_, int c_, int h_, int w_, std::string layer = {})
      : b(b_), c(c_), h(h_), w(w_), layer_id(std::move(layer)),
        v(static_cast<std::size_t>(b_) * c_ * h_ * w_, 0.0) {}

  std::size_t size() const { return v.size(); }
  double& at(int bi, int ci, int hi, int wi) {
    return v[((static_cast<std::size_t>(bi) * c + ci) * h + hi) * w + wi];
  }
  double at(int bi, int ci, int hi, int wi) const {
    return v[((static_cast<std::size_t>(bi) * c + ci) * h + hi) * w + wi];
  }
  bool same_shape(const FeatureMap& o) const {
    return b == o.b && c == o.c && h == o.h && w == o.w;
  }
};

// Square similarity matrix. Batch kind is b x b across clips; frame kind is
// w x w across the time frames of one clip.
struct SimilarityMatrix {
  enum class Kind { kBatch, kFrame };
  Eigen::MatrixXd values;
  Kind kind = Kind::kBatch;
  bool squashed = false;
};

// Scaled-and-shifted sigmoid parameters: squashing maps an entry g to
// 1 / (1 + exp(-gamma * (g - delta))).
struct SquashParams {
  double gamma = 10.0;
  double delta = 0.5;
};

// Norm guard: rows or channel slices with L2 norm below this are treated as
// exactly zero instead of being divided by a vanishing norm.
inline constexpr double kNormEpsilon = 1e-12;

// Batch-level similarity: reshape to Q (b x chw), form Q * Q^T, then divide
// each row by its L2 norm. Zero rows stay zero.
SimilarityMatrix sp_gram(const FeatureMap& a);

// Divides every (batch, channel) h x w slice by its Frobenius norm.
// Idempotent; slices with norm below kNormEpsilon come back as zeros.
FeatureMap channel_normalize(const FeatureMap& a);

// Frame-level similarity for one batch item (0-based index): frames become
// columns of F (ch x w) and the result is F^T * F, a symmetric PSD w x w
// matrix of pairwise frame inner products.
SimilarityMatrix frame_gram(const FeatureMap& a_norm, int b_index);

// Elementwise sigmoid squash. Rejects an already-squashed input.
SimilarityMatrix sigmoid_squash(const SimilarityMatrix& g, const SquashParams& p);

// Corner-aligned bilinear interpolation of every (batch, channel) slice to
// target_h x target_w. A target extent of 1 samples source position 0.
FeatureMap bilinear_resize(const FeatureMap& a, int target_h, int target_w);

}  // namespace iusp
