#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "iusp/kernels.hpp"
#include "iusp/rng.hpp"

namespace iusp {

// One learnable tensor plus its gradient accumulator. Layers expose their
// parameters through this so the optimizer can walk them generically.
struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Param() = default;
  Param(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}
  void zero_grad() { grad.setZero(); }
};

// 2-D convolution with SAME padding, implemented as im2col + GEMM.
// Weights are stored [c_out x (c_in*kh*kw)], bias [c_out x 1].
class Conv2d {
 public:
  Conv2d(int c_in, int c_out, int kh, int kw, int stride_h, int stride_w,
         std::string name);
  void init(Rng& rng);  // He-uniform weights, zero bias
  FeatureMap forward(const FeatureMap& in);
  // Consumes d(out), accumulates into weight/bias grads, returns d(in).
  FeatureMap backward(const FeatureMap& dout);
  std::vector<Param*> params() { return {&w_, &b_}; }
  int out_h(int h) const { return (h + stride_h_ - 1) / stride_h_; }
  int out_w(int w) const { return (w + stride_w_ - 1) / stride_w_; }

 private:
  int c_in_, c_out_, kh_, kw_, stride_h_, stride_w_;
  Param w_, b_;
  FeatureMap in_{0, 0, 0, 0};           // cached for backward
  Eigen::MatrixXd cols_;                // im2col buffer of the last forward
  int pad_top_ = 0, pad_left_ = 0, oh_ = 0, ow_ = 0;
};

class Relu {
 public:
  FeatureMap forward(const FeatureMap& in);
  FeatureMap backward(const FeatureMap& dout);

 private:
  std::vector<unsigned char> mask_;
  int b_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

// 2x2 max pooling, stride 2. Odd trailing rows/columns are dropped
// (floor semantics), matching the published feature-map sizes.
class MaxPool2x2 {
 public:
  FeatureMap forward(const FeatureMap& in);
  FeatureMap backward(const FeatureMap& dout);

 private:
  std::vector<int> argmax_;  // flat input index per output element
  int b_ = 0, c_ = 0, h_ = 0, w_ = 0, oh_ = 0, ow_ = 0;
};

// Global average pooling over (h, w): [b,c,h,w] -> b x c matrix.
class GlobalAvgPool {
 public:
  Eigen::MatrixXd forward(const FeatureMap& in);
  FeatureMap backward(const Eigen::MatrixXd& dout);

 private:
  int b_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

// Fully connected layer on row-major activations: out = in * W^T + b.
// in is b x d_in, W is d_out x d_in, bias d_out x 1.
class Linear {
 public:
  Linear(int d_in, int d_out, std::string name);
  void init(Rng& rng);  // Glorot-uniform
  Eigen::MatrixXd forward(const Eigen::MatrixXd& in);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dout);
  std::vector<Param*> params() { return {&w_, &b_}; }

 private:
  int d_in_, d_out_;
  Param w_, b_;
  Eigen::MatrixXd in_;
};

// Unidirectional LSTM over a sequence laid out as d_in x T. Gate order in
// the stacked weight matrices is [i, f, g, o]. A single bias vector of
// length 4H is used; its forget block is initialized to 1. The cache is
// external so one weight set can serve every batch item before backward.
struct LstmCache {
  Eigen::MatrixXd seq;     // d_in x T
  Eigen::MatrixXd gates;   // 4H x T, post-activation
  Eigen::MatrixXd c, h;    // H x T
};

class Lstm {
 public:
  Lstm(int d_in, int hidden, std::string name);
  void init(Rng& rng);
  // Runs the full sequence, returns hidden states as hidden x T.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& seq, LstmCache* cache) const;
  // Full BPTT. dout is hidden x T (zeros where no loss attaches);
  // accumulates weight grads, returns d(seq).
  Eigen::MatrixXd backward(const LstmCache& cache, const Eigen::MatrixXd& dout);
  std::vector<Param*> params() { return {&wx_, &wh_, &b_}; }
  int hidden() const { return hidden_; }

 private:
  int d_in_, hidden_;
  Param wx_;  // 4H x d_in
  Param wh_;  // 4H x H
  Param b_;   // 4H x 1
};

// Adam with bias correction. One optimizer instance drives a fixed list of
// parameters; moment buffers are keyed by position.
class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double lr = 1e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<Param*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace iusp
