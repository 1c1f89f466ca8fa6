#include "iusp/layers.hpp"

#include <cmath>

#include "iusp/error.hpp"

namespace iusp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double limit) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-limit, limit);
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int c_in, int c_out, int kh, int kw, int stride_h, int stride_w,
               std::string name)
    : c_in_(c_in),
      c_out_(c_out),
      kh_(kh),
      kw_(kw),
      stride_h_(stride_h),
      stride_w_(stride_w),
      w_(name + ".w", c_out, c_in * kh * kw),
      b_(name + ".b", c_out, 1) {}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(c_in_) * kh_ * kw_;
  fill_uniform(w_.value, rng, std::sqrt(6.0 / fan_in));
  b_.value.setZero();
}

FeatureMap Conv2d::forward(const FeatureMap& in) {
  if (in.c != c_in_) throw InvalidInput("conv " + w_.name + ": channel mismatch");
  in_ = in;
  oh_ = out_h(in.h);
  ow_ = out_w(in.w);
  const int pad_h = std::max(0, (oh_ - 1) * stride_h_ + kh_ - in.h);
  const int pad_w = std::max(0, (ow_ - 1) * stride_w_ + kw_ - in.w);
  pad_top_ = pad_h / 2;
  pad_left_ = pad_w / 2;

  const Eigen::Index ckk = static_cast<Eigen::Index>(c_in_) * kh_ * kw_;
  const Eigen::Index cols_per_item = static_cast<Eigen::Index>(oh_) * ow_;
  cols_ = Eigen::MatrixXd::Zero(ckk, static_cast<Eigen::Index>(in.b) * cols_per_item);

  FeatureMap out(in.b, c_out_, oh_, ow_, w_.name.substr(0, w_.name.size() - 2));
  for (int bi = 0; bi < in.b; ++bi) {
    auto block = cols_.middleCols(bi * cols_per_item, cols_per_item);
    // im2col: column (y*ow + x) holds the receptive field of output (y, x).
    for (int ci = 0; ci < c_in_; ++ci) {
      for (int ky = 0; ky < kh_; ++ky) {
        for (int kx = 0; kx < kw_; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(ci) * kh_ + ky) * kw_ + kx;
          for (int y = 0; y < oh_; ++y) {
            const int sy = y * stride_h_ - pad_top_ + ky;
            if (sy < 0 || sy >= in.h) continue;
            for (int x = 0; x < ow_; ++x) {
              const int sx = x * stride_w_ - pad_left_ + kx;
              if (sx < 0 || sx >= in.w) continue;
              block(row, static_cast<Eigen::Index>(y) * ow_ + x) = in.at(bi, ci, sy, sx);
            }
          }
        }
      }
    }
    Eigen::Map<RowMat> out_slice(out.v.data() + static_cast<size_t>(bi) * c_out_ * oh_ * ow_,
                                 c_out_, cols_per_item);
    out_slice.noalias() = w_.value * block;
    out_slice.colwise() += b_.value.col(0);
  }
  return out;
}

FeatureMap Conv2d::backward(const FeatureMap& dout) {
  const Eigen::Index ckk = static_cast<Eigen::Index>(c_in_) * kh_ * kw_;
  const Eigen::Index cols_per_item = static_cast<Eigen::Index>(oh_) * ow_;
  FeatureMap din(in_.b, in_.c, in_.h, in_.w);
  for (int bi = 0; bi < in_.b; ++bi) {
    Eigen::Map<const RowMat> dslice(
        dout.v.data() + static_cast<size_t>(bi) * c_out_ * oh_ * ow_, c_out_, cols_per_item);
    auto block = cols_.middleCols(bi * cols_per_item, cols_per_item);
    w_.grad.noalias() += dslice * block.transpose();
    b_.grad.col(0).noalias() += dslice.rowwise().sum();

    Eigen::MatrixXd dcols(ckk, cols_per_item);
    dcols.noalias() = w_.value.transpose() * dslice;
    // col2im scatter-add.
    for (int ci = 0; ci < c_in_; ++ci) {
      for (int ky = 0; ky < kh_; ++ky) {
        for (int kx = 0; kx < kw_; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(ci) * kh_ + ky) * kw_ + kx;
          for (int y = 0; y < oh_; ++y) {
            const int sy = y * stride_h_ - pad_top_ + ky;
            if (sy < 0 || sy >= in_.h) continue;
            for (int x = 0; x < ow_; ++x) {
              const int sx = x * stride_w_ - pad_left_ + kx;
              if (sx < 0 || sx >= in_.w) continue;
              din.at(bi, ci, sy, sx) += dcols(row, static_cast<Eigen::Index>(y) * ow_ + x);
            }
          }
        }
      }
    }
  }
  return din;
}

// ------------------------------------------------------------------ Relu

FeatureMap Relu::forward(const FeatureMap& in) {
  b_ = in.b; c_ = in.c; h_ = in.h; w_ = in.w;
  mask_.assign(in.v.size(), 0);
  FeatureMap out = in;
  for (size_t i = 0; i < out.v.size(); ++i) {
    if (out.v[i] > 0.0)
      mask_[i] = 1;
    else
      out.v[i] = 0.0;
  }
  return out;
}

FeatureMap Relu::backward(const FeatureMap& dout) {
  FeatureMap din = dout;
  for (size_t i = 0; i < din.v.size(); ++i)
    if (!mask_[i]) din.v[i] = 0.0;
  return din;
}

// ------------------------------------------------------------ MaxPool2x2

FeatureMap MaxPool2x2::forward(const FeatureMap& in) {
  b_ = in.b; c_ = in.c; h_ = in.h; w_ = in.w;
  oh_ = in.h / 2;
  ow_ = in.w / 2;
  FeatureMap out(in.b, in.c, oh_, ow_, in.layer_id);
  argmax_.assign(out.v.size(), 0);
  size_t o = 0;
  for (int bi = 0; bi < in.b; ++bi) {
    for (int ci = 0; ci < in.c; ++ci) {
      for (int y = 0; y < oh_; ++y) {
        for (int x = 0; x < ow_; ++x, ++o) {
          double best = -1e308;
          int best_idx = 0;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int sy = 2 * y + dy, sx = 2 * x + dx;
              const int idx = ((bi * in.c + ci) * in.h + sy) * in.w + sx;
              const double v = in.v[static_cast<size_t>(idx)];
              if (v > best) { best = v; best_idx = idx; }
            }
          }
          out.v[o] = best;
          argmax_[o] = best_idx;
        }
      }
    }
  }
  return out;
}

FeatureMap MaxPool2x2::backward(const FeatureMap& dout) {
  FeatureMap din(b_, c_, h_, w_);
  for (size_t o = 0; o < dout.v.size(); ++o)
    din.v[static_cast<size_t>(argmax_[o])] += dout.v[o];
  return din;
}

// --------------------------------------------------------- GlobalAvgPool

Eigen::MatrixXd GlobalAvgPool::forward(const FeatureMap& in) {
  b_ = in.b; c_ = in.c; h_ = in.h; w_ = in.w;
  Eigen::MatrixXd out(in.b, in.c);
  const size_t slice = static_cast<size_t>(in.h) * in.w;
  for (int bi = 0; bi < in.b; ++bi) {
    for (int ci = 0; ci < in.c; ++ci) {
      const double* p = in.v.data() + (static_cast<size_t>(bi) * in.c + ci) * slice;
      double acc = 0.0;
      for (size_t k = 0; k < slice; ++k) acc += p[k];
      out(bi, ci) = acc / static_cast<double>(slice);
    }
  }
  return out;
}

FeatureMap GlobalAvgPool::backward(const Eigen::MatrixXd& dout) {
  FeatureMap din(b_, c_, h_, w_);
  const size_t slice = static_cast<size_t>(h_) * w_;
  for (int bi = 0; bi < b_; ++bi) {
    for (int ci = 0; ci < c_; ++ci) {
      const double g = dout(bi, ci) / static_cast<double>(slice);
      double* p = din.v.data() + (static_cast<size_t>(bi) * c_ + ci) * slice;
      for (size_t k = 0; k < slice; ++k) p[k] = g;
    }
  }
  return din;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int d_in, int d_out, std::string name)
    : d_in_(d_in), d_out_(d_out), w_(name + ".w", d_out, d_in), b_(name + ".b", d_out, 1) {}

void Linear::init(Rng& rng) {
  fill_uniform(w_.value, rng, std::sqrt(6.0 / (d_in_ + d_out_)));
  b_.value.setZero();
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& in) {
  if (in.cols() != d_in_) throw InvalidInput("linear " + w_.name + ": input width mismatch");
  in_ = in;
  Eigen::MatrixXd out = in * w_.value.transpose();
  out.rowwise() += b_.value.col(0).transpose();
  return out;
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& dout) {
  w_.grad.noalias() += dout.transpose() * in_;
  b_.grad.col(0).noalias() += dout.colwise().sum().transpose();
  return dout * w_.value;
}

// ------------------------------------------------------------------ Lstm

Lstm::Lstm(int d_in, int hidden, std::string name)
    : d_in_(d_in),
      hidden_(hidden),
      wx_(name + ".wx", 4 * hidden, d_in),
      wh_(name + ".wh", 4 * hidden, hidden),
      b_(name + ".b", 4 * hidden, 1) {}

void Lstm::init(Rng& rng) {
  fill_uniform(wx_.value, rng, std::sqrt(6.0 / (d_in_ + hidden_)));
  fill_uniform(wh_.value, rng, std::sqrt(6.0 / (2.0 * hidden_)));
  b_.value.setZero();
  b_.value.block(hidden_, 0, hidden_, 1).setConstant(1.0);  // forget gate bias
}

Eigen::MatrixXd Lstm::forward(const Eigen::MatrixXd& seq, LstmCache* cache) const {
  if (seq.rows() != d_in_) throw InvalidInput("lstm " + wx_.name + ": input dim mismatch");
  const Eigen::Index t_len = seq.cols();
  const int h = hidden_;
  cache->seq = seq;
  cache->gates.resize(4 * h, t_len);
  cache->c.resize(h, t_len);
  cache->h.resize(h, t_len);

  Eigen::MatrixXd z_in = wx_.value * seq;  // 4H x T, input contribution
  z_in.colwise() += b_.value.col(0);
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd z(4 * h);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    z = z_in.col(t);
    z.noalias() += wh_.value * h_prev;
    auto gi = cache->gates.col(t).segment(0, h);
    auto gf = cache->gates.col(t).segment(h, h);
    auto gg = cache->gates.col(t).segment(2 * h, h);
    auto go = cache->gates.col(t).segment(3 * h, h);
    gi = 1.0 / (1.0 + (-z.segment(0, h).array()).exp());
    gf = 1.0 / (1.0 + (-z.segment(h, h).array()).exp());
    gg = z.segment(2 * h, h).array().tanh();
    go = 1.0 / (1.0 + (-z.segment(3 * h, h).array()).exp());
    cache->c.col(t) = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    cache->h.col(t) = go.cwiseProduct(cache->c.col(t).array().tanh().matrix());
    h_prev = cache->h.col(t);
    c_prev = cache->c.col(t);
  }
  return cache->h;
}

Eigen::MatrixXd Lstm::backward(const LstmCache& cache, const Eigen::MatrixXd& dout) {
  const int h = hidden_;
  const Eigen::Index t_len = cache.seq.cols();
  Eigen::MatrixXd dz_all(4 * h, t_len);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);

  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const auto gi = cache.gates.col(t).segment(0, h).array();
    const auto gf = cache.gates.col(t).segment(h, h).array();
    const auto gg = cache.gates.col(t).segment(2 * h, h).array();
    const auto go = cache.gates.col(t).segment(3 * h, h).array();
    const Eigen::ArrayXd tc = cache.c.col(t).array().tanh();

    const Eigen::ArrayXd dh = dout.col(t).array() + dh_next.array();
    const Eigen::ArrayXd dc = dh * go * (1.0 - tc * tc) + dc_next.array();
    const Eigen::ArrayXd c_prev = t > 0 ? cache.c.col(t - 1).array()
                                        : Eigen::ArrayXd::Zero(h);

    dz_all.col(t).segment(0, h) = (dc * gg * gi * (1.0 - gi)).matrix();
    dz_all.col(t).segment(h, h) = (dc * c_prev * gf * (1.0 - gf)).matrix();
    dz_all.col(t).segment(2 * h, h) = (dc * gi * (1.0 - gg * gg)).matrix();
    dz_all.col(t).segment(3 * h, h) = (dh * tc * go * (1.0 - go)).matrix();

    dh_next.noalias() = wh_.value.transpose() * dz_all.col(t);
    dc_next = (dc * gf).matrix();
  }

  wx_.grad.noalias() += dz_all * cache.seq.transpose();
  if (t_len > 1)
    wh_.grad.noalias() +=
        dz_all.rightCols(t_len - 1) * cache.h.leftCols(t_len - 1).transpose();
  b_.grad.col(0).noalias() += dz_all.rowwise().sum();
  return wx_.value.transpose() * dz_all;
}

// ------------------------------------------------------------------ Adam

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Param* p : params_) {
    m_.emplace_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    v_.emplace_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i].array().matrix() +
            (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

}  // namespace iusp
