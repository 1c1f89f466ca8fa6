#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "iusp/layers.hpp"

namespace iusp {

inline constexpr int kNumClasses = 8;

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return 1.0 / (1.0 + (-z.array()).exp());
}

// CNN-LSTM tagger. Input is a batch of 20 x 998 log-mel maps; one 5x5
// stride-2 conv (32 filters) feeds a unidirectional LSTM over 499 steps,
// and the last hidden state drives a linear head with 8 outputs.
//
// Hint layers exposed for distillation:
//   "cnn"  -- post-ReLU conv activations, b x 32 x 10 x 499
//   "lstm" -- hidden-state sequence as a map,   b x 1 x H x 499
class StudentNet {
 public:
  struct Output {
    Eigen::MatrixXd logits;  // b x 8
    FeatureMap cnn_hint;
    FeatureMap lstm_hint;
    Output() : cnn_hint(0, 0, 0, 0), lstm_hint(0, 0, 0, 0) {}
  };

  explicit StudentNet(int lstm_hidden);
  void init(Rng& rng);

  Output forward(const FeatureMap& input);  // input b x 1 x 20 x 998
  // dcnn / dlstm may be empty maps (b == 0) when no hint loss is attached.
  void backward(const Eigen::MatrixXd& dlogits, const FeatureMap& dcnn_hint,
                const FeatureMap& dlstm_hint);

  std::vector<Param*> params();
  int lstm_hidden() const { return hidden_; }
  static const std::vector<std::string>& hint_names();

  static long count_params(int lstm_hidden);
  // Multiply-accumulates counted twice (mul + add), forward pass, one clip.
  static long count_flops(int lstm_hidden);

 private:
  int hidden_;
  Conv2d conv_;
  Relu relu_;
  Lstm lstm_;
  Linear fc_;
  int last_b_ = 0;
  std::vector<LstmCache> caches_;  // one per batch item
  FeatureMap conv_out_{0, 0, 0, 0};
};

// Plain CNN tagger used as the frozen teacher: four conv/ReLU/maxpool
// blocks (the first conv downsamples by 2), global average pooling, then a
// wide two-layer head. Hint layers are the four pooling outputs:
//   "mp1" b x 32 x 16 x 249     "mp2" b x 64 x 8 x 124
//   "mp3" b x 128 x 4 x 62      "mp4" b x 128 x 2 x 31
class TeacherNet {
 public:
  struct Output {
    Eigen::MatrixXd logits;  // b x 8
    std::array<FeatureMap, 4> hints;
    Output() : hints{FeatureMap(0, 0, 0, 0), FeatureMap(0, 0, 0, 0),
                     FeatureMap(0, 0, 0, 0), FeatureMap(0, 0, 0, 0)} {}
  };

  TeacherNet();
  void init(Rng& rng);

  Output forward(const FeatureMap& input);  // input b x 1 x 64 x 998
  void backward(const Eigen::MatrixXd& dlogits);

  std::vector<Param*> params();
  static const std::vector<std::string>& hint_names();
  static int hint_index(const std::string& name);

  static long count_params();
  static long count_flops();

 private:
  Conv2d conv1_, conv2_, conv3_, conv4_;
  Relu relu1_, relu2_, relu3_, relu4_;
  MaxPool2x2 pool1_, pool2_, pool3_, pool4_;
  GlobalAvgPool gap_;
  Linear fc1_, fc2_;
  Eigen::MatrixXd head_mask_;
};

// Checkpoint files hold every parameter tensor plus a small text header
// with the input standardization constants and architecture fields.
struct Standardization {
  double mean = 0.0;
  double std = 1.0;
};

void save_student(const std::string& path, StudentNet& net, const Standardization& s);
// Reads the header, constructs a net of the recorded width, loads weights.
StudentNet load_student(const std::string& path, Standardization* s);

void save_teacher(const std::string& path, TeacherNet& net, const Standardization& s);
TeacherNet load_teacher(const std::string& path, Standardization* s);

}  // namespace iusp
