#include "iusp/model.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "iusp/error.hpp"
#include "iusp/features.hpp"
#include "iusp/tensor_io.hpp"

namespace iusp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kConvFilters = 32;
constexpr int kConvKernel = 5;
constexpr int kConvStride = 2;
constexpr int kStudentH = 10;   // 20 mel bins through stride 2
constexpr int kStudentW = 499;  // 998 frames through stride 2
constexpr int kLstmInput = kConvFilters * kStudentH;

long conv_params(long c_in, long c_out, long kh, long kw) {
  return c_out * (c_in * kh * kw) + c_out;
}
long linear_params(long d_in, long d_out) { return d_out * d_in + d_out; }
long lstm_params(long d_in, long h) { return 4 * h * (d_in + h + 1); }

long conv_macs(long oh, long ow, long c_in, long c_out, long kh, long kw) {
  return oh * ow * c_out * c_in * kh * kw;
}

std::vector<NamedTensor> params_to_tensors(const std::vector<Param*>& params) {
  std::vector<NamedTensor> out;
  for (const Param* p : params) {
    NamedTensor t;
    t.name = p->name;
    t.dims = {static_cast<uint32_t>(p->value.rows()),
              static_cast<uint32_t>(p->value.cols())};
    t.data.resize(static_cast<size_t>(p->value.size()));
    Eigen::Map<RowMat>(t.data.data(), p->value.rows(), p->value.cols()) = p->value;
    t.store_f32 = false;
    out.push_back(std::move(t));
  }
  return out;
}

void tensors_to_params(const std::vector<NamedTensor>& tensors,
                       const std::vector<Param*>& params, const std::string& path) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  for (Param* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end())
      throw ParseError(path + ": checkpoint missing tensor '" + p->name + "'");
    const NamedTensor& t = *it->second;
    if (t.dims.size() != 2 || static_cast<Eigen::Index>(t.dims[0]) != p->value.rows() ||
        static_cast<Eigen::Index>(t.dims[1]) != p->value.cols())
      throw ParseError(path + ": tensor '" + p->name + "' has wrong shape");
    p->value = Eigen::Map<const RowMat>(t.data.data(), p->value.rows(), p->value.cols());
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::map<std::string, std::string> parse_header(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& header_field(const std::map<std::string, std::string>& kv,
                                const std::string& key, const std::string& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(path + ": checkpoint header missing '" + key + "'");
  return it->second;
}

}  // namespace

// ------------------------------------------------------------- StudentNet

StudentNet::StudentNet(int lstm_hidden)
    : hidden_(lstm_hidden),
      conv_(1, kConvFilters, kConvKernel, kConvKernel, kConvStride, kConvStride, "conv"),
      lstm_(kLstmInput, lstm_hidden, "lstm"),
      fc_(lstm_hidden, kNumClasses, "fc") {
  if (lstm_hidden < 1) throw ConfigError("student: lstm_hidden must be >= 1");
}

void StudentNet::init(Rng& rng) {
  conv_.init(rng);
  lstm_.init(rng);
  fc_.init(rng);
}

const std::vector<std::string>& StudentNet::hint_names() {
  static const std::vector<std::string> names = {"cnn", "lstm"};
  return names;
}

StudentNet::Output StudentNet::forward(const FeatureMap& input) {
  if (input.c != 1 || input.h != kStudentMelBins)
    throw InvalidInput("student: expected b x 1 x 20 x 998 input");
  last_b_ = input.b;
  conv_out_ = relu_.forward(conv_.forward(input));

  Output out;
  out.cnn_hint = conv_out_;
  out.cnn_hint.layer_id = "cnn";
  const int t_len = conv_out_.w;
  out.lstm_hint = FeatureMap(input.b, 1, hidden_, t_len, "lstm");

  caches_.assign(static_cast<size_t>(input.b), LstmCache{});
  Eigen::MatrixXd fc_in(input.b, hidden_);
  const size_t slice = static_cast<size_t>(kLstmInput) * t_len;
  for (int bi = 0; bi < input.b; ++bi) {
    const Eigen::Map<const RowMat> seq(conv_out_.v.data() + bi * slice, kLstmInput, t_len);
    const Eigen::MatrixXd h =
        lstm_.forward(Eigen::MatrixXd(seq), &caches_[static_cast<size_t>(bi)]);
    Eigen::Map<RowMat>(out.lstm_hint.v.data() + static_cast<size_t>(bi) * hidden_ * t_len,
                       hidden_, t_len) = h;
    fc_in.row(bi) = h.col(t_len - 1).transpose();
  }
  out.logits = fc_.forward(fc_in);
  return out;
}

void StudentNet::backward(const Eigen::MatrixXd& dlogits, const FeatureMap& dcnn_hint,
                          const FeatureMap& dlstm_hint) {
  const int t_len = conv_out_.w;
  const Eigen::MatrixXd dfc_in = fc_.backward(dlogits);
  FeatureMap dconv(conv_out_.b, conv_out_.c, conv_out_.h, conv_out_.w);
  const size_t slice = static_cast<size_t>(kLstmInput) * t_len;
  for (int bi = 0; bi < last_b_; ++bi) {
    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(hidden_, t_len);
    if (dlstm_hint.b > 0)
      dh = Eigen::Map<const RowMat>(
          dlstm_hint.v.data() + static_cast<size_t>(bi) * hidden_ * t_len, hidden_, t_len);
    dh.col(t_len - 1) += dfc_in.row(bi).transpose();
    const Eigen::MatrixXd dseq = lstm_.backward(caches_[static_cast<size_t>(bi)], dh);
    Eigen::Map<RowMat>(dconv.v.data() + bi * slice, kLstmInput, t_len) = dseq;
  }
  if (dcnn_hint.b > 0) {
    if (!dcnn_hint.same_shape(dconv))
      throw InvalidInput("student: cnn hint gradient shape mismatch");
    for (size_t i = 0; i < dconv.v.size(); ++i) dconv.v[i] += dcnn_hint.v[i];
  }
  conv_.backward(relu_.backward(dconv));
}

std::vector<Param*> StudentNet::params() {
  std::vector<Param*> out;
  for (Param* p : conv_.params()) out.push_back(p);
  for (Param* p : lstm_.params()) out.push_back(p);
  for (Param* p : fc_.params()) out.push_back(p);
  return out;
}

long StudentNet::count_params(int h) {
  return conv_params(1, kConvFilters, kConvKernel, kConvKernel) +
         lstm_params(kLstmInput, h) + linear_params(h, kNumClasses);
}

long StudentNet::count_flops(int h) {
  const long conv = conv_macs(kStudentH, kStudentW, 1, kConvFilters, kConvKernel, kConvKernel);
  const long lstm = static_cast<long>(kStudentW) * 4 * h * (kLstmInput + h);
  const long fc = static_cast<long>(h) * kNumClasses;
  return 2 * (conv + lstm + fc);
}

// ------------------------------------------------------------- TeacherNet

TeacherNet::TeacherNet()
    : conv1_(1, 32, 3, 3, 2, 2, "conv1"),
      conv2_(32, 64, 3, 3, 1, 1, "conv2"),
      conv3_(64, 128, 3, 3, 1, 1, "conv3"),
      conv4_(128, 128, 3, 3, 1, 1, "conv4"),
      fc1_(128, 4096, "fc1"),
      fc2_(4096, kNumClasses, "fc2") {}

void TeacherNet::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  conv3_.init(rng);
  conv4_.init(rng);
  fc1_.init(rng);
  fc2_.init(rng);
}

const std::vector<std::string>& TeacherNet::hint_names() {
  static const std::vector<std::string> names = {"mp1", "mp2", "mp3", "mp4"};
  return names;
}

int TeacherNet::hint_index(const std::string& name) {
  const auto& names = hint_names();
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw ConfigError("unknown teacher hint layer '" + name + "'");
}

TeacherNet::Output TeacherNet::forward(const FeatureMap& input) {
  if (input.c != 1 || input.h != kTeacherMelBins)
    throw InvalidInput("teacher: expected b x 1 x 64 x 998 input");
  Output out;
  FeatureMap x = pool1_.forward(relu1_.forward(conv1_.forward(input)));
  x.layer_id = "mp1";
  out.hints[0] = x;
  x = pool2_.forward(relu2_.forward(conv2_.forward(x)));
  x.layer_id = "mp2";
  out.hints[1] = x;
  x = pool3_.forward(relu3_.forward(conv3_.forward(x)));
  x.layer_id = "mp3";
  out.hints[2] = x;
  x = pool4_.forward(relu4_.forward(conv4_.forward(x)));
  x.layer_id = "mp4";
  out.hints[3] = x;

  const Eigen::MatrixXd pooled = gap_.forward(x);
  Eigen::MatrixXd a = fc1_.forward(pooled);
  // Plain matrix ReLU on the wide head.
  head_mask_ = (a.array() > 0.0).cast<double>();
  a = a.cwiseProduct(head_mask_);
  out.logits = fc2_.forward(a);
  return out;
}

void TeacherNet::backward(const Eigen::MatrixXd& dlogits) {
  Eigen::MatrixXd da = fc2_.backward(dlogits).cwiseProduct(head_mask_);
  FeatureMap dx = gap_.backward(fc1_.backward(da));
  dx = conv4_.backward(relu4_.backward(pool4_.backward(dx)));
  dx = conv3_.backward(relu3_.backward(pool3_.backward(dx)));
  dx = conv2_.backward(relu2_.backward(pool2_.backward(dx)));
  conv1_.backward(relu1_.backward(pool1_.backward(dx)));
}

std::vector<Param*> TeacherNet::params() {
  std::vector<Param*> out;
  for (Conv2d* c : {&conv1_, &conv2_, &conv3_, &conv4_})
    for (Param* p : c->params()) out.push_back(p);
  for (Linear* l : {&fc1_, &fc2_})
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

long TeacherNet::count_params() {
  return conv_params(1, 32, 3, 3) + conv_params(32, 64, 3, 3) +
         conv_params(64, 128, 3, 3) + conv_params(128, 128, 3, 3) +
         linear_params(128, 4096) + linear_params(4096, kNumClasses);
}

long TeacherNet::count_flops() {
  // Feature-map sizes for the 64 x 998 input: conv1 (stride 2) gives
  // 32 x 499, each pool halves with floor.
  const long macs = conv_macs(32, 499, 1, 32, 3, 3) +
                    conv_macs(16, 249, 32, 64, 3, 3) +
                    conv_macs(8, 124, 64, 128, 3, 3) +
                    conv_macs(4, 62, 128, 128, 3, 3) + 128L * 4096 +
                    4096L * kNumClasses;
  return 2 * macs;
}

// ------------------------------------------------------------ checkpoints

void save_student(const std::string& path, StudentNet& net, const Standardization& s) {
  std::string header = "arch=student\n";
  header += "lstm_hidden=" + std::to_string(net.lstm_hidden()) + "\n";
  header += "mel_bins=" + std::to_string(kStudentMelBins) + "\n";
  header += "classes=" + std::to_string(kNumClasses) + "\n";
  header += "mean=" + fmt_double(s.mean) + "\n";
  header += "std=" + fmt_double(s.std) + "\n";
  write_tensor_container_with_header(path, header, params_to_tensors(net.params()));
}

StudentNet load_student(const std::string& path, Standardization* s) {
  std::string header;
  const auto tensors = read_tensor_container_with_header(path, &header);
  const auto kv = parse_header(header);
  if (header_field(kv, "arch", path) != "student")
    throw ParseError(path + ": not a student checkpoint");
  StudentNet net(std::stoi(header_field(kv, "lstm_hidden", path)));
  if (s) {
    s->mean = std::stod(header_field(kv, "mean", path));
    s->std = std::stod(header_field(kv, "std", path));
  }
  auto params = net.params();
  tensors_to_params(tensors, params, path);
  return net;
}

void save_teacher(const std::string& path, TeacherNet& net, const Standardization& s) {
  std::string header = "arch=teacher\n";
  header += "mel_bins=" + std::to_string(kTeacherMelBins) + "\n";
  header += "classes=" + std::to_string(kNumClasses) + "\n";
  header += "mean=" + fmt_double(s.mean) + "\n";
  header += "std=" + fmt_double(s.std) + "\n";
  write_tensor_container_with_header(path, header, params_to_tensors(net.params()));
}

TeacherNet load_teacher(const std::string& path, Standardization* s) {
  std::string header;
  const auto tensors = read_tensor_container_with_header(path, &header);
  const auto kv = parse_header(header);
  if (header_field(kv, "arch", path) != "teacher")
    throw ParseError(path + ": not a teacher checkpoint");
  TeacherNet net;
  if (s) {
    s->mean = std::stod(header_field(kv, "mean", path));
    s->std = std::stod(header_field(kv, "std", path));
  }
  auto params = net.params();
  tensors_to_params(tensors, params, path);
  return net;
}

}  // namespace iusp
