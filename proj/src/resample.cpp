#include <cmath>
#include <numbers>

#include "iusp/audio.hpp"
#include "iusp/error.hpp"

namespace iusp {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

// Windowed-sinc interpolation. The kernel is a Hann-windowed sinc with 32
// zero crossings per side at the output Nyquist; when downsampling it is
// stretched by the rate ratio so it also acts as the anti-alias filter.
Waveform resample(const Waveform& in, int target_rate) {
  if (target_rate <= 0) throw InvalidInput("resample: target rate must be positive");
  if (in.sample_rate <= 0) throw InvalidInput("resample: input has no sample rate");
  if (in.samples.empty()) throw InvalidInput("resample: empty input");
  if (in.sample_rate == target_rate) return in;

  const double ratio = static_cast<double>(target_rate) / in.sample_rate;
  const double cutoff = ratio < 1.0 ? ratio : 1.0;  // relative to input Nyquist
  const int zeros = 32;
  const double half_width = zeros / cutoff;

  Waveform out;
  out.sample_rate = target_rate;
  const auto n_in = static_cast<long>(in.samples.size());
  const auto n_out =
      static_cast<size_t>(std::llround(static_cast<double>(n_in) * ratio));
  out.samples.resize(n_out);

  for (size_t j = 0; j < n_out; ++j) {
    const double center = static_cast<double>(j) / ratio;
    long lo = static_cast<long>(std::ceil(center - half_width));
    long hi = static_cast<long>(std::floor(center + half_width));
    if (lo < 0) lo = 0;
    if (hi >= n_in) hi = n_in - 1;
    double acc = 0.0;
    for (long i = lo; i <= hi; ++i) {
      const double d = static_cast<double>(i) - center;
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += in.samples[static_cast<size_t>(i)] * cutoff * sinc(cutoff * d) * win;
    }
    out.samples[j] = acc;
  }
  return out;
}

}  // namespace iusp
