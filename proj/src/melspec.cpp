#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "iusp/error.hpp"
#include "iusp/features.hpp"
#include "iusp/fft.hpp"

namespace iusp {

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw InvalidInput("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

std::vector<double> power_spectrum(const std::vector<double>& frame, size_t n) {
  if (frame.size() > n) throw InvalidInput("power_spectrum: frame longer than fft size");
  std::vector<std::complex<double>> a(n, {0.0, 0.0});
  for (size_t i = 0; i < frame.size(); ++i) a[i] = {frame[i], 0.0};
  fft(a);
  std::vector<double> p(n / 2 + 1);
  for (size_t k = 0; k <= n / 2; ++k) p[k] = std::norm(a[k]);
  return p;
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular filters on FFT bins, linearly spaced on the mel axis between
// 0 Hz and Nyquist, each normalized so its bin weights sum to 1.
std::vector<std::vector<double>> mel_filterbank(int mel_bins, size_t fft_size,
                                                int sample_rate) {
  const size_t n_bins = fft_size / 2 + 1;
  const double f_max = sample_rate / 2.0;
  const double mel_max = hz_to_mel(f_max);
  std::vector<double> edges(static_cast<size_t>(mel_bins) + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / (mel_bins + 1));

  std::vector<std::vector<double>> fb(static_cast<size_t>(mel_bins),
                                      std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < mel_bins; ++m) {
    const double lo = edges[static_cast<size_t>(m)];
    const double mid = edges[static_cast<size_t>(m) + 1];
    const double hi = edges[static_cast<size_t>(m) + 2];
    double sum = 0.0;
    for (size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      double wgt = 0.0;
      if (f >= lo && f <= mid && mid > lo)
        wgt = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi && hi > mid)
        wgt = (hi - f) / (hi - mid);
      fb[static_cast<size_t>(m)][k] = wgt;
      sum += wgt;
    }
    if (sum > 0.0)
      for (auto& wgt : fb[static_cast<size_t>(m)]) wgt /= sum;
  }
  return fb;
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

int frame_count(size_t num_samples, int win, int hop) {
  if (num_samples < static_cast<size_t>(win)) return 0;
  return static_cast<int>((num_samples - static_cast<size_t>(win)) /
                          static_cast<size_t>(hop)) +
         1;
}

LogMelSpectrogram log_mel(const Waveform& w, int mel_bins, double win_ms,
                          double hop_ms) {
  if (w.sample_rate <= 0) throw InvalidInput("log_mel: sample_rate must be positive");
  if (mel_bins < 1) throw InvalidInput("log_mel: mel_bins must be >= 1");
  const int win = static_cast<int>(std::lround(win_ms * w.sample_rate / 1000.0));
  const int hop = static_cast<int>(std::lround(hop_ms * w.sample_rate / 1000.0));
  if (win <= 0 || hop <= 0) throw InvalidInput("log_mel: window/hop too small");
  const int frames = frame_count(w.samples.size(), win, hop);
  if (frames == 0)
    throw InvalidInput("log_mel: clip shorter than one window (" +
                       std::to_string(w.samples.size()) + " samples)");

  const size_t fft_size = next_pow2(static_cast<size_t>(win));
  const auto fb = mel_filterbank(mel_bins, fft_size, w.sample_rate);

  // Periodic Hann window.
  std::vector<double> window(static_cast<size_t>(win));
  for (int i = 0; i < win; ++i)
    window[static_cast<size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);

  LogMelSpectrogram out;
  out.mel_bins = mel_bins;
  out.frames = frames;
  out.win_ms = win_ms;
  out.hop_ms = hop_ms;
  out.values.assign(static_cast<size_t>(mel_bins) * static_cast<size_t>(frames), 0.0);

  std::vector<double> frame(static_cast<size_t>(win));
  for (int t = 0; t < frames; ++t) {
    const size_t start = static_cast<size_t>(t) * static_cast<size_t>(hop);
    for (int i = 0; i < win; ++i)
      frame[static_cast<size_t>(i)] =
          w.samples[start + static_cast<size_t>(i)] * window[static_cast<size_t>(i)];
    const std::vector<double> power = power_spectrum(frame, fft_size);
    for (int m = 0; m < mel_bins; ++m) {
      const auto& filt = fb[static_cast<size_t>(m)];
      double acc = 0.0;
      for (size_t k = 0; k < power.size(); ++k) acc += filt[k] * power[k];
      out.at(m, t) = std::log(acc + kLogFloor);
    }
  }
  return out;
}

}  // namespace iusp
