#include "iusp/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "iusp/error.hpp"
#include "iusp/features.hpp"
#include "iusp/manifest.hpp"

namespace iusp {

namespace {

constexpr double kFs = 16000.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void peak_normalize(std::vector<double>& x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 1e-12)
    for (double& v : x) v /= peak;
}

// Raised-cosine fade over `ramp` samples at both ends of [0, len).
double edge_gate(size_t i, size_t len, size_t ramp) {
  if (i >= len) return 0.0;
  const size_t from_end = len - 1 - i;
  const size_t d = std::min(i, from_end);
  if (d >= ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(d) / ramp);
}

// Stationary low-rumble harmonic stack plus band-limited noise.
std::vector<double> render_engine(size_t n, Rng& rng) {
  std::vector<double> x(n, 0.0);
  const double f0 = rng.uniform(40.0, 120.0);
  const int harmonics = 10;
  std::vector<double> amp(harmonics), phase(harmonics);
  for (int k = 0; k < harmonics; ++k) {
    amp[k] = rng.uniform(0.7, 1.3) / (k + 1);
    phase[k] = rng.uniform(0.0, kTwoPi);
  }
  const double am_rate = rng.uniform(0.3, 1.5);
  const double am_phase = rng.uniform(0.0, kTwoPi);
  double lp = 0.0;
  const double noise_amp = rng.uniform(0.2, 0.4);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    double s = 0.0;
    for (int k = 0; k < harmonics; ++k)
      s += amp[k] * std::sin(kTwoPi * f0 * (k + 1) * t + phase[k]);
    const double am = 1.0 + 0.2 * std::sin(kTwoPi * am_rate * t + am_phase);
    lp = 0.92 * lp + 0.08 * rng.normal();
    x[i] = s * am + noise_amp * lp * 12.0;
  }
  peak_normalize(x);
  return x;
}

// Shared impulsive renderer: `bursts` gated resonant decays whose windows
// never overlap (one window per equal slot, jittered).
std::vector<double> render_impacts(size_t n, Rng& rng, int min_count, int max_count,
                                   double min_len_s, double max_len_s, double f_lo,
                                   double f_hi, double tau_lo, double tau_hi,
                                   std::vector<EventWindow>* events) {
  std::vector<double> x(n, 0.0);
  const int count = static_cast<int>(rng.uniform_int(min_count, max_count));
  const size_t slot = n / static_cast<size_t>(count);
  for (int e = 0; e < count; ++e) {
    const size_t len =
        static_cast<size_t>(rng.uniform(min_len_s, max_len_s) * kFs);
    const size_t jitter_room = slot > len ? slot - len : 0;
    const size_t start = static_cast<size_t>(e) * slot +
                         static_cast<size_t>(rng.uniform(0.0, 1.0) *
                                             static_cast<double>(jitter_room));
    if (events) events->push_back({start, len});
    // Three decaying resonances plus a short noise click at onset.
    double fr[3], tau[3], ph[3], am[3];
    for (int r = 0; r < 3; ++r) {
      fr[r] = rng.uniform(f_lo, f_hi);
      tau[r] = rng.uniform(tau_lo, tau_hi);
      ph[r] = rng.uniform(0.0, kTwoPi);
      am[r] = rng.uniform(0.5, 1.0);
    }
    const size_t click_len = static_cast<size_t>(0.004 * kFs);
    for (size_t i = 0; i < len && start + i < n; ++i) {
      const double t = static_cast<double>(i) / kFs;
      double s = 0.0;
      for (int r = 0; r < 3; ++r)
        s += am[r] * std::exp(-t / tau[r]) * std::sin(kTwoPi * fr[r] * t + ph[r]);
      if (i < click_len) s += rng.normal() * 0.8 * (1.0 - static_cast<double>(i) / click_len);
      x[start + i] += s * edge_gate(i, len, static_cast<size_t>(0.003 * kFs));
    }
  }
  peak_normalize(x);
  return x;
}

// Buzzing saw: dense sawtooth-like harmonic stack with fast tremolo.
std::vector<double> render_saw(size_t n, Rng& rng) {
  std::vector<double> x(n, 0.0);
  const double f0 = rng.uniform(90.0, 200.0);
  const int harmonics = std::min(40, static_cast<int>(4000.0 / f0));
  std::vector<double> phase(static_cast<size_t>(harmonics));
  for (auto& p : phase) p = rng.uniform(0.0, kTwoPi);
  const double trem_rate = rng.uniform(30.0, 70.0);
  const double trem_depth = rng.uniform(0.2, 0.4);
  const double wobble = rng.uniform(0.2, 0.6);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    const double f = f0 * (1.0 + 0.01 * std::sin(kTwoPi * wobble * t));
    double s = 0.0;
    for (int k = 0; k < harmonics; ++k)
      s += std::sin(kTwoPi * f * (k + 1) * t + phase[static_cast<size_t>(k)]) / (k + 1);
    x[i] = s * (1.0 - trem_depth + trem_depth * std::sin(kTwoPi * trem_rate * t));
  }
  peak_normalize(x);
  return x;
}

// Tonal sweep repeating with the given period: the instantaneous frequency
// is a triangle between f_lo and f_hi over the duty-cycle fraction of each
// period, followed by silence. The waveform is a function of (t mod P), so
// consecutive repetitions are identical.
std::vector<double> render_alert(size_t n, double period_s, Rng& rng) {
  std::vector<double> x(n, 0.0);
  const double f_lo = rng.uniform(500.0, 900.0);
  const double f_hi = f_lo * rng.uniform(1.5, 2.2);
  const double duty = rng.uniform(0.55, 0.85);
  const double active_s = period_s * duty;
  const size_t period = static_cast<size_t>(period_s * kFs);
  const size_t active = static_cast<size_t>(active_s * kFs);
  double phi = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const size_t ip = i % period;
    if (ip == 0) phi = 0.0;  // restart each repetition identically
    if (ip >= active) continue;
    const double u = static_cast<double>(ip) / static_cast<double>(active);
    const double tri = u < 0.5 ? 2.0 * u : 2.0 * (1.0 - u);
    const double f = f_lo + (f_hi - f_lo) * tri;
    phi += kTwoPi * f / kFs;
    x[i] = std::sin(phi) * edge_gate(ip, active, static_cast<size_t>(0.01 * kFs));
  }
  peak_normalize(x);
  return x;
}

// Note sequence on a pentatonic grid with a 3-partial timbre.
std::vector<double> render_music(size_t n, Rng& rng) {
  std::vector<double> x(n, 0.0);
  static constexpr int kScale[] = {0, 3, 5, 7, 10};
  int degree = static_cast<int>(rng.uniform_int(0, 9));
  size_t at = 0;
  while (at < n) {
    const size_t note_len = static_cast<size_t>(rng.uniform(0.2, 0.5) * kFs);
    degree = std::clamp(degree + static_cast<int>(rng.uniform_int(-2, 2)), 0, 9);
    const double freq =
        220.0 * std::pow(2.0, (12 * (degree / 5) + kScale[degree % 5]) / 12.0);
    const double ph = rng.uniform(0.0, kTwoPi);
    const double tau = static_cast<double>(note_len) / kFs * 0.6;
    for (size_t i = 0; i < note_len && at + i < n; ++i) {
      const double t = static_cast<double>(i) / kFs;
      const double env = std::exp(-t / tau) * edge_gate(i, note_len, static_cast<size_t>(0.01 * kFs));
      double s = std::sin(kTwoPi * freq * t + ph) + 0.5 * std::sin(kTwoPi * 2 * freq * t) +
                 0.25 * std::sin(kTwoPi * 3 * freq * t);
      x[at + i] += s * env;
    }
    at += note_len;
  }
  peak_normalize(x);
  return x;
}

// Voiced segments: harmonic stack shaped by two formant resonances, with
// pitch drift and pauses between segments.
std::vector<double> render_voice(size_t n, Rng& rng) {
  std::vector<double> x(n, 0.0);
  size_t at = static_cast<size_t>(rng.uniform(0.0, 0.3) * kFs);
  while (at < n) {
    const size_t seg_len = static_cast<size_t>(rng.uniform(0.3, 1.0) * kFs);
    const double f0a = rng.uniform(90.0, 250.0);
    const double f0b = f0a * rng.uniform(0.8, 1.2);
    const double f1 = rng.uniform(300.0, 900.0);
    const double f2 = rng.uniform(900.0, 2500.0);
    const int harmonics = static_cast<int>(3000.0 / std::min(f0a, f0b));
    std::vector<double> ph(static_cast<size_t>(harmonics));
    for (auto& p : ph) p = rng.uniform(0.0, kTwoPi);
    double phi0 = 0.0;
    for (size_t i = 0; i < seg_len && at + i < n; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(seg_len);
      const double f0 = f0a + (f0b - f0a) * u +
                        3.0 * std::sin(kTwoPi * 5.0 * i / kFs);  // vibrato
      phi0 += kTwoPi * f0 / kFs;
      double s = 0.0;
      for (int k = 1; k <= harmonics; ++k) {
        const double fk = f0 * k;
        if (fk > 3000.0) break;
        const double g1 = 1.0 / (1.0 + std::pow((fk - f1) / 150.0, 2.0));
        const double g2 = 0.7 / (1.0 + std::pow((fk - f2) / 250.0, 2.0));
        s += (g1 + g2) * std::sin(phi0 * k + ph[static_cast<size_t>(k - 1)]);
      }
      x[at + i] = s * edge_gate(i, seg_len, static_cast<size_t>(0.03 * kFs));
    }
    at += seg_len + static_cast<size_t>(rng.uniform(0.15, 0.5) * kFs);
  }
  peak_normalize(x);
  return x;
}

// Bark trains: short down-chirped harmonic bursts in groups.
std::vector<double> render_dog(size_t n, Rng& rng) {
  std::vector<double> x(n, 0.0);
  const int groups = static_cast<int>(rng.uniform_int(2, 5));
  const size_t slot = n / static_cast<size_t>(groups);
  for (int g = 0; g < groups; ++g) {
    size_t at = static_cast<size_t>(g) * slot +
                static_cast<size_t>(rng.uniform(0.0, 0.3) * kFs);
    const int barks = static_cast<int>(rng.uniform_int(1, 4));
    for (int bk = 0; bk < barks; ++bk) {
      const size_t len = static_cast<size_t>(rng.uniform(0.06, 0.15) * kFs);
      const double f0 = rng.uniform(300.0, 600.0);
      const double ph = rng.uniform(0.0, kTwoPi);
      double phi = 0.0;
      for (size_t i = 0; i < len && at + i < n; ++i) {
        const double t = static_cast<double>(i) / kFs;
        const double u = static_cast<double>(i) / static_cast<double>(len);
        const double f = f0 * (1.0 - 0.3 * u);  // down chirp
        phi += kTwoPi * f / kFs;
        const double env = std::exp(-t / 0.04) *
                           edge_gate(i, len, static_cast<size_t>(0.004 * kFs));
        double s = std::sin(phi + ph) + 0.5 * std::sin(2 * phi) + 0.3 * std::sin(3 * phi);
        s += 0.4 * rng.normal() * std::exp(-t / 0.01);
        x[at + i] += s * env;
      }
      at += len + static_cast<size_t>(rng.uniform(0.08, 0.2) * kFs);
    }
  }
  peak_normalize(x);
  return x;
}

double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

int class_index(std::string_view name) {
  for (size_t i = 0; i < kClassNames.size(); ++i)
    if (name == kClassNames[i]) return static_cast<int>(i);
  throw InvalidInput("unknown class '" + std::string(name) + "'");
}

std::vector<double> render_alert_signal(size_t n, double period_s, Rng& rng) {
  if (period_s <= 0) throw InvalidInput("render_alert_signal: period must be positive");
  return render_alert(n, period_s, rng);
}

std::vector<double> render_event(int class_idx, size_t n, Rng& rng,
                                 std::vector<EventWindow>* events) {
  if (events) events->clear();
  switch (class_idx) {
    case 0: return render_engine(n, rng);
    case 1:
      return render_impacts(n, rng, 4, 10, 0.06, 0.18, 800.0, 3500.0, 0.01, 0.05, events);
    case 2:
      return render_impacts(n, rng, 1, 4, 0.15, 0.4, 120.0, 800.0, 0.05, 0.15, events);
    case 3: return render_saw(n, rng);
    case 4: return render_alert(n, rng.uniform(0.8, 2.5), rng);
    case 5: return render_music(n, rng);
    case 6: return render_voice(n, rng);
    case 7: return render_dog(n, rng);
    default:
      throw InvalidInput("render_event: class index " + std::to_string(class_idx) +
                         " out of range");
  }
}

std::vector<double> pink_noise(size_t n, Rng& rng) {
  // Kellet's 1/f filter over white noise.
  std::vector<double> x(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (size_t i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    x[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
  }
  peak_normalize(x);
  return x;
}

Waveform synth_clip(const ClipSpec& spec, uint64_t base_seed, double snr_lo,
                    double snr_hi) {
  Rng rng(derive_seed(base_seed, spec.clip_id));
  const size_t n = kClipSamples;
  std::vector<double> bed = pink_noise(n, rng);
  const double snr_db = rng.uniform(snr_lo, snr_hi);

  std::vector<double> sig(n, 0.0);
  bool any = false;
  for (int k = 0; k < 8; ++k) {
    if (!spec.labels[static_cast<size_t>(k)]) continue;
    any = true;
    const double gain = rng.uniform(0.6, 1.0);
    const std::vector<double> ev = render_event(k, n, rng);
    for (size_t i = 0; i < n; ++i) sig[i] += gain * ev[i];
  }

  Waveform out;
  out.sample_rate = kSampleRate;
  out.samples.resize(n);
  if (!any) {
    for (size_t i = 0; i < n; ++i) out.samples[i] = 0.3 * bed[i];
  } else {
    const double sig_rms = rms(sig);
    const double bed_rms = rms(bed);
    const double bed_gain =
        bed_rms > 1e-12 ? sig_rms / (bed_rms * std::pow(10.0, snr_db / 20.0)) : 0.0;
    for (size_t i = 0; i < n; ++i) out.samples[i] = sig[i] + bed_gain * bed[i];
  }
  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.9)
    for (double& v : out.samples) v *= 0.9 / peak;
  return out;
}

void generate_dataset(const DatasetSpec& spec) {
  if (spec.n_train < 1 || spec.n_val < 0 || spec.n_test < 0)
    throw InvalidInput("generate_dataset: bad split sizes");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(spec.out_dir) / "audio", ec);
  if (ec) throw IoError("cannot create " + spec.out_dir + ": " + ec.message());

  Rng label_rng(derive_seed(spec.seed, "labels"));
  auto make_split = [&](const char* name, int count) {
    std::vector<ManifestEntry> rows;
    for (int i = 0; i < count; ++i) {
      ManifestEntry row;
      char id[32];
      std::snprintf(id, sizeof(id), "%s_%04d", name, i);
      row.clip_id = id;
      const int positives = static_cast<int>(label_rng.uniform_int(1, 3));
      std::vector<int> order = {0, 1, 2, 3, 4, 5, 6, 7};
      label_rng.shuffle(order);
      for (int p = 0; p < positives; ++p)
        row.labels[static_cast<size_t>(order[static_cast<size_t>(p)])] = 1;
      const Waveform w =
          synth_clip({row.clip_id, row.labels}, spec.seed, spec.snr_lo, spec.snr_hi);
      write_wav(audio_path(spec.out_dir, row.clip_id), w);
      rows.push_back(std::move(row));
    }
    return rows;
  };

  write_manifest((fs::path(spec.out_dir) / "train.csv").string(),
                 make_split("train", spec.n_train));
  write_manifest((fs::path(spec.out_dir) / "val.csv").string(),
                 make_split("val", spec.n_val));
  write_manifest((fs::path(spec.out_dir) / "test.csv").string(),
                 make_split("test", spec.n_test));
}

}  // namespace iusp
