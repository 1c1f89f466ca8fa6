#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "iusp/audio.hpp"
#include "iusp/rng.hpp"

namespace iusp {

// Tag vocabulary, in manifest column order.
inline constexpr std::array<const char*, 8> kClassNames = {
    "engine",       "machinery-impact", "non-machinery-impact", "powered-saw",
    "alert-signal", "music",            "human-voice",          "dog"};

int class_index(std::string_view name);  // throws InvalidInput on unknown tag

// Half-open sample range [start, start + len) of one acoustic event.
struct EventWindow {
  size_t start = 0;
  size_t len = 0;
};

// Event generators. Each renders n samples at 16 kHz with peak near 1;
// the mixer applies gains afterwards. All randomness comes from `rng`.
// For the impulsive classes (machinery-impact, non-machinery-impact) the
// optional `events` out-parameter receives the exact windows containing
// all of the signal energy; other classes leave it empty.
std::vector<double> render_event(int class_idx, size_t n, Rng& rng,
                                 std::vector<EventWindow>* events = nullptr);

// Alert-signal with an explicit repetition period (seconds). render_event
// draws the period uniformly from [0.8, 2.5] and delegates here; tests that
// need a known period call this directly.
std::vector<double> render_alert_signal(size_t n, double period_s, Rng& rng);

// 1/f background noise, peak-normalized.
std::vector<double> pink_noise(size_t n, Rng& rng);

struct ClipSpec {
  std::string clip_id;
  std::array<int, 8> labels{};  // 0/1 per class
};

// Renders one 10 s clip: the active classes are mixed additively over a
// pink-noise bed at an SNR drawn from [snr_lo, snr_hi] dB, then the mix is
// rescaled if needed so |sample| <= 0.9. All randomness derives from
// derive_seed(base_seed, clip_id), so a clip depends only on its id, its
// labels and the base seed.
Waveform synth_clip(const ClipSpec& spec, uint64_t base_seed, double snr_lo = 5.0,
                    double snr_hi = 20.0);

struct DatasetSpec {
  int n_train = 96;
  int n_val = 32;
  int n_test = 48;
  uint64_t seed = 1;
  double snr_lo = 5.0;
  double snr_hi = 20.0;
  std::string out_dir;
};

// Draws labels (1-3 positives per clip), renders audio under out_dir/audio,
// and writes train.csv / val.csv / test.csv manifests. Clip ids are
// "{split}_{index:04}".
void generate_dataset(const DatasetSpec& spec);

}  // namespace iusp
