#pragma once

#include <string>
#include <vector>

#include "iusp/audio.hpp"

namespace iusp {

// Log-mel spectrogram, mel_bins x frames, natural-log energy with an
// additive floor so silence stays finite.
struct LogMelSpectrogram {
  std::vector<double> values;  // row-major, [mel_bins][frames]
  int mel_bins = 0;
  int frames = 0;
  double win_ms = 0.0;
  double hop_ms = 0.0;

  double& at(int m, int t) { return values[static_cast<std::size_t>(m) * frames + t]; }
  double at(int m, int t) const {
    return values[static_cast<std::size_t>(m) * frames + t];
  }
};

// Energy floor added before the log. Silence maps to log(kLogFloor) exactly.
inline constexpr double kLogFloor = 1e-10;

// Fixed ingest rate for the whole pipeline.
inline constexpr int kSampleRate = 16000;
// 25 ms analysis window and 10 ms hop; a 10 s clip at 16 kHz gives 998 frames.
inline constexpr double kWinMs = 25.0;
inline constexpr double kHopMs = 10.0;
inline constexpr int kTeacherMelBins = 64;
inline constexpr int kStudentMelBins = 20;
inline constexpr int kClipSamples = 160000;  // 10 s at 16 kHz
inline constexpr int kClipFrames = 998;

// Full-window frame count: floor((n - win) / hop) + 1, no padding.
int frame_count(std::size_t num_samples, int win_samples, int hop_samples);

// Log-mel extraction. The window is periodic Hann; the filterbank is
// triangular on the HTK mel scale over 0..Nyquist, each filter normalized to
// unit weight sum. Requires at least one full window of audio.
LogMelSpectrogram log_mel(const Waveform& w, int mel_bins,
                          double win_ms = kWinMs, double hop_ms = kHopMs);

// Resamples to 16 kHz, pads with trailing zeros or truncates to exactly 10 s,
// then extracts the 64-bin teacher view and the 20-bin student view of the
// same waveform.
struct FeaturePair {
  LogMelSpectrogram teacher_input;  // 64 x 998
  LogMelSpectrogram student_input;  // 20 x 998
};
FeaturePair extract_pair(const Waveform& w);

// Feature cache, one `<clip_id>.feat` per clip. Entries "teacher" and
// "student" are stored as little-endian float32 in the shared tensor
// container format.
void write_feature_file(const std::string& path, const FeaturePair& fp);
FeaturePair read_feature_file(const std::string& path);

}  // namespace iusp
