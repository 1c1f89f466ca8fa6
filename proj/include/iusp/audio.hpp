#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iusp {

// A mono audio clip. Samples are dimensionless amplitudes in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// Reads a RIFF/WAVE file. Accepts 16-bit PCM and 32-bit IEEE float data;
// multi-channel input is averaged to mono. Throws IoError on unreadable
// files and ParseError on malformed or unsupported containers.
Waveform read_wav(const std::string& path);

// Writes mono 16-bit PCM. Samples are clamped to [-1, 1] and rounded
// symmetrically, so output bytes are a pure function of the input.
void write_wav(const std::string& path, const Waveform& w);

// Band-limited sample rate conversion (windowed-sinc interpolation).
// Equal rates return the input unchanged. Output length is
// round(n_in * target_rate / source_rate), preserving duration within one
// sample period. Throws InvalidInput on empty input or nonpositive rate.
Waveform resample(const Waveform& w, int target_rate);

}  // namespace iusp
