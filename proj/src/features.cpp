#include "iusp/features.hpp"

#include <cstring>

#include "iusp/error.hpp"
#include "iusp/tensor_io.hpp"

namespace iusp {

namespace {

// Fix the clip to exactly 10 s at 16 kHz: resample, then zero-pad or
// truncate at the end.
Waveform to_fixed_clip(const Waveform& w) {
  if (w.samples.empty()) throw InvalidInput("extract_pair: empty waveform");
  Waveform r = resample(w, kSampleRate);
  r.samples.resize(kClipSamples, 0.0);
  return r;
}

}  // namespace

FeaturePair extract_pair(const Waveform& clip) {
  Waveform fixed = to_fixed_clip(clip);
  FeaturePair out;
  out.teacher_input = log_mel(fixed, kTeacherMelBins);
  out.student_input = log_mel(fixed, kStudentMelBins);
  return out;
}

void write_feature_file(const std::string& path, const FeaturePair& pair) {
  auto to_tensor = [](const char* name, const LogMelSpectrogram& s) {
    NamedTensor t;
    t.name = name;
    t.dims = {static_cast<uint32_t>(s.mel_bins), static_cast<uint32_t>(s.frames)};
    t.data = s.values;
    t.store_f32 = true;
    return t;
  };
  write_tensor_container(
      path, {to_tensor("teacher", pair.teacher_input), to_tensor("student", pair.student_input)});
}

FeaturePair read_feature_file(const std::string& path) {
  auto tensors = read_tensor_container(path);
  FeaturePair out;
  bool have_teacher = false, have_student = false;
  for (auto& t : tensors) {
    if (t.dims.size() != 2)
      throw ParseError(path + ": feature entry '" + t.name + "' is not rank 2");
    LogMelSpectrogram s;
    s.mel_bins = static_cast<int>(t.dims[0]);
    s.frames = static_cast<int>(t.dims[1]);
    s.win_ms = kWinMs;
    s.hop_ms = kHopMs;
    s.values = std::move(t.data);
    if (t.name == "teacher") {
      out.teacher_input = std::move(s);
      have_teacher = true;
    } else if (t.name == "student") {
      out.student_input = std::move(s);
      have_student = true;
    }
  }
  if (!have_teacher || !have_student)
    throw ParseError(path + ": missing teacher/student feature entries");
  return out;
}

}  // namespace iusp
