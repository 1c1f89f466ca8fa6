#pragma once

#include <array>
#include <string>
#include <vector>

#include "iusp/audio.hpp"

namespace iusp {

struct ManifestEntry {
  std::string clip_id;
  std::array<int, 8> labels{};
};

// CSV with the exact header
//   clip_id,engine,machinery-impact,non-machinery-impact,powered-saw,
//   alert-signal,music,human-voice,dog
// (one line). Label fields must be 0 or 1; anything else is a ParseError,
// as is a missing or reordered header.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& rows);

// Conventional layout helpers: a corpus root holds audio/<clip_id>.wav and
// optionally features/<clip_id>.feat next to its manifests.
std::string audio_path(const std::string& root, const std::string& clip_id);
std::string feature_path(const std::string& root, const std::string& clip_id);

struct LabeledClip {
  std::string clip_id;
  Waveform waveform;
  std::array<int, 8> labels{};
};

// Manifest rows joined with their audio. A row whose WAV is missing is an
// IoError naming the clip id, never a silent skip.
std::vector<LabeledClip> load_clips(const std::string& csv_path,
                                    const std::string& audio_dir);

struct Corpus {
  std::string root;
  std::vector<ManifestEntry> train, val, test;
};

// Reads root/{train,val,test}.csv. Missing val/test files yield empty
// splits; a missing train.csv is an IoError.
Corpus load_corpus(const std::string& root);

}  // namespace iusp
