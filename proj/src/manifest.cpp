#include "iusp/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "iusp/error.hpp"
#include "iusp/synth.hpp"

namespace iusp {

namespace {

std::string expected_header() {
  std::string h = "clip_id";
  for (const char* c : kClassNames) {
    h += ',';
    h += c;
  }
  return h;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header())
    throw ParseError(path + ":1: bad header (expected '" + expected_header() + "')");

  std::vector<ManifestEntry> rows;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 9)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 9 fields, got " +
                       std::to_string(fields.size()));
    ManifestEntry row;
    row.clip_id = fields[0];
    if (row.clip_id.empty())
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty clip_id");
    for (int k = 0; k < 8; ++k) {
      const std::string& v = fields[static_cast<size_t>(k) + 1];
      if (v == "0")
        row.labels[static_cast<size_t>(k)] = 0;
      else if (v == "1")
        row.labels[static_cast<size_t>(k)] = 1;
      else
        throw ParseError(path + ":" + std::to_string(line_no) + ": label value '" + v +
                         "' is not 0 or 1");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& rows) {
  std::ofstream f(path, std::ios::binary);  // binary: keep LF on every platform
  if (!f) throw IoError("cannot write " + path);
  f << expected_header() << '\n';
  for (const auto& row : rows) {
    f << row.clip_id;
    for (int v : row.labels) f << ',' << v;
    f << '\n';
  }
  if (!f) throw IoError("short write to " + path);
}

std::string audio_path(const std::string& root, const std::string& clip_id) {
  return (std::filesystem::path(root) / "audio" / (clip_id + ".wav")).string();
}

std::string feature_path(const std::string& root, const std::string& clip_id) {
  return (std::filesystem::path(root) / "features" / (clip_id + ".feat")).string();
}

std::vector<LabeledClip> load_clips(const std::string& csv_path,
                                    const std::string& audio_dir) {
  const auto rows = read_manifest(csv_path);
  std::vector<LabeledClip> clips;
  clips.reserve(rows.size());
  for (const auto& row : rows) {
    const std::string wav =
        (std::filesystem::path(audio_dir) / (row.clip_id + ".wav")).string();
    if (!std::filesystem::exists(wav))
      throw IoError("clip '" + row.clip_id + "': missing audio file " + wav);
    LabeledClip clip;
    clip.clip_id = row.clip_id;
    clip.labels = row.labels;
    clip.waveform = read_wav(wav);
    clips.push_back(std::move(clip));
  }
  return clips;
}

Corpus load_corpus(const std::string& root) {
  namespace fs = std::filesystem;
  Corpus c;
  c.root = root;
  const std::string train = (fs::path(root) / "train.csv").string();
  if (!fs::exists(train)) throw IoError("no train.csv under " + root);
  c.train = read_manifest(train);
  const std::string val = (fs::path(root) / "val.csv").string();
  if (fs::exists(val)) c.val = read_manifest(val);
  const std::string test = (fs::path(root) / "test.csv").string();
  if (fs::exists(test)) c.test = read_manifest(test);
  return c;
}

}  // namespace iusp
