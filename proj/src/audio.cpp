#include "iusp/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "iusp/error.hpp"

namespace iusp {

namespace {

uint32_t rd_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t rd_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::vector<unsigned char>& out, uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void wr_u16(std::vector<unsigned char>& out, uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw ParseError(path + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* hdr = buf.data() + pos;
    uint32_t len = rd_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (pos + 8 + len > buf.size()) throw ParseError(path + ": truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (len < 16) throw ParseError(path + ": short fmt chunk");
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = body;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word aligned
  }
  if (!data) throw ParseError(path + ": no data chunk");
  if (channels == 0 || rate == 0) throw ParseError(path + ": no fmt chunk");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    size_t n = data_len / (2 * channels);
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        int16_t s;
        std::memcpy(&s, data + 2 * (i * channels + c), 2);
        acc += s / 32768.0;
      }
      w.samples[i] = acc / channels;
    }
  } else if (format == 3 && bits == 32) {
    size_t n = data_len / (4 * channels);
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        float s;
        std::memcpy(&s, data + 4 * (i * channels + c), 4);
        acc += s;
      }
      w.samples[i] = acc / channels;
    }
  } else {
    throw ParseError(path + ": unsupported encoding (format " +
                     std::to_string(format) + ", " + std::to_string(bits) + " bit)");
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw InvalidInput("write_wav: sample_rate must be positive");
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * w.samples.size());
  uint32_t data_len = static_cast<uint32_t>(2 * w.samples.size());
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  wr_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  wr_u32(out, 16);
  wr_u16(out, 1);  // PCM
  wr_u16(out, 1);  // mono
  wr_u32(out, static_cast<uint32_t>(w.sample_rate));
  wr_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  wr_u16(out, 2);
  wr_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  wr_u32(out, data_len);
  for (double v : w.samples) {
    double clamped = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
    double scaled = clamped * 32767.0;
    int16_t q = static_cast<int16_t>(scaled >= 0 ? scaled + 0.5 : scaled - 0.5);
    wr_u16(out, static_cast<uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to " + path);
}

}  // namespace iusp
