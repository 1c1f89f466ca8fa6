#include "iusp/tensor_io.hpp"

#include <cstring>
#include <fstream>

#include "iusp/error.hpp"

// Container layout (all integers little-endian):
//   magic "TNSR", u32 version (1), u32 entry count,
//   then per entry: u16 name length, name bytes, u8 dtype (0 = f32,
//   1 = f64), u8 rank, u32 dims[rank], row-major payload.
// The *_with_header variants prepend a UTF-8 text block terminated by a
// line containing exactly "---\n" before the magic.

namespace iusp {

namespace {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string buf, std::string path)
      : buf_(std::move(buf)), path_(std::move(path)) {}

  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
  uint16_t u16() {
    const char* p = take(2);
    return static_cast<uint16_t>(static_cast<uint8_t>(p[0]) |
                                 (static_cast<uint8_t>(p[1]) << 8));
  }
  uint32_t u32() {
    const char* p = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(p[i])) << (8 * i);
    return v;
  }
  std::string str(size_t n) { return std::string(take(n), n); }
  const char* take(size_t n) {
    if (pos_ + n > buf_.size()) throw ParseError(path_ + ": truncated tensor container");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  size_t find_header_end() {
    // Returns offset just past the "---\n" separator, or npos.
    if (buf_.compare(0, 4, "TNSR") == 0) return std::string::npos;
    size_t at = buf_.find("---\n");
    if (at == std::string::npos || (at != 0 && buf_[at - 1] != '\n'))
      throw ParseError(path_ + ": no header terminator before tensor data");
    return at + 4;
  }
  void seek(size_t pos) { pos_ = pos; }
  const std::string& buf() const { return buf_; }

 private:
  std::string buf_;
  std::string path_;
  size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

void encode(std::string& out, const std::vector<NamedTensor>& tensors) {
  out += "TNSR";
  put_u32(out, 1);
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > 0xffff) throw InvalidInput("tensor name too long");
    size_t expect = t.dims.empty() ? 0 : 1;
    for (uint32_t d : t.dims) expect *= d;
    if (expect != t.data.size())
      throw InvalidInput("tensor '" + t.name + "': dims/data size mismatch");
    put_u16(out, static_cast<uint16_t>(t.name.size()));
    out += t.name;
    out.push_back(t.store_f32 ? 0 : 1);
    out.push_back(static_cast<char>(t.dims.size()));
    for (uint32_t d : t.dims) put_u32(out, d);
    if (t.store_f32) {
      for (double v : t.data) {
        float fv = static_cast<float>(v);
        char b[4];
        std::memcpy(b, &fv, 4);
        out.append(b, 4);
      }
    } else {
      for (double v : t.data) {
        char b[8];
        std::memcpy(b, &v, 8);
        out.append(b, 8);
      }
    }
  }
}

std::vector<NamedTensor> decode(Reader& r, const std::string& path) {
  if (r.str(4) != "TNSR") throw ParseError(path + ": bad magic");
  const uint32_t version = r.u32();
  if (version != 1) throw ParseError(path + ": unsupported container version");
  const uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.u16());
    const uint8_t dtype = r.u8();
    if (dtype > 1) throw ParseError(path + ": unknown dtype");
    t.store_f32 = dtype == 0;
    const uint8_t rank = r.u8();
    size_t n = rank == 0 ? 0 : 1;
    for (uint8_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32());
      n *= t.dims.back();
    }
    t.data.resize(n);
    if (t.store_f32) {
      const char* p = r.take(4 * n);
      for (size_t j = 0; j < n; ++j) {
        float fv;
        std::memcpy(&fv, p + 4 * j, 4);
        t.data[j] = fv;
      }
    } else {
      const char* p = r.take(8 * n);
      for (size_t j = 0; j < n; ++j) std::memcpy(&t.data[j], p + 8 * j, 8);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_all(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

}  // namespace

void write_tensor_container(const std::string& path,
                            const std::vector<NamedTensor>& tensors) {
  std::string out;
  encode(out, tensors);
  write_all(path, out);
}

std::vector<NamedTensor> read_tensor_container(const std::string& path) {
  Reader r(slurp(path), path);
  return decode(r, path);
}

void write_tensor_container_with_header(const std::string& path,
                                        const std::string& text_header,
                                        const std::vector<NamedTensor>& tensors) {
  std::string out = text_header;
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  out += "---\n";
  encode(out, tensors);
  write_all(path, out);
}

std::vector<NamedTensor> read_tensor_container_with_header(const std::string& path,
                                                           std::string* text_header) {
  Reader r(slurp(path), path);
  const size_t body = r.find_header_end();
  if (body == std::string::npos) {
    if (text_header) text_header->clear();
  } else {
    if (text_header) *text_header = r.buf().substr(0, body - 4);
    r.seek(body);
  }
  return decode(r, path);
}

}  // namespace iusp
