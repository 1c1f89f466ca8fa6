#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace iusp {

struct Image {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel, row major

  Image(int w, int h, uint8_t r = 255, uint8_t g = 255, uint8_t b = 255);
  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
  void fill_rect(int x0, int y0, int w, int h, uint8_t r, uint8_t g, uint8_t b);
  void line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b);
  // 5x7 bitmap glyphs (ASCII 32..126), advance 6*scale pixels.
  void text(int x, int y, std::string_view s, uint8_t r, uint8_t g, uint8_t b,
            int scale = 1);
  static int text_width(std::string_view s, int scale = 1);
};

// Truecolor 8-bit PNG via zlib.
void write_png(const std::string& path, const Image& img);

}  // namespace iusp
