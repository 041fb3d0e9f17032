#pragma once

// 8-bit grayscale PNG / binary PGM (P5) reading and writing. Masks are
// binarized at intensity >= 128 on read and written as {0,255}.

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "glottisgate/core.hpp"
#include "glottisgate/error.hpp"

namespace glottisgate {

/// Interleaved 8-bit RGB image (used for montages).
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline bool has_extension(const std::filesystem::path& p, const char* ext) {
  auto e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e == ext;
}

inline std::vector<std::uint8_t> read_png_gray(const std::filesystem::path& path, int& w,
                                               int& h) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw MissingInput("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InvalidInput("corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  pixels.resize(static_cast<std::size_t>(w) * h);
  rows.resize(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = &pixels[static_cast<std::size_t>(y) * w];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

inline void write_png(const std::filesystem::path& path, const std::uint8_t* data, int w, int h,
                      int channels) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(w) * channels;
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline void skip_pgm_space(std::istream& in) {
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline std::vector<std::uint8_t> read_pgm(const std::filesystem::path& path, int& w, int& h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw InvalidInput("only binary PGM (P5) is supported: " + path.string());
  int maxval = 0;
  skip_pgm_space(in);
  in >> w;
  skip_pgm_space(in);
  in >> h;
  skip_pgm_space(in);
  in >> maxval;
  in.get();
  if (!in || w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw InvalidInput("malformed PGM header: " + path.string());
  }
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
    throw InvalidInput("truncated PGM: " + path.string());
  }
  if (maxval != 255) {
    for (auto& p : pixels) p = static_cast<std::uint8_t>(std::min(255, p * 255 / maxval));
  }
  return pixels;
}

inline void write_pgm(const std::filesystem::path& path, const std::uint8_t* data, int w, int h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(w) * h);
}

inline std::vector<std::uint8_t> read_gray(const std::filesystem::path& path, int& w, int& h) {
  if (!std::filesystem::exists(path)) throw MissingInput("no such file: " + path.string());
  if (has_extension(path, ".pgm")) return read_pgm(path, w, h);
  return read_png_gray(path, w, h);
}

inline void write_gray(const std::filesystem::path& path, const std::uint8_t* data, int w, int h) {
  if (has_extension(path, ".pgm")) {
    write_pgm(path, data, w, h);
  } else {
    write_png(path, data, w, h, 1);
  }
}

}  // namespace detail

inline Frame read_frame(const std::filesystem::path& path) {
  int w = 0, h = 0;
  auto px = detail::read_gray(path, w, h);
  return Frame(w, h, std::move(px));
}

inline BinaryMask read_mask(const std::filesystem::path& path) {
  int w = 0, h = 0;
  auto px = detail::read_gray(path, w, h);
  for (auto& p : px) p = p >= 128 ? 1 : 0;
  return BinaryMask(w, h, std::move(px));
}

inline void write_frame(const std::filesystem::path& path, const Frame& f) {
  detail::write_gray(path, f.data().data(), f.width(), f.height());
}

inline void write_mask(const std::filesystem::path& path, const BinaryMask& m) {
  std::vector<std::uint8_t> px(m.data().begin(), m.data().end());
  for (auto& p : px) p = p ? 255 : 0;
  detail::write_gray(path, px.data(), m.width(), m.height());
}

inline void write_rgb_png(const std::filesystem::path& path, const RgbImage& img) {
  detail::write_png(path, img.pixels.data(), img.width, img.height, 3);
}

inline bool is_image_file(const std::filesystem::path& p) {
  return detail::has_extension(p, ".png") || detail::has_extension(p, ".pgm");
}

}  // namespace glottisgate
