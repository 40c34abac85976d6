#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "fsgs/io.hpp"

namespace fsgs {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image load_image(const std::string& path, int downsample_factor) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("load_image: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw IoError("load_image: libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("load_image: failed to decode " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w, h;
  int bit_depth, color_type;
  png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (bit_depth != 8 && bit_depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("load_image: unsupported bit depth in " + path);
  }

  // Normalize everything to interleaved RGB at the native bit depth.
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // file is big-endian
  png_read_update_info(png, info);

  std::vector<png_byte> raw(std::size_t(png_get_rowbytes(png, info)) * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = raw.data() + std::size_t(y) * png_get_rowbytes(png, info);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img = make_image(int(w), int(h));
  if (bit_depth == 8) {
    for (std::size_t i = 0; i < img.data.size(); ++i)
      img.data[i] = float(raw[i]) / 255.f;
  } else {
    auto* p16 = reinterpret_cast<const std::uint16_t*>(raw.data());
    for (std::size_t i = 0; i < img.data.size(); ++i)
      img.data[i] = float(p16[i]) / 65535.f;
  }
  return downsample(img, downsample_factor);
}

void save_image(const std::string& path, const Image& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("save_image: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw IoError("save_image: libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("save_image: failed to encode " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(std::size_t(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float v = std::min(1.f, std::max(0.f, img.at(x, y, c)));
        row[std::size_t(x) * 3 + c] = png_byte(v * 255.f + 0.5f);
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace fsgs
