#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fsgs {

// Interleaved RGB image, row-major, values nominally in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // width * height * 3

  float& at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }
};

// Single-channel scalar grid (depth, disparity, masks-as-floats).
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // width * height

  float& at(int x, int y) { return data[std::size_t(y) * width + x]; }
  float at(int x, int y) const { return data[std::size_t(y) * width + x]; }
};

inline Image make_image(int w, int h, float fill = 0.f) {
  return Image{w, h, std::vector<float>(std::size_t(w) * h * 3, fill)};
}

inline Grid make_grid(int w, int h, float fill = 0.f) {
  return Grid{w, h, std::vector<float>(std::size_t(w) * h, fill)};
}

// Integer-factor box downsample; factor 1 is the identity.
inline Image downsample(const Image& img, int factor) {
  if (factor < 1 || img.width % factor || img.height % factor)
    throw std::invalid_argument("downsample: factor must divide both dimensions");
  if (factor == 1) return img;
  Image out = make_image(img.width / factor, img.height / factor);
  float inv = 1.f / float(factor * factor);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float acc = 0.f;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            acc += img.at(x * factor + dx, y * factor + dy, c);
        out.at(x, y, c) = acc * inv;
      }
  return out;
}

}  // namespace fsgs
