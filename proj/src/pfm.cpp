#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fsgs/io.hpp"

namespace fsgs {

namespace {

float byteswap_float(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  u = ((u & 0xff000000u) >> 24) | ((u & 0x00ff0000u) >> 8) |
      ((u & 0x0000ff00u) << 8) | ((u & 0x000000ffu) << 24);
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace

Grid load_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_pfm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "Pf") throw IoError("load_pfm: bad magic in " + path);
  int w, h;
  double scale;
  if (!(in >> w >> h >> scale) || w <= 0 || h <= 0)
    throw IoError("load_pfm: bad header in " + path);
  in.get();  // single whitespace after the scale line

  std::vector<float> raw(std::size_t(w) * h);
  if (!in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * 4)))
    throw IoError("load_pfm: truncated data in " + path);

  bool file_little = scale < 0;
  bool host_little = std::endian::native == std::endian::little;
  if (file_little != host_little)
    for (auto& v : raw) v = byteswap_float(v);

  // PFM rows are bottom-up; re-orient to top-down row-major.
  Grid grid = make_grid(w, h);
  for (int y = 0; y < h; ++y)
    std::memcpy(&grid.data[std::size_t(y) * w], &raw[std::size_t(h - 1 - y) * w],
                std::size_t(w) * 4);
  return grid;
}

void save_pfm(const std::string& path, const Grid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_pfm: cannot open " + path);
  bool host_little = std::endian::native == std::endian::little;
  out << "Pf\n" << grid.width << " " << grid.height << "\n"
      << (host_little ? "-1.0" : "1.0") << "\n";
  for (int y = grid.height - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(&grid.data[std::size_t(y) * grid.width]),
              std::streamsize(grid.width) * 4);
  if (!out) throw IoError("save_pfm: write failed for " + path);
}

DepthPriorFile load_depth_prior(const std::string& path) {
  DepthPriorFile prior;
  prior.values = load_pfm(path);
  prior.mask.resize(prior.values.data.size());
  for (std::size_t i = 0; i < prior.mask.size(); ++i) {
    float v = prior.values.data[i];
    prior.mask[i] = std::isfinite(v) && v > 0.f;
  }
  return prior;
}

}  // namespace fsgs
