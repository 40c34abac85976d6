#include "fsgs/colmap.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fsgs {

namespace {

std::ifstream open_or_throw(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ParseError("colmap: cannot open " + path);
  return in;
}

[[noreturn]] void fail(const std::string& path, std::size_t where, const std::string& what,
                       bool binary) {
  std::ostringstream os;
  os << "colmap: " << path << (binary ? " byte " : " line ") << where << ": " << what;
  throw ParseError(os.str());
}

template <typename T> T read_le(std::ifstream& in, const std::string& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    fail(path, std::size_t(in.tellg()), "unexpected end of file", true);
  return v;  // host is little-endian; layout matches the published format
}

int pinhole_param_count(const std::string& model) {
  if (model == "SIMPLE_PINHOLE") return 3;
  if (model == "PINHOLE") return 4;
  return -1;
}

std::string model_name_from_id(int id) {
  switch (id) {
    case 0: return "SIMPLE_PINHOLE";
    case 1: return "PINHOLE";
    default: return "model_id=" + std::to_string(id);
  }
}

void assign_params(SfmCamera& cam, const std::vector<double>& p) {
  if (cam.model == "SIMPLE_PINHOLE") {
    cam.fx = cam.fy = p[0];
    cam.cx = p[1];
    cam.cy = p[2];
  } else {
    cam.fx = p[0];
    cam.fy = p[1];
    cam.cx = p[2];
    cam.cy = p[3];
  }
}

void parse_cameras_text(const std::string& path, SfmModel& model) {
  auto in = open_or_throw(path, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    SfmCamera cam;
    if (!(ss >> cam.id >> cam.model >> cam.width >> cam.height))
      fail(path, lineno, "malformed camera record", false);
    int np = pinhole_param_count(cam.model);
    if (np < 0) fail(path, lineno, "unsupported camera model " + cam.model, false);
    std::vector<double> p(np);
    for (int i = 0; i < np; ++i)
      if (!(ss >> p[i])) fail(path, lineno, "missing camera parameter", false);
    assign_params(cam, p);
    model.cameras[cam.id] = cam;
  }
}

void parse_images_text(const std::string& path, SfmModel& model) {
  auto in = open_or_throw(path, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    SfmImage img;
    if (!(ss >> img.id >> img.quat[0] >> img.quat[1] >> img.quat[2] >> img.quat[3] >>
          img.trans[0] >> img.trans[1] >> img.trans[2] >> img.camera_id >> img.name))
      fail(path, lineno, "malformed image record", false);
    if (!model.cameras.count(img.camera_id))
      fail(path, lineno, "image references unknown camera id " +
                             std::to_string(img.camera_id), false);
    model.images[img.id] = img;
    // The alternating 2D-point line; may be empty, content unused here.
    if (!std::getline(in, line)) fail(path, lineno, "missing 2D-point line", false);
    ++lineno;
  }
}

void parse_points_text(const std::string& path, SfmModel& model) {
  auto in = open_or_throw(path, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long long id;
    SfmPoint pt;
    int r, g, b;
    if (!(ss >> id >> pt.xyz[0] >> pt.xyz[1] >> pt.xyz[2] >> r >> g >> b >> pt.error))
      fail(path, lineno, "malformed point record", false);
    if (!pt.xyz.allFinite()) fail(path, lineno, "non-finite point position", false);
    pt.rgb[0] = std::uint8_t(r);
    pt.rgb[1] = std::uint8_t(g);
    pt.rgb[2] = std::uint8_t(b);
    model.points.push_back(pt);
  }
}

void parse_cameras_binary(const std::string& path, SfmModel& model) {
  auto in = open_or_throw(path, true);
  auto n = read_le<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < n; ++i) {
    SfmCamera cam;
    cam.id = read_le<std::int32_t>(in, path);
    int model_id = read_le<std::int32_t>(in, path);
    cam.model = model_name_from_id(model_id);
    cam.width = int(read_le<std::uint64_t>(in, path));
    cam.height = int(read_le<std::uint64_t>(in, path));
    int np = pinhole_param_count(cam.model);
    if (np < 0)
      fail(path, std::size_t(in.tellg()), "unsupported camera model " + cam.model, true);
    std::vector<double> p(np);
    for (int k = 0; k < np; ++k) p[k] = read_le<double>(in, path);
    assign_params(cam, p);
    model.cameras[cam.id] = cam;
  }
}

void parse_images_binary(const std::string& path, SfmModel& model) {
  auto in = open_or_throw(path, true);
  auto n = read_le<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < n; ++i) {
    SfmImage img;
    img.id = read_le<std::int32_t>(in, path);
    for (int k = 0; k < 4; ++k) img.quat[k] = read_le<double>(in, path);
    for (int k = 0; k < 3; ++k) img.trans[k] = read_le<double>(in, path);
    img.camera_id = read_le<std::int32_t>(in, path);
    char c;
    while (in.get(c) && c != '\0') img.name.push_back(c);
    auto npts = read_le<std::uint64_t>(in, path);
    in.seekg(std::streamoff(npts * (sizeof(double) * 2 + sizeof(std::int64_t))),
             std::ios::cur);
    if (!in) fail(path, std::size_t(in.tellg()), "truncated 2D point block", true);
    if (!model.cameras.count(img.camera_id))
      fail(path, std::size_t(in.tellg()),
           "image references unknown camera id " + std::to_string(img.camera_id), true);
    model.images[img.id] = img;
  }
}

void parse_points_binary(const std::string& path, SfmModel& model) {
  auto in = open_or_throw(path, true);
  auto n = read_le<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < n; ++i) {
    SfmPoint pt;
    read_le<std::int64_t>(in, path);  // point3D id
    for (int k = 0; k < 3; ++k) pt.xyz[k] = read_le<double>(in, path);
    for (int k = 0; k < 3; ++k) pt.rgb[k] = read_le<std::uint8_t>(in, path);
    pt.error = read_le<double>(in, path);
    auto track = read_le<std::uint64_t>(in, path);
    in.seekg(std::streamoff(track * sizeof(std::int32_t) * 2), std::ios::cur);
    if (!in) fail(path, std::size_t(in.tellg()), "truncated track block", true);
    if (!pt.xyz.allFinite())
      fail(path, std::size_t(in.tellg()), "non-finite point position", true);
    model.points.push_back(pt);
  }
}

}  // namespace

SfmModel parse_colmap_model(const std::string& dir, ColmapFormat format) {
  SfmModel model;
  if (format == ColmapFormat::kText) {
    parse_cameras_text(dir + "/cameras.txt", model);
    parse_images_text(dir + "/images.txt", model);
    parse_points_text(dir + "/points3D.txt", model);
  } else {
    parse_cameras_binary(dir + "/cameras.bin", model);
    parse_images_binary(dir + "/images.bin", model);
    parse_points_binary(dir + "/points3D.bin", model);
  }
  return model;
}

Camera camera_from_sfm(const SfmModel& model, int image_id, int downsample) {
  auto it = model.images.find(image_id);
  if (it == model.images.end())
    throw ParseError("colmap: no image with id " + std::to_string(image_id));
  const SfmImage& img = it->second;
  const SfmCamera& sc = model.cameras.at(img.camera_id);

  Camera cam;
  cam.id = img.id;
  cam.width = sc.width / downsample;
  cam.height = sc.height / downsample;
  double f = 1.0 / downsample;
  cam.focal = Vec2<float>(float(sc.fx * f), float(sc.fy * f));
  cam.principal = Vec2<float>(float(sc.cx * f), float(sc.cy * f));
  cam.rot = quat_to_rot<double>(img.quat).cast<float>();
  cam.trans = img.trans.cast<float>();
  return cam;
}

}  // namespace fsgs
