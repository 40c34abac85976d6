#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "fsgs/io.hpp"

namespace fsgs {

namespace {

std::vector<std::string> splat_property_names() {
  std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz",
                                    "f_dc_0", "f_dc_1", "f_dc_2"};
  for (int i = 0; i < 45; ++i) names.push_back("f_rest_" + std::to_string(i));
  names.push_back("opacity");
  for (int i = 0; i < 3; ++i) names.push_back("scale_" + std::to_string(i));
  for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
  return names;
}

}  // namespace

void export_ply(const GaussianSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_ply: cannot open " + path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << set.size() << "\n";
  for (const auto& name : splat_property_names())
    out << "property float " << name << "\n";
  out << "end_header\n";

  std::vector<float> row(62);
  for (std::size_t i = 0; i < set.size(); ++i) {
    float* p = row.data();
    for (int k = 0; k < 3; ++k) *p++ = set.mu[i][k];
    for (int k = 0; k < 3; ++k) *p++ = 0.f;  // normals, unused
    for (int c = 0; c < 3; ++c) *p++ = set.sh[i * kShCoeffCount][c];
    // Higher-order coefficients, channel-major.
    for (int c = 0; c < 3; ++c)
      for (int k = 1; k < kShCoeffCount; ++k) *p++ = set.sh[i * kShCoeffCount + k][c];
    *p++ = set.opacity_logit[i];
    for (int k = 0; k < 3; ++k) *p++ = set.log_scale[i][k];
    for (int k = 0; k < 4; ++k) *p++ = set.rotation[i][k];
    out.write(reinterpret_cast<const char*>(row.data()), 62 * 4);
  }
  if (!out) throw IoError("export_ply: write failed for " + path);
}

GaussianSet import_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("import_ply: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw IoError("import_ply: not a PLY file");

  std::size_t count = 0;
  bool in_vertex = false;
  std::map<std::string, int> offsets;  // property name -> float index within a row
  int nprops = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "binary_little_endian")
        throw IoError("import_ply: unsupported format " + fmt);
    } else if (tok == "element") {
      std::string name;
      ss >> name >> count;
      in_vertex = name == "vertex";
      if (!in_vertex && count > 0)
        throw IoError("import_ply: unexpected element " + name);
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      if (type != "float")
        throw IoError("import_ply: non-float property " + name);
      offsets[name] = nprops++;
    } else if (tok == "end_header") {
      break;
    }
  }
  for (const auto& name : splat_property_names())
    if (name.rfind("n", 0) != 0 && !offsets.count(name))
      throw IoError("import_ply: missing property " + name);

  GaussianSet set;
  set.resize(count);
  std::vector<float> row(nprops);
  auto get = [&](const char* name) { return row[offsets.at(name)]; };
  for (std::size_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(row.data()), std::streamsize(nprops) * 4))
      throw IoError("import_ply: vertex count mismatch in " + path);
    set.mu[i] = Vec3<float>(get("x"), get("y"), get("z"));
    for (int c = 0; c < 3; ++c)
      set.sh[i * kShCoeffCount][c] = row[offsets.at("f_dc_" + std::to_string(c))];
    for (int c = 0; c < 3; ++c)
      for (int k = 1; k < kShCoeffCount; ++k)
        set.sh[i * kShCoeffCount + k][c] =
            row[offsets.at("f_rest_" + std::to_string(c * 15 + k - 1))];
    set.opacity_logit[i] = get("opacity");
    set.log_scale[i] = Vec3<float>(get("scale_0"), get("scale_1"), get("scale_2"));
    set.rotation[i] = Vec4<float>(get("rot_0"), get("rot_1"), get("rot_2"), get("rot_3"));
  }
  return set;
}

}  // namespace fsgs
