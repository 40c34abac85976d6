#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fsgs/config.hpp"

namespace fsgs {

void TrainingConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda4 < 0)
    throw ConfigError("config: loss weights must be non-negative");
  if (densify_interval <= 0 || sh_upgrade_interval <= 0 || checkpoint_interval <= 0)
    throw ConfigError("config: intervals must be positive");
  if (k_neighbors <= 0) throw ConfigError("config: k_neighbors must be positive");
  if (sh_degree < 0 || sh_degree > kShDegreeMax)
    throw ConfigError("config: sh_degree must be in [0, 3]");
  if (total_iters < 0) throw ConfigError("config: total_iters must be non-negative");
}

namespace {

template <typename T> T parse_num(const std::string& v, const std::string& key) {
  std::istringstream ss(v);
  T out;
  if (!(ss >> out)) throw ConfigError("config: bad value '" + v + "' for " + key);
  std::string rest;
  if (ss >> rest) throw ConfigError("config: trailing garbage in value for " + key);
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean '" + v + "' for " + key);
}

std::vector<long> parse_list(const std::string& v, const std::string& key) {
  std::vector<long> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ','))
    out.push_back(parse_num<long>(item, key));
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

TrainingConfig parse_config_text(const std::string& text, const std::string& origin) {
  TrainingConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"lambda1", [&](auto& v, auto& k) { cfg.lambda1 = parse_num<float>(v, k); }},
      {"lambda2", [&](auto& v, auto& k) { cfg.lambda2 = parse_num<float>(v, k); }},
      {"lambda3", [&](auto& v, auto& k) { cfg.lambda3 = parse_num<float>(v, k); }},
      {"lambda4", [&](auto& v, auto& k) { cfg.lambda4 = parse_num<float>(v, k); }},
      {"k_neighbors", [&](auto& v, auto& k) { cfg.k_neighbors = parse_num<int>(v, k); }},
      {"t_prox", [&](auto& v, auto& k) { cfg.t_prox = parse_num<float>(v, k); }},
      {"t_pos", [&](auto& v, auto& k) { cfg.t_pos = parse_num<float>(v, k); }},
      {"total_iters", [&](auto& v, auto& k) { cfg.total_iters = parse_num<long>(v, k); }},
      {"densify_from", [&](auto& v, auto& k) { cfg.densify_from = parse_num<long>(v, k); }},
      {"densify_interval",
       [&](auto& v, auto& k) { cfg.densify_interval = parse_num<long>(v, k); }},
      {"pseudo_from", [&](auto& v, auto& k) { cfg.pseudo_from = parse_num<long>(v, k); }},
      {"opacity_reset_iters",
       [&](auto& v, auto& k) { cfg.opacity_reset_iters = parse_list(v, k); }},
      {"opacity_reset_value",
       [&](auto& v, auto& k) { cfg.opacity_reset_value = parse_num<float>(v, k); }},
      {"sh_upgrade_interval",
       [&](auto& v, auto& k) { cfg.sh_upgrade_interval = parse_num<long>(v, k); }},
      {"sh_degree", [&](auto& v, auto& k) { cfg.sh_degree = parse_num<int>(v, k); }},
      {"checkpoint_interval",
       [&](auto& v, auto& k) { cfg.checkpoint_interval = parse_num<long>(v, k); }},
      {"lr_position", [&](auto& v, auto& k) { cfg.lr.position = parse_num<float>(v, k); }},
      {"lr_position_final",
       [&](auto& v, auto& k) { cfg.lr_position_final = parse_num<float>(v, k); }},
      {"lr_sh", [&](auto& v, auto& k) { cfg.lr.sh = parse_num<float>(v, k); }},
      {"lr_opacity", [&](auto& v, auto& k) { cfg.lr.opacity = parse_num<float>(v, k); }},
      {"lr_scale", [&](auto& v, auto& k) { cfg.lr.scale = parse_num<float>(v, k); }},
      {"lr_rotation", [&](auto& v, auto& k) { cfg.lr.rotation = parse_num<float>(v, k); }},
      {"pseudo_noise_delta",
       [&](auto& v, auto& k) { cfg.pseudo_noise_delta = parse_num<float>(v, k); }},
      {"prune_min_opacity",
       [&](auto& v, auto& k) { cfg.prune_min_opacity = parse_num<float>(v, k); }},
      {"prune_max_scale_fraction",
       [&](auto& v, auto& k) { cfg.prune_max_scale_fraction = parse_num<float>(v, k); }},
      {"densify_small_fraction",
       [&](auto& v, auto& k) { cfg.densify_small_fraction = parse_num<float>(v, k); }},
      {"split_factor", [&](auto& v, auto& k) { cfg.split_factor = parse_num<float>(v, k); }},
      {"depth_alpha_threshold",
       [&](auto& v, auto& k) { cfg.depth_alpha_threshold = parse_num<float>(v, k); }},
      {"depth_correlate_disparity",
       [&](auto& v, auto& k) { cfg.depth_correlate_disparity = parse_bool(v, k); }},
      {"white_background",
       [&](auto& v, auto& k) { cfg.white_background = parse_bool(v, k); }},
      {"seed", [&](auto& v, auto& k) { cfg.seed = parse_num<unsigned>(v, k); }},
      {"threads", [&](auto& v, auto& k) { cfg.threads = parse_num<int>(v, k); }},
  };

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(value, key);
  }
  cfg.validate();
  return cfg;
}

TrainingConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace fsgs
