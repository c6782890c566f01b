#include "auxcell/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "auxcell/errors.hpp"

namespace auxcell {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

JobConfig JobConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

JobConfig JobConfig::from_string(const std::string& text) {
  JobConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + " has an empty key or value");
    if (!cfg.kv_.emplace(key, value).second)
      throw ConfigError("duplicate config key '" + key + "'");
  }
  return cfg;
}

void JobConfig::validate(const std::vector<std::string>& allowedKeys) const {
  for (const auto& [key, value] : kv_) {
    bool ok = false;
    for (const auto& a : allowedKeys)
      if (a == key) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string JobConfig::str(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::string JobConfig::str(const std::string& key, const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double JobConfig::num(const std::string& key) const {
  const std::string v = str(key);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: '" + v + "'");
  }
}

double JobConfig::num(const std::string& key, double fallback) const {
  return has(key) ? num(key) : fallback;
}

int JobConfig::integer(const std::string& key) const {
  const double d = num(key);
  const int i = int(std::llround(d));
  if (double(i) != d) throw ConfigError("config key '" + key + "' is not an integer");
  return i;
}

int JobConfig::integer(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool JobConfig::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: '" + v + "'");
}

DensityField DensityField::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open density field '" + path + "'");
  std::string magic;
  std::getline(in, magic);
  if (trim(magic) != "auxcell-density-field-v1")
    throw ConfigError("'" + path + "' is not a density field file");

  DensityField df;
  std::string key;
  int nele = -1;
  for (int i = 0; i < 6; ++i) {
    in >> key;
    if (key == "shape") {
      std::string v;
      in >> v;
      df.shape = parse_shape(v);
    } else if (key == "resolution") {
      in >> df.resolution;
    } else if (key == "cell_size") {
      in >> df.cellSize;
    } else if (key == "angle_deg") {
      in >> df.angleDeg;
    } else if (key == "fields") {
      in >> df.fields;
    } else if (key == "n_ele") {
      in >> nele;
    } else {
      throw ConfigError("unexpected density-field header key '" + key + "'");
    }
  }
  if (nele <= 0 || df.resolution < 2 || (df.fields != 1 && df.fields != 2))
    throw ConfigError("malformed density-field header in '" + path + "'");

  df.rho1.resize(nele);
  for (int i = 0; i < nele; ++i) {
    if (!(in >> df.rho1[i])) throw ConfigError("truncated density field '" + path + "'");
    if (df.rho1[i] < 0.0 || df.rho1[i] > 1.0)
      throw ConfigError("density value out of [0,1] in '" + path + "'");
  }
  if (df.fields == 2) {
    df.rho2.resize(nele);
    for (int i = 0; i < nele; ++i) {
      if (!(in >> df.rho2[i])) throw ConfigError("truncated density field '" + path + "'");
      if (df.rho2[i] < 0.0 || df.rho2[i] > 1.0)
        throw ConfigError("density value out of [0,1] in '" + path + "'");
    }
  }
  return df;
}

void DensityField::save(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  std::fprintf(f, "auxcell-density-field-v1\n");
  std::fprintf(f, "shape %s\n", shape_name(shape).c_str());
  std::fprintf(f, "resolution %d\n", resolution);
  std::fprintf(f, "cell_size %.17g\n", cellSize);
  std::fprintf(f, "angle_deg %.17g\n", angleDeg);
  std::fprintf(f, "fields %d\n", fields);
  std::fprintf(f, "n_ele %d\n", int(rho1.size()));
  for (int i = 0; i < rho1.size(); ++i) std::fprintf(f, "%.17g\n", rho1[i]);
  if (fields == 2)
    for (int i = 0; i < rho2.size(); ++i) std::fprintf(f, "%.17g\n", rho2[i]);
  std::fclose(f);
}

RveMesh DensityField::build_mesh_from_header() const {
  RveMesh mesh = build_mesh(shape, resolution, cellSize, angleDeg);
  if (mesh.n_ele() != rho1.size())
    throw ConfigError("density field element count does not match its header mesh");
  return mesh;
}

PhaseSet phases_from_config(const JobConfig& cfg, bool twoMaterial) {
  PhaseSet p;
  p.voidPhase = {cfg.num("void.E", 1e-6), cfg.num("void.nu", 0.2), 0.0};
  p.mat1 = {cfg.num("mat1.E", 100.0), cfg.num("mat1.nu", 0.49),
            cfg.num("mat1.omega", 0.0)};
  p.twoMaterial = twoMaterial;
  if (twoMaterial)
    p.mat2 = {cfg.num("mat2.E"), cfg.num("mat2.nu", 0.49), cfg.num("mat2.omega")};
  if (p.mat1.nu0 >= 0.5 || p.voidPhase.nu0 >= 0.5 || (twoMaterial && p.mat2.nu0 >= 0.5))
    throw ConfigError("phase Poisson ratios must be below 0.5");
  return p;
}

const std::vector<std::string>& phase_config_keys() {
  static const std::vector<std::string> keys = {
      "void.E", "void.nu", "mat1.E", "mat1.nu", "mat1.omega",
      "mat2.E", "mat2.nu", "mat2.omega"};
  return keys;
}

}  // namespace auxcell
