#pragma once

#include <map>
#include <string>
#include <vector>

#include "auxcell/material.hpp"
#include "auxcell/mesh.hpp"

namespace auxcell {

// Flat key = value job configuration ('#' starts a comment). Every command
// validates its key set before any compute; unknown keys are rejected.
class JobConfig {
 public:
  static JobConfig load(const std::string& path);
  static JobConfig from_string(const std::string& text);

  void validate(const std::vector<std::string>& allowedKeys) const;

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  bool flag(const std::string& key, bool fallback) const;

 private:
  std::map<std::string, std::string> kv_;
};

// Density-field container persisted as a line-oriented text file. The
// header pins the mesh (shape, resolution, cell size, lattice vectors) and
// the field count; values are row-major per element, printed losslessly.
struct DensityField {
  CellShape shape = CellShape::Square;
  int resolution = 0;
  double cellSize = 1.0;
  double angleDeg = 90.0;
  int fields = 1;
  VecX rho1, rho2;

  static DensityField load(const std::string& path);
  void save(const std::string& path) const;
  RveMesh build_mesh_from_header() const;
};

// Shared material-phase keys of the job configuration.
PhaseSet phases_from_config(const JobConfig& cfg, bool twoMaterial);

const std::vector<std::string>& phase_config_keys();

}  // namespace auxcell
