#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "viflow/expr.hpp"
#include "viflow/patch.hpp"

namespace viflow {

/// Raw section/key-value view of a config file; the typed config interprets
/// it and serialization reproduces it.
struct RawConfig {
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> kv;
  };
  std::vector<Section> sections;

  std::string serialize() const;
  const Section* find_section(const std::string& name) const;
  const std::string* find(const std::string& section, const std::string& key) const;
  bool operator==(const RawConfig& other) const;
};

RawConfig parse_raw_config(std::istream& in, const std::string& stream_name);

struct SolverConfig {
  std::string scheme = "oseen";  // oseen | picard | regularized-path
  double tol = 1e-9;
  int max_outer = 100;
  double eps0 = -1;  // < 0: automatic
  double eps_factor = 0.1;
  double eps_cutoff = 1e-8;  // relative to eps0
};

struct OutputConfig {
  std::string dir = "out";
  bool vtk = true, csv = true, report = true;
  bool export_matrices = false;
};

struct MmsConfig {
  std::string case_name;
  int levels = 3;
};

struct ProblemConfig {
  RawConfig raw;
  std::string mesh_path;  // resolved against the config directory
  std::string equation = "stokes";
  double nu = 1.0;
  Expr fx, fy;
  std::vector<BoundaryPatch> patches;
  SolverConfig solver;
  OutputConfig output;
  MmsConfig mms;
  std::uint64_t hash = 0;

  VectorField body_force() const;
};

ProblemConfig load_config(const std::string& path);
ProblemConfig parse_config(std::istream& in, const std::string& stream_name,
                           const std::string& base_dir);

std::uint64_t fnv1a(const std::string& data);

}  // namespace viflow
