#pragma once

// Command-line front end: shoot | conjugates | index | verify | sweep | selftest.
// Exit codes: 0 success, 1 failed verification, 2 configuration error,
// 3 integration failure.

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lgeom/lindex.hpp"

namespace lgeom {

struct RunConfig {
  FlowBackground background = FlowBackground::euclidean(2);
  ChartPoint p;
  Vec v;
  double tau_bar = 1.0;
  double tol = 1e-10;
  std::vector<int> meshes{64, 128};
  std::string output_dir = "out";
  unsigned long long seed = 1;
  std::optional<double> tau_epsilon;
  int samples = 201;  // rows in the path CSV
  bool corrupt_curvature_sign = false;
};

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  int count = 1;
};

struct SweepConfig {
  RunConfig base;
  std::vector<GridAxis> axes;  // one per component of v
  int workers = 1;
};

/// Both throw Error(InvalidConfig) with a message naming the offending field.
RunConfig parse_run_config(const nlohmann::json& j);
SweepConfig parse_sweep_config(const nlohmann::json& j);
std::vector<int> parse_mesh_list(const std::string& text);

/// Grid point `index` (row-major, last axis fastest).
Vec sweep_point(const SweepConfig& cfg, long index);
long sweep_size(const SweepConfig& cfg);

int cmd_shoot(const RunConfig& cfg);
int cmd_conjugates(const RunConfig& cfg);
int cmd_index(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_sweep(const SweepConfig& cfg);
int cmd_selftest();

/// Full argument handling; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace lgeom
