#pragma once

#include <optional>
#include <string>
#include <vector>

#include "platoon/graph.hpp"
#include "platoon/simulate.hpp"
#include "platoon/statistics.hpp"

namespace platoon {

struct Topology {
  enum class Kind { complete, path, pcycle, custom };
  Kind kind = Kind::complete;
  int n = 0;
  int p = 1;           // pcycle only
  double weight = 1;   // complete/path/pcycle edge weight
  std::vector<std::array<double, 3>> edges;  // custom only; 1-based {i, j, k}
};

struct RiskSpec {
  int i = 0;          // 1-based gap index under stress
  double delta = 3;   // threshold depth in sigma_i units
  double c = 1;       // threshold scale
  double eps = 0;     // ambiguity radius
};

struct SimOverrides {
  std::optional<double> dt;
  std::optional<double> burn_in;
  std::optional<double> horizon;
  std::optional<std::int64_t> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<double> diffusion;
  std::optional<Eigen::MatrixXd> diffusion_matrix;
};

struct Scenario {
  int version = 1;
  Topology topology;
  PlatoonParams params;
  RiskSpec risk;
  SimOverrides sim;
};

// Parse a scenario JSON document. Errors carry the offending path, e.g.
// "topology.n: expected integer".
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

Graph build_topology(const Topology& t);

// Defaults from the spectrum/params, then apply any overrides, then validate.
SimConfig make_sim_config(const Scenario& sc, const SpectralData& spec);

}  // namespace platoon
