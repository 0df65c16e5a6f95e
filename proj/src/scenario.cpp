#include "platoon/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "platoon/errors.hpp"

namespace platoon {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  fail(errc::parse_error, path + ": " + what);
}

const json& member(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) bad(path + "." + key, "missing");
  return *it;
}

void expect_object(const json& v, const std::string& path) {
  if (!v.is_object()) bad(path, "expected object");
}

int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad(path, "expected integer");
  return v.get<int>();
}

std::int64_t get_i64(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad(path, "expected integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_u64(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    bad(path, "expected nonnegative integer");
  return v.get<std::uint64_t>();
}

double get_num(const json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "expected number");
  return v.get<double>();
}

void check_known_keys(const json& obj, const std::string& path,
                      std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) bad(path + "." + it.key(), "unknown field");
  }
}

Topology parse_topology(const json& v) {
  expect_object(v, "topology");
  check_known_keys(v, "topology", {"kind", "n", "p", "weight", "edges"});
  Topology t;
  const json& kind = member(v, "topology", "kind");
  if (!kind.is_string()) bad("topology.kind", "expected string");
  const std::string k = kind.get<std::string>();
  if (k == "complete")
    t.kind = Topology::Kind::complete;
  else if (k == "path")
    t.kind = Topology::Kind::path;
  else if (k == "pcycle")
    t.kind = Topology::Kind::pcycle;
  else if (k == "custom")
    t.kind = Topology::Kind::custom;
  else
    bad("topology.kind", "must be one of complete|path|pcycle|custom");

  t.n = get_int(member(v, "topology", "n"), "topology.n");

  if (v.contains("p")) {
    if (t.kind != Topology::Kind::pcycle) bad("topology.p", "only valid for pcycle");
    t.p = get_int(v["p"], "topology.p");
  } else if (t.kind == Topology::Kind::pcycle) {
    bad("topology.p", "missing");
  }

  if (v.contains("weight")) {
    if (t.kind == Topology::Kind::custom)
      bad("topology.weight", "custom topologies take weights from edges");
    t.weight = get_num(v["weight"], "topology.weight");
  }

  if (v.contains("edges")) {
    if (t.kind != Topology::Kind::custom) bad("topology.edges", "only valid for custom");
    const json& edges = v["edges"];
    if (!edges.is_array()) bad("topology.edges", "expected array");
    for (size_t idx = 0; idx < edges.size(); ++idx) {
      const json& e = edges[idx];
      const std::string p = "topology.edges[" + std::to_string(idx) + "]";
      if (!e.is_array() || e.size() != 3) bad(p, "expected [i, j, weight]");
      std::array<double, 3> entry{};
      for (int c = 0; c < 3; ++c) {
        if (!e[c].is_number()) bad(p, "expected numeric entries");
        entry[c] = e[c].get<double>();
      }
      t.edges.push_back(entry);
    }
  } else if (t.kind == Topology::Kind::custom) {
    bad("topology.edges", "missing");
  }
  return t;
}

PlatoonParams parse_params(const json& v) {
  expect_object(v, "params");
  check_known_keys(v, "params", {"tau", "beta", "d", "g0"});
  PlatoonParams p;
  p.tau = get_num(member(v, "params", "tau"), "params.tau");
  p.beta = get_num(member(v, "params", "beta"), "params.beta");
  p.d = get_num(member(v, "params", "d"), "params.d");
  p.g = get_num(member(v, "params", "g0"), "params.g0");
  return p;
}

RiskSpec parse_risk(const json& v) {
  expect_object(v, "risk");
  check_known_keys(v, "risk", {"i", "delta_i", "c", "eps"});
  RiskSpec r;
  r.i = get_int(member(v, "risk", "i"), "risk.i");
  r.delta = get_num(member(v, "risk", "delta_i"), "risk.delta_i");
  r.c = get_num(member(v, "risk", "c"), "risk.c");
  r.eps = get_num(member(v, "risk", "eps"), "risk.eps");
  return r;
}

SimOverrides parse_sim(const json& v, int n) {
  expect_object(v, "sim");
  check_known_keys(v, "sim",
                   {"dt", "burn_in", "horizon", "replicates", "seed", "diffusion",
                    "diffusion_matrix"});
  SimOverrides s;
  if (v.contains("dt")) s.dt = get_num(v["dt"], "sim.dt");
  if (v.contains("burn_in")) s.burn_in = get_num(v["burn_in"], "sim.burn_in");
  if (v.contains("horizon")) s.horizon = get_num(v["horizon"], "sim.horizon");
  if (v.contains("replicates")) s.replicates = get_i64(v["replicates"], "sim.replicates");
  if (v.contains("seed")) s.seed = get_u64(v["seed"], "sim.seed");
  if (v.contains("diffusion")) s.diffusion = get_num(v["diffusion"], "sim.diffusion");
  if (v.contains("diffusion_matrix")) {
    const json& rows = v["diffusion_matrix"];
    if (!rows.is_array() || rows.size() != static_cast<size_t>(n))
      bad("sim.diffusion_matrix", "expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd E(n, n);
    for (int i = 0; i < n; ++i) {
      const json& row = rows[i];
      const std::string p = "sim.diffusion_matrix[" + std::to_string(i) + "]";
      if (!row.is_array() || row.size() != static_cast<size_t>(n))
        bad(p, "expected " + std::to_string(n) + " entries");
      for (int j = 0; j < n; ++j) {
        if (!row[j].is_number()) bad(p, "expected numeric entries");
        E(i, j) = row[j].get<double>();
      }
    }
    s.diffusion_matrix = std::move(E);
  }
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(errc::parse_error, e.what());
  }
  if (!doc.is_object()) bad("document", "expected object");
  check_known_keys(doc, "document", {"version", "topology", "params", "risk", "sim"});

  Scenario sc;
  sc.version = get_int(member(doc, "document", "version"), "version");
  if (sc.version != 1) bad("version", "unsupported schema version");
  sc.topology = parse_topology(member(doc, "document", "topology"));
  sc.params = parse_params(member(doc, "document", "params"));
  sc.risk = parse_risk(member(doc, "document", "risk"));
  if (doc.contains("sim")) sc.sim = parse_sim(doc["sim"], sc.topology.n);

  // labels are checked here so a bad scenario never reaches computation
  if (sc.topology.n < 2) bad("topology.n", "need at least 2 vehicles");
  if (sc.risk.i < 1 || sc.risk.i > sc.topology.n - 1)
    bad("risk.i", "pair label must lie in [1, n-1]");
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Graph build_topology(const Topology& t) {
  switch (t.kind) {
    case Topology::Kind::complete:
      return build_complete(t.n, t.weight);
    case Topology::Kind::path:
      return build_path(t.n, t.weight);
    case Topology::Kind::pcycle:
      return build_p_cycle(t.n, t.p, t.weight);
    case Topology::Kind::custom:
      return build_from_edges(t.n, t.edges);
  }
  fail(errc::invalid_parameter, "unknown topology kind");
}

SimConfig make_sim_config(const Scenario& sc, const SpectralData& spec) {
  SimConfig cfg = default_sim_config(spec, sc.params);
  if (sc.sim.dt) cfg.dt = *sc.sim.dt;
  if (sc.sim.burn_in) cfg.burn_in = *sc.sim.burn_in;
  if (sc.sim.horizon) cfg.horizon = *sc.sim.horizon;
  if (sc.sim.replicates) cfg.replicates = *sc.sim.replicates;
  if (sc.sim.seed) cfg.seed = *sc.sim.seed;
  if (sc.sim.diffusion) cfg.g = *sc.sim.diffusion;
  if (sc.sim.diffusion_matrix) cfg.E = *sc.sim.diffusion_matrix;
  validate_sim_config(cfg, sc.params.tau, sc.topology.n);
  return cfg;
}

}  // namespace platoon
