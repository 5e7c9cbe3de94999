#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmorph/spin.hpp"
#include "fmorph/verifier.hpp"

namespace fmorph {

/// Expected-verdict block attached to a map in a problem document.
struct ExpectedBlock {
  std::string map_name;
  std::optional<bool> is_f_harmonic, is_hwc, is_f_harmonic_morphism;
};

/// Problem document: charts, maps, defaults, optional expectations.
struct ProblemDoc {
  std::vector<Chart> charts;
  std::vector<MapSpec> maps;
  std::vector<ExpectedBlock> expected;
  SamplerConfig defaults;
};

namespace detail {

inline Expr parse_field(const nlohmann::json& j, const std::string& what) {
  if (!j.is_string()) throw Error(ErrorCode::SchemaError, what + " must be an expression string");
  try {
    return parse(j.get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, what + ": " + e.what());
  }
}

inline Chart chart_from_json(const nlohmann::json& j) {
  Chart c;
  if (!j.contains("name") || !j.contains("coords") || !j.contains("metric"))
    throw Error(ErrorCode::SchemaError, "chart block needs name, coords, metric");
  c.name = j.at("name").get<std::string>();
  c.coords = j.at("coords").get<std::vector<std::string>>();
  const int m = c.dim();
  const auto& metric = j.at("metric");
  if (!metric.is_array() || static_cast<int>(metric.size()) != m)
    throw Error(ErrorCode::SchemaError, "chart '" + c.name + "': metric must be " +
                                            std::to_string(m) + "x" + std::to_string(m));
  for (const auto& row : metric) {
    if (!row.is_array() || static_cast<int>(row.size()) != m)
      throw Error(ErrorCode::SchemaError, "chart '" + c.name + "': ragged metric row");
    std::vector<Expr> r;
    for (const auto& entry : row) r.push_back(parse_field(entry, "metric entry of '" + c.name + "'"));
    c.metric.push_back(std::move(r));
  }
  if (j.contains("domain")) c.domain = parse_field(j.at("domain"), "domain of '" + c.name + "'");
  c.box_lo = Eigen::VectorXd::Constant(m, -1.0);
  c.box_hi = Eigen::VectorXd::Constant(m, 1.0);
  if (j.contains("box")) {
    const auto& box = j.at("box");
    if (!box.is_array() || box.size() != 2 || static_cast<int>(box[0].size()) != m ||
        static_cast<int>(box[1].size()) != m)
      throw Error(ErrorCode::SchemaError, "chart '" + c.name + "': box must be [[lo...],[hi...]]");
    for (int i = 0; i < m; ++i) {
      c.box_lo(i) = box[0][i].get<double>();
      c.box_hi(i) = box[1][i].get<double>();
    }
  }
  if (j.contains("description")) c.description = j.at("description").get<std::string>();
  return c;
}

inline const Chart& find_chart(const std::vector<Chart>& charts, const std::string& name) {
  for (const auto& c : charts)
    if (c.name == name) return c;
  throw Error(ErrorCode::SchemaError, "map references unknown chart '" + name + "'");
}

}  // namespace detail

inline ProblemDoc problem_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != std::string("fmorph/1"))
    throw Error(ErrorCode::SchemaError, "problem document must declare \"schema\": \"fmorph/1\"");
  ProblemDoc doc;
  for (const auto& cj : j.value("charts", nlohmann::json::array()))
    doc.charts.push_back(detail::chart_from_json(cj));
  for (const auto& mj : j.value("maps", nlohmann::json::array())) {
    MapSpec m;
    m.name = mj.at("name").get<std::string>();
    m.source = detail::find_chart(doc.charts, mj.at("source").get<std::string>());
    m.target = detail::find_chart(doc.charts, mj.at("target").get<std::string>());
    for (const auto& comp : mj.at("components"))
      m.components.push_back(detail::parse_field(comp, "component of '" + m.name + "'"));
    if (static_cast<int>(m.components.size()) != m.n())
      throw Error(ErrorCode::SchemaError,
                  "map '" + m.name + "' needs " + std::to_string(m.n()) + " components");
    for (const auto& comp : m.components)
      for (const auto& v : free_vars(comp))
        if (std::find(m.source.coords.begin(), m.source.coords.end(), v) == m.source.coords.end())
          throw Error(ErrorCode::SchemaError,
                      "map '" + m.name + "': component uses unknown variable '" + v + "'");
    if (mj.contains("weight")) {
      m.weight = detail::parse_field(mj.at("weight"), "weight of '" + m.name + "'");
      for (const auto& v : free_vars(*m.weight))
        if (std::find(m.source.coords.begin(), m.source.coords.end(), v) == m.source.coords.end())
          throw Error(ErrorCode::SchemaError,
                      "map '" + m.name + "': weight uses unknown variable '" + v + "'");
    }
    doc.maps.push_back(std::move(m));
  }
  if (j.contains("defaults")) {
    const auto& d = j.at("defaults");
    doc.defaults.count = d.value("samples", doc.defaults.count);
    doc.defaults.seed = d.value("seed", doc.defaults.seed);
    doc.defaults.tol_resid = d.value("tol_resid", doc.defaults.tol_resid);
    doc.defaults.tol_hwc = d.value("tol_hwc", doc.defaults.tol_hwc);
  }
  for (const auto& ej : j.value("expected", nlohmann::json::array())) {
    ExpectedBlock b;
    b.map_name = ej.at("map").get<std::string>();
    if (ej.contains("is_f_harmonic")) b.is_f_harmonic = ej.at("is_f_harmonic").get<bool>();
    if (ej.contains("is_hwc")) b.is_hwc = ej.at("is_hwc").get<bool>();
    if (ej.contains("is_f_harmonic_morphism"))
      b.is_f_harmonic_morphism = ej.at("is_f_harmonic_morphism").get<bool>();
    bool found = false;
    for (const auto& m : doc.maps) found = found || m.name == b.map_name;
    if (!found)
      throw Error(ErrorCode::SchemaError, "expected block references unknown map '" + b.map_name + "'");
    doc.expected.push_back(std::move(b));
  }
  return doc;
}

inline ProblemDoc load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open problem file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what(), e.byte);
  }
  return problem_from_json(j);
}

// --- Spin configuration -------------------------------------------------------

inline SpinConfig spin_config_from_json(const nlohmann::json& j) {
  SpinConfig cfg;
  if (!j.contains("grid") || !j.contains("f"))
    throw Error(ErrorCode::SchemaError, "spin config needs grid and f");
  const auto& g = j.at("grid");
  cfg.nx = g.at("nx").get<int>();
  cfg.hx = g.value("hx", 1.0);
  cfg.ny = g.value("ny", 1);
  cfg.hy = g.value("hy", cfg.hx);
  if (cfg.nx < 3 || cfg.ny < 1)
    throw Error(ErrorCode::SchemaError, "grid must have nx >= 3 and ny >= 1");
  cfg.domain = j.value("domain", std::string("square"));
  if (cfg.domain != "square" && cfg.domain != "disk")
    throw Error(ErrorCode::SchemaError, "domain must be \"square\" or \"disk\"");
  cfg.f_expr = detail::parse_field(j.at("f"), "coupling f");
  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    const std::string kind = b.value("type", std::string("dirichlet"));
    if (kind == "dirichlet")
      cfg.boundary = BoundaryKind::Dirichlet;
    else if (kind == "periodic")
      cfg.boundary = BoundaryKind::Periodic;
    else
      throw Error(ErrorCode::SchemaError, "boundary type must be dirichlet or periodic");
    if (b.contains("value")) {
      auto v = b.at("value").get<std::vector<double>>();
      if (v.size() != 3) throw Error(ErrorCode::SchemaError, "boundary value must have 3 entries");
      cfg.boundary_value = Eigen::Vector3d(v[0], v[1], v[2]);
    }
  }
  if (j.contains("init")) {
    const auto& init = j.at("init");
    if (init.is_string()) {
      cfg.init = init.get<std::string>();
      if (cfg.init != "random" && cfg.init != "constant")
        throw Error(ErrorCode::SchemaError, "init must be random, constant, or an expr triple");
    } else if (init.is_array() && init.size() == 3) {
      for (const auto& e : init) cfg.init_exprs.push_back(detail::parse_field(e, "init"));
    } else {
      throw Error(ErrorCode::SchemaError, "init must be random, constant, or an expr triple");
    }
  }
  cfg.seed = j.value("seed", 1);
  return cfg;
}

inline SpinConfig load_spin_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open spin config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what(), e.byte);
  }
  return spin_config_from_json(j);
}

inline std::string trace_to_csv(const SolveTrace& trace) {
  std::string out = "iter,energy,residual,step\n";
  for (const auto& row : trace) {
    out += std::to_string(row.iteration);
    out += ',';
    out += detail::format_double(row.energy);
    out += ',';
    out += detail::format_double(row.max_residual);
    out += ',';
    out += detail::format_double(row.step);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json spin_field_to_json(const SpinField& fld) {
  nlohmann::ordered_json j;
  j["schema"] = "fmorph-spinfield/1";
  j["grid"] = {{"nx", fld.nx}, {"ny", fld.ny}, {"hx", fld.hx}, {"hy", fld.hy}};
  j["boundary"] = fld.boundary == BoundaryKind::Dirichlet ? "dirichlet" : "periodic";
  auto u = nlohmann::ordered_json::array();
  auto f = nlohmann::ordered_json::array();
  auto state = nlohmann::ordered_json::array();
  for (int i = 0; i < fld.size(); ++i) {
    u.push_back({fld.u[i].x(), fld.u[i].y(), fld.u[i].z()});
    f.push_back(fld.f[i]);
    state.push_back(static_cast<int>(fld.state[i]));
  }
  j["u"] = std::move(u);
  j["f"] = std::move(f);
  j["state"] = std::move(state);
  return j;
}

}  // namespace fmorph
