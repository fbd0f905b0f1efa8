#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "g4v/errors.hpp"
#include "g4v/io.hpp"
#include "g4v/pressure.hpp"
#include "g4v/spin.hpp"

namespace g4v::catalog {

/// Everything the CLI needs to assemble a spin system from the shipped data
/// directory: the per-defect pressure tables and the isotope hyperfine sets.
struct IsotopeEntry {
  std::string defect;
  double nuclear_spin = 0.0;
  spin::EffectiveHF ground, excited;
  std::optional<spin::QuadrupoleParams> quad;
};

struct Catalog {
  std::string dir;
  std::map<std::string, pressure::DefectParamTable> defects;  // SiV, GeV, SnV, PbV
  std::map<std::string, IsotopeEntry> isotopes;               // 29Si, ...
  std::map<std::string, double> vibronic_q;
};

namespace detail {
inline spin::EffectiveHF parse_hf(const nlohmann::json& j, const std::string& where) {
  for (const char* k : {"a1_mhz", "a2_mhz", "a_par_mhz", "a_perp_mhz"})
    if (!j.contains(k)) throw SchemaError(where + ": missing '" + std::string(k) + "'");
  spin::EffectiveHF hf;
  hf.a1 = j["a1_mhz"];
  hf.a2 = j["a2_mhz"];
  hf.a_par = j["a_par_mhz"];
  hf.a_perp = j["a_perp_mhz"];
  return hf;
}
}  // namespace detail

inline Catalog load_catalog(const std::string& dir) {
  Catalog cat;
  cat.dir = dir;
  for (const char* d : {"SiV", "GeV", "SnV", "PbV"}) {
    std::string stem = d;
    std::transform(stem.begin(), stem.end(), stem.begin(), ::tolower);
    cat.defects.emplace(d, pressure::load_table(dir + "/" + stem + ".json"));
  }
  const std::string path = dir + "/hyperfine.json";
  std::ifstream in(path);
  if (!in) throw SchemaError("load_catalog: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path + ": not valid JSON: " + e.what());
  }
  if (doc.value("schema", "") != "g4v-hyperfine-params/1")
    throw SchemaError(path + ": unsupported schema tag");
  for (const auto& [name, j] : doc.at("isotopes").items()) {
    IsotopeEntry e;
    e.defect = j.value("defect", "");
    e.nuclear_spin = j.value("nuclear_spin", 0.0);
    e.ground = detail::parse_hf(j.at("ground"), path + ":" + name + ".ground");
    e.excited = detail::parse_hf(j.at("excited"), path + ":" + name + ".excited");
    if (j.contains("quadrupole")) {
      spin::QuadrupoleParams q;
      q.q_static = j["quadrupole"].value("q_mhz", 0.0);
      q.q1 = j["quadrupole"].value("q1_mhz", 0.0);
      q.q2 = j["quadrupole"].value("q2_mhz", 0.0);
      q.nuclear_moment_m2 = j["quadrupole"].value("nuclear_moment_m2", 0.0);
      e.quad = q;
    }
    cat.isotopes.emplace(name, std::move(e));
  }
  if (doc.contains("vibronic_q"))
    for (const auto& [k, v] : doc["vibronic_q"].items()) cat.vibronic_q[k] = v.get<double>();
  return cat;
}

/// Spin system for (defect, state, pressure, isotope, field). The hyperfine
/// parameters are the zero-pressure set (no pressure series is tabulated for
/// them); lambda comes from the pressure table.
inline spin::SpinSystemSpec make_spec(const Catalog& cat, const std::string& defect,
                                      const std::string& state, double pressure_gpa,
                                      const std::string& isotope, MagneticField b,
                                      pressure::InterpMode mode = pressure::InterpMode::quadratic) {
  auto dit = cat.defects.find(defect);
  if (dit == cat.defects.end())
    throw std::invalid_argument("unknown defect '" + defect + "'");
  const auto& series = (state == "excited") ? dit->second.excited : dit->second.ground;
  if (state != "ground" && state != "excited")
    throw std::invalid_argument("state must be ground|excited");
  auto point = pressure::interpolate_state(series, pressure_gpa, mode);

  spin::SpinSystemSpec spec;
  spec.lambda_eff_ghz = point.lambda_ghz;
  spec.b_field = b;
  if (!isotope.empty() && isotope != "none") {
    auto iit = cat.isotopes.find(isotope);
    if (iit == cat.isotopes.end())
      throw std::invalid_argument("unknown isotope '" + isotope + "'");
    if (iit->second.defect != defect)
      throw std::invalid_argument("isotope '" + isotope + "' does not belong to " + defect);
    spec.nuclear_spin = iit->second.nuclear_spin;
    spec.hf = (state == "excited") ? iit->second.excited : iit->second.ground;
    if (iit->second.quad) spec.quad = iit->second.quad;
  }
  return spec;
}

}  // namespace g4v::catalog
