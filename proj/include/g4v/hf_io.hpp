#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "g4v/errors.hpp"
#include "g4v/hf_decompose.hpp"
#include "g4v/io.hpp"

namespace g4v::hf {

struct DopantSite {
  std::string label;
  double nuclear_spin = 0.0;
  HyperfineTensor3 tensor;
};

struct CarbonPairSite {
  std::string label;
  int gauge = 0;
  HyperfineTensor3 pair_tensor, unique_tensor;
};

struct TensorDocument {
  std::string defect, state;
  double q = 1.0;
  std::optional<DopantSite> dopant;
  std::vector<CarbonPairSite> carbons;
};

namespace detail {
using nlohmann::json;

inline HyperfineTensor3 parse_tensor(const json& j, const std::string& where,
                                     const std::string& site) {
  if (j.is_array()) {
    // row-major 3x3; symmetry is checked downstream, so an asymmetric matrix
    // fails with a frame/symmetry error rather than a schema error
    if (j.size() != 9) throw SchemaError(where + ": tensor array must have 9 entries");
    HyperfineTensor3 t;
    for (int i = 0; i < 9; ++i) {
      if (!j[i].is_number()) throw SchemaError(where + ": tensor entries must be numbers");
      t.m(i / 3, i % 3) = j[i].get<double>();
    }
    t.site = site;
    t.require_symmetric();
    return t;
  }
  for (const char* k : {"xx", "yy", "zz", "xy", "xz", "yz"})
    if (!j.contains(k) || !j[k].is_number())
      throw SchemaError(where + ": tensor needs numeric component '" + std::string(k) + "'");
  return tensor_from_components(j["xx"], j["yy"], j["zz"], j["xy"], j["xz"], j["yz"], site);
}
}  // namespace detail

inline TensorDocument load_tensor_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("load_tensor_document: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path + ": not valid JSON: " + e.what());
  }
  auto str = [&](const char* k) {
    if (!doc.contains(k) || !doc[k].is_string())
      throw SchemaError(path + ": missing string field '" + std::string(k) + "'");
    return doc[k].get<std::string>();
  };
  if (str("schema") != "g4v-hf-tensors/1") throw SchemaError(path + ": unsupported schema tag");
  if (str("frame") != "cubic_crystal")
    throw SchemaError(path + ": only cubic_crystal input frames are supported");

  TensorDocument out;
  out.defect = str("defect");
  out.state = str("state");
  if (!doc.contains("q") || !doc["q"].is_number()) throw SchemaError(path + ": missing 'q'");
  out.q = doc["q"].get<double>();
  if (!(out.q > 0.0 && out.q <= 1.0)) throw SchemaError(path + ": q must be in (0,1]");
  if (!doc.contains("sites") || !doc["sites"].is_array() || doc["sites"].empty())
    throw SchemaError(path + ": 'sites' must be a non-empty array");

  int idx = 0;
  for (const auto& s : doc["sites"]) {
    const std::string where = path + ".sites[" + std::to_string(idx++) + "]";
    const std::string kind = s.value("kind", "");
    const std::string label = s.value("label", "");
    if (kind == "dopant") {
      if (out.dopant) throw SchemaError(where + ": more than one dopant site");
      DopantSite d;
      d.label = label;
      d.nuclear_spin = s.value("nuclear_spin", 0.0);
      d.tensor = detail::parse_tensor(s.at("tensor_mhz"), where, label);
      out.dopant = d;
    } else if (kind == "carbon_pair") {
      CarbonPairSite c;
      c.label = label;
      c.gauge = s.value("gauge", 0);
      if (c.gauge < 0 || c.gauge > 5) throw SchemaError(where + ": gauge must be 0..5");
      if (!s.contains("pair_tensor_mhz") || !s.contains("unique_tensor_mhz"))
        throw SchemaError(where + ": carbon_pair needs pair_tensor_mhz and unique_tensor_mhz");
      c.pair_tensor = detail::parse_tensor(s["pair_tensor_mhz"], where, label + ":pair");
      c.unique_tensor = detail::parse_tensor(s["unique_tensor_mhz"], where, label + ":unique");
      out.carbons.push_back(std::move(c));
    } else {
      throw SchemaError(where + ": unknown site kind '" + kind + "'");
    }
  }
  return out;
}

struct SiteResult {
  std::string label;
  OrbitalHFSet set_defect_frame;          // a_mean/a_x/a_y in the defect frame
  std::optional<AxialExtraction> axial;   // present for on-axis sites
};

struct DecompositionResult {
  std::string defect, state;
  double q = 1.0;
  Eigen::Vector3d axis;
  std::vector<SiteResult> sites;
};

/// Full pipeline for one document: detect the defect axis from the
/// dopant tensor (or default to [111]), decompose every site, express the
/// outputs in the defect frame, and extract the on-axis parameters for the
/// dopant.
inline DecompositionResult run_decomposition(const TensorDocument& doc) {
  DecompositionResult out;
  out.defect = doc.defect;
  out.state = doc.state;
  out.q = doc.q;

  FrameConvention onaxis = FrameConvention::onaxis_default();
  if (doc.dopant) {
    onaxis = detect_axis(doc.dopant->tensor, doc.q);
    onaxis.x_seed = FrameConvention::onaxis_default().x_seed;
  }
  out.axis = onaxis.axis;

  auto to_frame = [&](const OrbitalHFSet& set, const FrameConvention& conv) {
    OrbitalHFSet f = set;
    f.a_mean = to_defect_frame(set.a_mean, conv);
    f.a_x = to_defect_frame(set.a_x, conv);
    f.a_y = to_defect_frame(set.a_y, conv);
    return f;
  };

  if (doc.dopant) {
    SiteResult r;
    r.label = doc.dopant->label;
    auto set = decompose_onaxis(doc.dopant->tensor, doc.q, onaxis);
    r.axial = extract_axial(set, onaxis, /*tolerance=*/5.0);
    r.set_defect_frame = to_frame(set, onaxis);
    out.sites.push_back(std::move(r));
  }
  FrameConvention offaxis = FrameConvention::offaxis_default();
  offaxis.axis = onaxis.axis;
  for (const auto& c : doc.carbons) {
    SiteResult r;
    r.label = c.label;
    auto triple = reconstruct_c2h_triple(c.pair_tensor, c.unique_tensor, c.gauge);
    auto set = decompose_offaxis(triple[0], triple[1], triple[2], doc.q, offaxis);
    r.set_defect_frame = to_frame(set, offaxis);
    out.sites.push_back(std::move(r));
  }
  return out;
}

namespace detail {
inline json tensor_json(const HyperfineTensor3& t) {
  return {{"xx", t.m(0, 0)}, {"yy", t.m(1, 1)}, {"zz", t.m(2, 2)},
          {"xy", t.m(0, 1)}, {"xz", t.m(0, 2)}, {"yz", t.m(1, 2)}};
}
}  // namespace detail

inline std::string result_json(const DecompositionResult& r) {
  nlohmann::json j;
  j["defect"] = r.defect;
  j["state"] = r.state;
  j["q"] = r.q;
  j["axis"] = {r.axis(0), r.axis(1), r.axis(2)};
  for (const auto& s : r.sites) {
    nlohmann::json site;
    site["label"] = s.label;
    site["a_mean_mhz"] = detail::tensor_json(s.set_defect_frame.a_mean);
    site["a_x_mhz"] = detail::tensor_json(s.set_defect_frame.a_x);
    site["a_y_mhz"] = detail::tensor_json(s.set_defect_frame.a_y);
    if (s.axial) {
      site["effective"] = {{"a_par_mhz", s.axial->hf.a_par},
                           {"a_perp_mhz", s.axial->hf.a_perp},
                           {"a1_mhz", s.axial->hf.a1},
                           {"a2_mhz", s.axial->hf.a2},
                           {"template_residual_mhz", s.axial->residual}};
    }
    j["sites"].push_back(site);
  }
  return j.dump(2) + "\n";
}

inline std::string result_csv(const DecompositionResult& r) {
  std::ostringstream out;
  out << "site,tensor,xx,yy,zz,xy,xz,yz\n";
  auto row = [&](const std::string& label, const char* which, const HyperfineTensor3& t) {
    out << label << ',' << which;
    const int idx[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    for (auto [i, k] : idx) out << ',' << io::sig9(t.m(i, k));
    out << '\n';
  };
  for (const auto& s : r.sites) {
    row(s.label, "a_mean", s.set_defect_frame.a_mean);
    row(s.label, "a_x", s.set_defect_frame.a_x);
    row(s.label, "a_y", s.set_defect_frame.a_y);
  }
  return out.str();
}

}  // namespace g4v::hf
