#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "g4v/errors.hpp"
#include "g4v/jt.hpp"

namespace g4v::pressure {

struct PressurePoint {
  double pressure_gpa = 0.0;
  double e_jt_mev = 0.0;
  double delta_jt_mev = 0.0;
  double hbar_omega_mev = 0.0;
  double p_factor = 0.0;
  double lambda_ghz = 0.0;
  std::optional<double> d1_angstrom, d2_angstrom;

  jt::JTParams jt_params() const { return {e_jt_mev, delta_jt_mev, hbar_omega_mev}; }
};

struct StateSeries {
  std::vector<PressurePoint> points;
};

struct DefectParamTable {
  std::string defect;
  StateSeries ground, excited;
  std::vector<std::string> corrections;  // canonicalization log from load time
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw SchemaError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline PressurePoint parse_point(const json& j, const std::string& where,
                                 std::vector<std::string>& log) {
  PressurePoint p;
  p.pressure_gpa = require_number(j, "pressure_gpa", where);
  p.e_jt_mev = require_number(j, "e_jt_mev", where);
  p.delta_jt_mev = require_number(j, "delta_jt_mev", where);
  p.hbar_omega_mev = require_number(j, "hbar_omega_mev", where);
  p.p_factor = require_number(j, "p_factor", where);
  p.lambda_ghz = require_number(j, "lambda_ghz", where);
  if (j.contains("d1_angstrom")) p.d1_angstrom = require_number(j, "d1_angstrom", where);
  if (j.contains("d2_angstrom")) p.d2_angstrom = require_number(j, "d2_angstrom", where);
  // The source table's excited-state columns are permuted in print: the
  // barrier column holds tens of meV and the phonon column a few meV. The
  // magnitude heuristic (barrier < phonon quantum in every physical row)
  // restores the intended order and the fix is logged.
  if (p.delta_jt_mev > p.hbar_omega_mev) {
    std::swap(p.delta_jt_mev, p.hbar_omega_mev);
    log.push_back(where + ": swapped delta_jt/hbar_omega columns (" +
                  std::to_string(p.hbar_omega_mev) + " / " + std::to_string(p.delta_jt_mev) + ")");
  }
  try {
    p.jt_params().validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return p;
}

inline StateSeries parse_series(const json& arr, const std::string& where,
                                std::vector<std::string>& log) {
  if (!arr.is_array() || arr.size() < 2)
    throw SchemaError(where + ": needs an array of at least 2 pressure points");
  StateSeries s;
  for (std::size_t i = 0; i < arr.size(); ++i)
    s.points.push_back(parse_point(arr[i], where + "[" + std::to_string(i) + "]", log));
  for (std::size_t i = 1; i < s.points.size(); ++i)
    if (!(s.points[i].pressure_gpa > s.points[i - 1].pressure_gpa))
      throw SchemaError(where + ": pressures must be strictly increasing (row " +
                        std::to_string(i) + ")");
  return s;
}

}  // namespace detail

inline DefectParamTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("load_table: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("load_table: '" + path + "' is not valid JSON: " + e.what());
  }
  const std::string where = path;
  if (detail::require(doc, "schema", where).get<std::string>() != "g4v-defect-params/1")
    throw SchemaError(where + ": unsupported schema tag");
  DefectParamTable t;
  t.defect = detail::require(doc, "defect", where).get<std::string>();
  const auto& states = detail::require(doc, "states", where);
  t.ground = detail::parse_series(detail::require(states, "ground", where + ".states"),
                                  where + ".ground", t.corrections);
  t.excited = detail::parse_series(detail::require(states, "excited", where + ".states"),
                                   where + ".excited", t.corrections);
  return t;
}

struct PressureCurve {
  std::string observable;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;  // value = c0 + c1 P + c2 P^2
  double residual_rms = 0.0;
  double grid_min = 0.0, grid_max = 0.0;
  bool constrained_through_zero = false;  // fits are unconstrained; recorded for provenance

  double raw(double p_gpa) const { return c0 + (c1 + c2 * p_gpa) * p_gpa; }
};

inline PressureCurve fit_quadratic(const std::vector<std::pair<double, double>>& pts,
                                   std::string observable = {}) {
  if (pts.size() < 3) throw std::invalid_argument("fit_quadratic: needs at least 3 points");
  const auto [mn, mx] = std::minmax_element(pts.begin(), pts.end());
  if (mx->first - mn->first < 1e-12)
    throw std::invalid_argument("fit_quadratic: rank-deficient, all pressures equal");
  Eigen::MatrixXd v(pts.size(), 3);
  Eigen::VectorXd y(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    v(i, 0) = 1.0;
    v(i, 1) = pts[i].first;
    v(i, 2) = pts[i].first * pts[i].first;
    y(i) = pts[i].second;
  }
  Eigen::Vector3d c = v.colPivHouseholderQr().solve(y);
  PressureCurve out;
  out.observable = std::move(observable);
  out.c0 = c(0);
  out.c1 = c(1);
  out.c2 = c(2);
  out.residual_rms = std::sqrt((v * c - y).squaredNorm() / pts.size());
  out.grid_min = mn->first;
  out.grid_max = mx->first;
  return out;
}

inline double evaluate(const PressureCurve& curve, double p_gpa) {
  const double span = std::max(curve.grid_max - curve.grid_min, 1e-12);
  const double lo = curve.grid_min - 0.1 * span, hi = curve.grid_max + 0.1 * span;
  if (p_gpa < lo || p_gpa > hi)
    throw RangeError("evaluate: " + std::to_string(p_gpa) + " GPa outside [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "] for '" +
                     curve.observable + "'");
  return curve.raw(p_gpa);
}

/// Invert curve(P) = measured on the fitted grid range. The curve must be
/// strictly monotonic there (checked through the vertex position).
inline double calibrate(const PressureCurve& curve, double measured) {
  double lo = curve.grid_min, hi = curve.grid_max;
  if (curve.c2 != 0.0) {
    const double vertex = -curve.c1 / (2.0 * curve.c2);
    if (vertex > lo + 1e-9 && vertex < hi - 1e-9)
      throw std::invalid_argument("calibrate: curve '" + curve.observable +
                                  "' is not monotonic on its range");
  } else if (curve.c1 == 0.0) {
    throw std::invalid_argument("calibrate: curve '" + curve.observable + "' is constant");
  }
  double flo = curve.raw(lo), fhi = curve.raw(hi);
  const bool increasing = fhi > flo;
  double vlo = std::min(flo, fhi), vhi = std::max(flo, fhi);
  if (measured < vlo - 1e-12 || measured > vhi + 1e-12)
    throw RangeError("calibrate: measured value " + std::to_string(measured) +
                     " outside the curve range [" + std::to_string(vlo) + ", " +
                     std::to_string(vhi) + "]");
  for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
    double mid = 0.5 * (lo + hi);
    ((curve.raw(mid) < measured) == increasing ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Crossing {
  double pressure_gpa = 0.0;
  bool at_range_edge = false;
};

/// Smallest pressure where `upper` reaches `threshold` on their shared range.
inline std::optional<Crossing> photostability_limit(const PressureCurve& upper,
                                                    const PressureCurve& threshold) {
  double lo = std::max(upper.grid_min, threshold.grid_min);
  double hi = std::min(upper.grid_max, threshold.grid_max);
  if (!(hi > lo)) throw std::invalid_argument("photostability_limit: ranges do not overlap");
  auto f = [&](double p) { return upper.raw(p) - threshold.raw(p); };
  if (f(lo) >= 0.0) return Crossing{lo, true};
  const int steps = 4096;
  double prev = lo, fprev = f(lo);
  for (int i = 1; i <= steps; ++i) {
    double p = lo + (hi - lo) * i / steps;
    double fp = f(p);
    if (fprev < 0.0 && fp >= 0.0) {
      double a = prev, b = p;
      for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (a + b);
        (f(mid) < 0.0 ? a : b) = mid;
      }
      return Crossing{0.5 * (a + b), false};
    }
    prev = p;
    fprev = fp;
  }
  return std::nullopt;
}

enum class InterpMode { quadratic, piecewise_linear };

namespace detail {

inline double interp_series(const std::vector<std::pair<double, double>>& pts, double p,
                            InterpMode mode, const std::string& name) {
  if (mode == InterpMode::quadratic && pts.size() >= 3)
    return evaluate(fit_quadratic(pts, name), p);
  // piecewise linear (also the fallback for short series)
  if (p < pts.front().first - 1e-12 || p > pts.back().first + 1e-12)
    throw RangeError("interpolate: " + std::to_string(p) + " GPa outside the grid for '" +
                     name + "'");
  auto hi = std::lower_bound(pts.begin(), pts.end(), std::make_pair(p, -1e300));
  if (hi == pts.begin()) return pts.front().second;
  if (hi == pts.end()) return pts.back().second;
  auto lo = hi - 1;
  double t = (p - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

template <class Get>
std::vector<std::pair<double, double>> series_of(const StateSeries& s, Get get) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& pt : s.points) {
    auto v = get(pt);
    if (v) pts.emplace_back(pt.pressure_gpa, *v);
  }
  return pts;
}

}  // namespace detail

/// All tabulated observables of one electronic state interpolated to P.
inline PressurePoint interpolate_state(const StateSeries& s, double p_gpa,
                                       InterpMode mode = InterpMode::quadratic) {
  using OptGet = std::optional<double>;
  PressurePoint out;
  out.pressure_gpa = p_gpa;
  auto grab = [&](auto field, const char* name) {
    auto pts = detail::series_of(s, [&](const PressurePoint& q) -> OptGet { return field(q); });
    if (pts.size() < 2) return OptGet{};
    return OptGet{detail::interp_series(pts, p_gpa, mode, name)};
  };
  out.e_jt_mev = *grab([](const PressurePoint& q) -> OptGet { return q.e_jt_mev; }, "e_jt");
  out.delta_jt_mev =
      *grab([](const PressurePoint& q) -> OptGet { return q.delta_jt_mev; }, "delta_jt");
  out.hbar_omega_mev =
      *grab([](const PressurePoint& q) -> OptGet { return q.hbar_omega_mev; }, "hbar_omega");
  out.p_factor = *grab([](const PressurePoint& q) -> OptGet { return q.p_factor; }, "p_factor");
  out.lambda_ghz = *grab([](const PressurePoint& q) -> OptGet { return q.lambda_ghz; }, "lambda");
  out.d1_angstrom = grab([](const PressurePoint& q) { return q.d1_angstrom; }, "d1");
  out.d2_angstrom = grab([](const PressurePoint& q) { return q.d2_angstrom; }, "d2");
  return out;
}

struct Snapshot {
  double pressure_gpa = 0.0;
  PressurePoint ground, excited;
};

inline Snapshot observable_report(const DefectParamTable& table, double p_gpa,
                                  InterpMode mode = InterpMode::quadratic) {
  return {p_gpa, interpolate_state(table.ground, p_gpa, mode),
          interpolate_state(table.excited, p_gpa, mode)};
}

/// Convenience: fitted quadratic for one named observable of one state.
inline PressureCurve curve_for(const DefectParamTable& table, const std::string& state,
                               const std::string& observable) {
  const StateSeries* s = nullptr;
  if (state == "ground") s = &table.ground;
  else if (state == "excited") s = &table.excited;
  else throw std::invalid_argument("curve_for: state must be ground|excited");
  std::vector<std::pair<double, double>> pts;
  for (const auto& pt : s->points) {
    double v;
    if (observable == "lambda") v = pt.lambda_ghz;
    else if (observable == "e_jt") v = pt.e_jt_mev;
    else if (observable == "delta_jt") v = pt.delta_jt_mev;
    else if (observable == "hbar_omega") v = pt.hbar_omega_mev;
    else if (observable == "p_factor") v = pt.p_factor;
    else throw std::invalid_argument("curve_for: unknown observable '" + observable + "'");
    pts.emplace_back(pt.pressure_gpa, v);
  }
  return fit_quadratic(pts, table.defect + ":" + state + ":" + observable);
}

/// lambda_g(P) + lambda_u(P) as one fitted curve (ZPL-broadening proxy).
inline PressureCurve zpl_sum_curve(const DefectParamTable& table) {
  if (table.ground.points.size() != table.excited.points.size())
    throw std::invalid_argument("zpl_sum_curve: ground/excited grids differ");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < table.ground.points.size(); ++i) {
    if (table.ground.points[i].pressure_gpa != table.excited.points[i].pressure_gpa)
      throw std::invalid_argument("zpl_sum_curve: ground/excited grids differ");
    pts.emplace_back(table.ground.points[i].pressure_gpa,
                     table.ground.points[i].lambda_ghz + table.excited.points[i].lambda_ghz);
  }
  return fit_quadratic(pts, table.defect + ":zpl_sum");
}

}  // namespace g4v::pressure
