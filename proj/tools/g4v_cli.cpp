// Command-line front end: Jahn-Teller solves, level structures, hyperfine
// tensor decomposition, and pressure calibration from the shipped data files.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "g4v/catalog.hpp"
#include "g4v/errors.hpp"
#include "g4v/hf_io.hpp"
#include "g4v/io.hpp"
#include "g4v/jt.hpp"
#include "g4v/pressure.hpp"
#include "g4v/spin.hpp"
#include "g4v/units.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitRange = 4;
constexpr int kExitFrame = 5;

g4v::io::RunManifest manifest_for(const std::string& command,
                                  std::map<std::string, std::string> inputs,
                                  const std::vector<std::string>& data_files) {
  g4v::io::RunManifest m;
  m.command = command;
  m.inputs = std::move(inputs);
  for (const auto& f : data_files) m.add_data_file(f);
  return m;
}

void write_output(const std::string& path, const std::string& content,
                  const g4v::io::RunManifest& manifest) {
  g4v::io::atomic_write(path, content);
  manifest.write_alongside(path);
}

g4v::MagneticField parse_field(double value, const std::string& unit) {
  if (unit == "G" || unit == "gauss") return g4v::MagneticField::gauss(value);
  if (unit == "T" || unit == "tesla") return g4v::MagneticField::tesla(value);
  throw std::invalid_argument("field unit must be G or T");
}

int cmd_jt_solve(double ejt, double delta, double omega, int cutoff, int n_eigen,
                 const std::string& out) {
  g4v::jt::JTParams params{ejt, delta, omega};
  auto couplings = g4v::jt::fit_couplings(params);
  auto sol = g4v::jt::solve(couplings, omega, cutoff, n_eigen);
  if (!sol.converged) {
    auto retry = g4v::jt::solve(couplings, omega, cutoff + 32, n_eigen);
    if (!retry.converged)
      throw g4v::ConvergenceError("ground level still moving at cutoff " +
                                  std::to_string(cutoff + 32) + " (change " +
                                  std::to_string(retry.ground_energy_change) + " meV)");
    sol = retry;
  }
  double p = g4v::jt::ham_factor_p(sol);
  std::printf("V  = %s meV\n", g4v::io::sig9(couplings.v_linear).c_str());
  std::printf("G  = %s meV\n", g4v::io::sig9(couplings.g_quadratic).c_str());
  std::printf("p  = %s\n", g4v::io::sig9(p).c_str());
  std::printf("q  = %s\n", g4v::io::sig9(g4v::jt::ham_factor_q(p)).c_str());
  std::printf("cutoff = %d, ground level %s meV\n", sol.cutoff,
              g4v::io::sig9(sol.eigenvalues(0)).c_str());
  if (!out.empty()) {
    auto m = manifest_for("jt-solve",
                          {{"ejt", std::to_string(ejt)},
                           {"delta", std::to_string(delta)},
                           {"omega", std::to_string(omega)},
                           {"cutoff", std::to_string(sol.cutoff)}},
                          {});
    write_output(out, g4v::io::eigenvalues_csv(sol.eigenvalues, "meV"), m);
  }
  return 0;
}

int cmd_levels(const std::string& data_dir, const std::string& defect, const std::string& state,
               double pressure, const std::string& isotope, double bfield,
               const std::string& bunit, const std::string& out) {
  auto cat = g4v::catalog::load_catalog(data_dir);
  auto spec = g4v::catalog::make_spec(cat, defect, state, pressure, isotope,
                                      parse_field(bfield, bunit));
  auto ls = g4v::spin::levels(spec);
  std::printf("%s %s at %g GPa, lambda = %s GHz, %d levels in %d groups\n", defect.c_str(),
              state.c_str(), pressure, g4v::io::sig9(spec.lambda_eff_ghz).c_str(),
              static_cast<int>(ls.energies_ghz.size()), ls.groups());
  std::string csv = g4v::io::levels_csv(ls);
  std::fputs(csv.c_str(), stdout);
  if (!out.empty()) {
    auto m = manifest_for("levels",
                          {{"defect", defect},
                           {"state", state},
                           {"pressure", std::to_string(pressure)},
                           {"isotope", isotope},
                           {"bfield", std::to_string(bfield) + bunit}},
                          {data_dir + "/hyperfine.json"});
    write_output(out, csv, m);
  }
  return 0;
}

int cmd_hf_decompose(const std::string& input, double q_override, const std::string& out) {
  auto doc = g4v::hf::load_tensor_document(input);
  if (q_override > 0.0) doc.q = q_override;
  auto result = g4v::hf::run_decomposition(doc);
  for (const auto& s : result.sites) {
    if (s.axial)
      std::printf("%s: A_par = %s, A_perp = %s, A1 = %s, A2 = %s MHz (residual %s)\n",
                  s.label.c_str(), g4v::io::sig9(s.axial->hf.a_par).c_str(),
                  g4v::io::sig9(s.axial->hf.a_perp).c_str(),
                  g4v::io::sig9(s.axial->hf.a1).c_str(),
                  g4v::io::sig9(s.axial->hf.a2).c_str(),
                  g4v::io::sig9(s.axial->residual).c_str());
    else
      std::printf("%s: orbital tensor set written (off-axis site)\n", s.label.c_str());
  }
  if (!out.empty()) {
    auto m = manifest_for("hf-decompose", {{"input", input}, {"q", std::to_string(doc.q)}},
                          {input});
    write_output(out + ".json", g4v::hf::result_json(result), m);
    write_output(out + ".csv", g4v::hf::result_csv(result), m);
  }
  return 0;
}

int cmd_calibrate(const std::string& data_dir, const std::string& defect,
                  const std::string& observable, double value, const std::string& unit) {
  auto cat = g4v::catalog::load_catalog(data_dir);
  const auto& table = cat.defects.at(defect);

  double value_ghz = g4v::as_ghz(g4v::Energy{
      value, unit == "GHz" ? g4v::EnergyUnit::GHz
                           : unit == "MHz" ? g4v::EnergyUnit::MHz : g4v::EnergyUnit::meV});
  g4v::pressure::PressureCurve curve;
  if (observable == "lambda_g") curve = g4v::pressure::curve_for(table, "ground", "lambda");
  else if (observable == "lambda_u") curve = g4v::pressure::curve_for(table, "excited", "lambda");
  else if (observable == "zpl_sum") curve = g4v::pressure::zpl_sum_curve(table);
  else if (observable == "a_ple")
    throw g4v::RangeError("observable a_ple has no tabulated pressure series in the shipped "
                          "data (hyperfine_vs_pressure is an empty template); load your own");
  else throw std::invalid_argument("observable must be lambda_g|lambda_u|a_ple|zpl_sum");

  double p = g4v::pressure::calibrate(curve, value_ghz);
  // residual-based uncertainty: residual divided by the local slope
  double slope = std::abs(curve.c1 + 2.0 * curve.c2 * p);
  double sigma = slope > 0 ? curve.residual_rms / slope : 0.0;
  std::printf("P = %s GPa (+- %s GPa from fit residual)\n", g4v::io::sig9(p).c_str(),
              g4v::io::sig9(sigma).c_str());
  return 0;
}

int cmd_spectrum(const std::string& data_dir, const std::string& defect, double pressure,
                 const std::string& isotope, double bfield, const std::string& bunit,
                 const std::string& out) {
  auto cat = g4v::catalog::load_catalog(data_dir);
  auto field = parse_field(bfield, bunit);
  auto gspec = g4v::catalog::make_spec(cat, defect, "ground", pressure, isotope, field);
  auto uspec = g4v::catalog::make_spec(cat, defect, "excited", pressure, isotope, field);
  auto lines = g4v::spin::ple_lines(g4v::spin::levels(gspec), g4v::spin::levels(uspec));
  std::printf("%s at %g GPa: %d lines (energies relative to the ZPL)\n", defect.c_str(),
              pressure, static_cast<int>(lines.size()));
  std::string csv = g4v::io::lines_csv(lines);
  std::fputs(csv.c_str(), stdout);
  if (!out.empty()) {
    auto m = manifest_for("spectrum",
                          {{"defect", defect},
                           {"pressure", std::to_string(pressure)},
                           {"isotope", isotope},
                           {"bfield", std::to_string(bfield) + bunit}},
                          {data_dir + "/hyperfine.json"});
    write_output(out, csv, m);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-Hamiltonian toolkit for group-IV--vacancy centers"};
  app.require_subcommand(1);

  std::string data_dir_flag;
  app.add_option("--data-dir", data_dir_flag, "data directory (default: $G4V_DATA_DIR or built-in)");

  // jt-solve
  double ejt = 0, delta = 0, omega = 0;
  int cutoff = 64, n_eigen = 6;
  std::string out;
  auto* jt = app.add_subcommand("jt-solve", "solve one E(x)e Jahn-Teller problem");
  jt->add_option("--ejt", ejt, "relaxation energy, meV")->required();
  jt->add_option("--delta", delta, "barrier energy, meV")->required();
  jt->add_option("--omega", omega, "effective phonon quantum, meV")->required();
  jt->add_option("--cutoff", cutoff, "boson cutoff N");
  jt->add_option("--n-eigen", n_eigen, "eigenpairs to report");
  jt->add_option("--out", out, "eigenvalue CSV path");

  // levels
  std::string defect, state = "ground", isotope = "none", bunit = "G";
  double pressure = 0, bfield = 0;
  auto* lv = app.add_subcommand("levels", "fine-structure levels for one defect state");
  lv->add_option("--defect", defect, "SiV|GeV|SnV|PbV")->required();
  lv->add_option("--state", state, "ground|excited");
  lv->add_option("--pressure", pressure, "GPa")->required();
  lv->add_option("--isotope", isotope, "dopant isotope or 'none'");
  lv->add_option("--bfield", bfield, "magnetic field along the defect axis");
  lv->add_option("--bfield-unit", bunit, "G|T");
  lv->add_option("--out", out, "levels CSV path");

  // hf-decompose
  std::string input;
  double q_override = -1.0;
  auto* hf = app.add_subcommand("hf-decompose", "orbital decomposition of raw hyperfine tensors");
  hf->add_option("--input", input, "tensor document (JSON)")->required();
  hf->add_option("--q", q_override, "override the document's q reduction factor");
  hf->add_option("--out", out, "output stem (writes <stem>.json and <stem>.csv)");

  // calibrate
  std::string observable, unit = "GHz";
  double value = 0;
  auto* cal = app.add_subcommand("calibrate", "pressure from a measured observable");
  cal->add_option("--defect", defect, "SiV|GeV|SnV|PbV")->required();
  cal->add_option("--observable", observable, "lambda_g|lambda_u|a_ple|zpl_sum")->required();
  cal->add_option("--value", value, "measured value")->required();
  cal->add_option("--unit", unit, "GHz|MHz|meV");

  // spectrum
  auto* sp = app.add_subcommand("spectrum", "PLE line positions relative to the ZPL");
  sp->add_option("--defect", defect, "SiV|GeV|SnV|PbV")->required();
  sp->add_option("--pressure", pressure, "GPa")->required();
  sp->add_option("--isotope", isotope, "dopant isotope or 'none'");
  sp->add_option("--bfield", bfield, "magnetic field along the defect axis");
  sp->add_option("--bfield-unit", bunit, "G|T");
  sp->add_option("--out", out, "line CSV path");

  CLI11_PARSE(app, argc, argv);
  const std::string data_dir = g4v::io::data_dir(data_dir_flag);

  try {
    if (jt->parsed()) return cmd_jt_solve(ejt, delta, omega, cutoff, n_eigen, out);
    if (lv->parsed()) return cmd_levels(data_dir, defect, state, pressure, isotope, bfield, bunit, out);
    if (hf->parsed()) return cmd_hf_decompose(input, q_override, out);
    if (cal->parsed()) return cmd_calibrate(data_dir, defect, observable, value, unit);
    if (sp->parsed()) return cmd_spectrum(data_dir, defect, pressure, isotope, bfield, bunit, out);
  } catch (const g4v::SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return kExitValidation;
  } catch (const g4v::ConvergenceError& e) {
    std::fprintf(stderr, "convergence error: %s\n", e.what());
    return kExitConvergence;
  } catch (const g4v::RangeError& e) {
    std::fprintf(stderr, "range error: %s\n", e.what());
    return kExitRange;
  } catch (const g4v::FrameError& e) {
    std::fprintf(stderr, "frame/symmetry error: %s\n", e.what());
    return kExitFrame;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
