#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using Catch::Approx;

namespace {

const std::string kCli = G4V_CLI_PATH;
const std::string kTmp = G4V_TEST_TMPDIR;

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run(const std::string& args) {
  static int counter = 0;
  std::string out_path = kTmp + "/cli_out_" + std::to_string(counter++) + ".txt";
  std::string cmd = kCli + " " + args + " > " + out_path + " 2>&1";
  int rc = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return {code, ss.str()};
}

double parse_after(const std::string& text, const std::string& key) {
  auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size()));
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("jt-solve reproduces the silicon ground row") {
  auto r = run("jt-solve --ejt 40.86 --delta 3.79 --omega 89.70 --cutoff 48 --out " + kTmp +
               "/jt.csv");
  REQUIRE(r.exit_code == 0);
  CHECK(parse_after(r.stdout_text, "p  = ") == Approx(0.34).margin(0.03));
  CHECK(parse_after(r.stdout_text, "q  = ") == Approx(0.67).margin(0.02));
  auto csv = read_csv(kTmp + "/jt.csv");
  REQUIRE(csv.size() >= 3);
  CHECK(csv[0][0] == "index");
  // eigenvalue CSV and manifest both exist
  std::ifstream manifest(kTmp + "/jt.csv.manifest.json");
  CHECK(manifest.good());
}

TEST_CASE("jt-solve: vanishing coupling gives p near 1") {
  auto r = run("jt-solve --ejt 1e-9 --delta 0 --omega 80 --cutoff 12");
  REQUIRE(r.exit_code == 0);
  CHECK(parse_after(r.stdout_text, "p  = ") == Approx(1.0).margin(1e-4));
}

TEST_CASE("jt-solve rejects an impossible barrier with exit 2") {
  auto r = run("jt-solve --ejt 10 --delta 50 --omega 80");
  CHECK(r.exit_code == 2);
}

TEST_CASE("levels: silicon ground with its dopant spin at zero field") {
  auto r = run("levels --defect SiV --state ground --pressure 0 --isotope 29Si --bfield 0 "
               "--out " + kTmp + "/levels.csv");
  REQUIRE(r.exit_code == 0);
  auto csv = read_csv(kTmp + "/levels.csv");
  REQUIRE(csv.size() == 9);  // header + 8 levels
  CHECK(csv[0][1] == "energy_GHz");
  // zero-field structure: lowest pair degenerate, upper hyperfine pair split
  double e0 = std::stod(csv[1][1]), e1 = std::stod(csv[2][1]);
  double e2 = std::stod(csv[3][1]), e3 = std::stod(csv[4][1]);
  CHECK(e1 - e0 == Approx(0.0).margin(1e-9));
  CHECK((e2 - e0) * 1e3 == Approx(38.678).margin(0.01));
  CHECK((e3 - e2) * 1e3 == Approx(6.0).margin(0.01));
}

TEST_CASE("levels: tin doublet gap at 72 GPa") {
  auto r = run("levels --defect SnV --state ground --pressure 72 --isotope none --bfield 0");
  REQUIRE(r.exit_code == 0);
  auto pos = r.stdout_text.find("lambda = ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(r.stdout_text.substr(pos + 9)) == Approx(1223.62).epsilon(0.01));
}

TEST_CASE("levels: pressure outside the table exits 4") {
  auto r = run("levels --defect SiV --state ground --pressure 300 --isotope none --bfield 0");
  CHECK(r.exit_code == 4);
}

TEST_CASE("calibrate: tin lambda_g at the 72 GPa grid value") {
  auto r = run("calibrate --defect SnV --observable lambda_g --value 1223.62 --unit GHz");
  REQUIRE(r.exit_code == 0);
  CHECK(parse_after(r.stdout_text, "P = ") == Approx(72.0).margin(1.0));

  auto edge = run("calibrate --defect SnV --observable lambda_g --value 915.23 --unit GHz");
  REQUIRE(edge.exit_code == 0);
  CHECK(parse_after(edge.stdout_text, "P = ") == Approx(0.0).margin(1.0));

  CHECK(run("calibrate --defect SnV --observable lambda_g --value 99999 --unit GHz").exit_code == 4);
  CHECK(run("calibrate --defect SnV --observable a_ple --value 1 --unit MHz").exit_code == 4);
}

TEST_CASE("spectrum: germanium spin-orbit components at zero pressure") {
  auto r = run("spectrum --defect GeV --pressure 0 --isotope none --bfield 0 --out " + kTmp +
               "/gev_lines.csv");
  REQUIRE(r.exit_code == 0);
  auto csv = read_csv(kTmp + "/gev_lines.csv");
  REQUIRE(csv.size() == 5);  // header + four lines
  double lo = std::stod(csv[1][1]), hi = std::stod(csv[4][1]);
  CHECK(hi - lo == Approx(222.84 + 1155.54).margin(0.01));
}

TEST_CASE("spectrum: silicon hyperfine line pair near A_PLE") {
  auto r = run("spectrum --defect SiV --pressure 0 --isotope 29Si --bfield 50 --out " + kTmp +
               "/siv_lines.csv");
  REQUIRE(r.exit_code == 0);
  auto csv = read_csv(kTmp + "/siv_lines.csv");
  // lowest-branch transitions: both level groups 0/1 on each side
  std::vector<double> low;
  for (std::size_t i = 1; i < csv.size(); ++i) {
    int gg = std::stoi(csv[i][2]), ug = std::stoi(csv[i][3]);
    if (gg <= 1 && ug <= 1 && std::stod(csv[i][4]) > 0.5)
      low.push_back(std::stod(csv[i][1]));
  }
  REQUIRE(low.size() == 2);
  CHECK(std::abs(low[1] - low[0]) * 1e3 == Approx(39.25).margin(0.5));
}

TEST_CASE("spectrum output is deterministic") {
  std::string a = kTmp + "/det_a.csv", b = kTmp + "/det_b.csv";
  REQUIRE(run("spectrum --defect SnV --pressure 32 --isotope 117Sn --bfield 20 --out " + a)
              .exit_code == 0);
  REQUIRE(run("spectrum --defect SnV --pressure 32 --isotope 117Sn --bfield 20 --out " + b)
              .exit_code == 0);
  std::ifstream fa(a), fb(b);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK_FALSE(sa.str().empty());
}

TEST_CASE("hf-decompose: shipped silicon tensors") {
  const std::string data = G4V_DEFAULT_DATA_DIR;
  auto r = run("hf-decompose --input " + data + "/hf/siv_ground_tensors.json --out " + kTmp +
               "/hf_si");
  REQUIRE(r.exit_code == 0);
  CHECK(parse_after(r.stdout_text, "A_par = ") == Approx(83.3).margin(0.5));
  CHECK(parse_after(r.stdout_text, "A_perp = ") == Approx(88.7).margin(0.5));
  std::ifstream js(kTmp + "/hf_si.json"), cs(kTmp + "/hf_si.csv");
  CHECK(js.good());
  CHECK(cs.good());
}

TEST_CASE("hf-decompose: isotropic tensor has no dynamic part") {
  std::string path = kTmp + "/iso.json";
  std::ofstream out(path);
  out << R"({"schema": "g4v-hf-tensors/1", "defect": "SiV", "state": "ground",
             "q": 0.67, "frame": "cubic_crystal", "sites": [
             {"kind": "dopant", "label": "X", "nuclear_spin": 0.5,
              "tensor_mhz": {"xx": 5, "yy": 5, "zz": 5, "xy": 0, "xz": 0, "yz": 0}}]})";
  out.close();
  auto r = run("hf-decompose --input " + path);
  REQUIRE(r.exit_code == 0);
  CHECK(parse_after(r.stdout_text, "A1 = ") == Approx(0.0).margin(1e-9));
  CHECK(parse_after(r.stdout_text, "A2 = ") == Approx(0.0).margin(1e-9));
}

TEST_CASE("hf-decompose error paths: schema exit 2, asymmetry exit 5") {
  std::string bad = kTmp + "/bad_schema.json";
  {
    std::ofstream out(bad);
    out << R"({"schema": "nonsense"})";
  }
  CHECK(run("hf-decompose --input " + bad).exit_code == 2);

  // an asymmetric tensor violates the symmetry contract -> exit 5
  std::string asym = kTmp + "/asym.json";
  {
    std::ofstream out(asym);
    out << R"({"schema": "g4v-hf-tensors/1", "defect": "SiV", "state": "ground",
               "q": 0.67, "frame": "cubic_crystal", "sites": [
               {"kind": "dopant", "label": "X", "nuclear_spin": 0.5,
                "tensor_mhz": [5, 1, 0, -1, 5, 0, 0, 0, 5]}]})";
  }
  CHECK(run("hf-decompose --input " + asym).exit_code == 5);

  // a site far off the axis trips the on-axis residual check, also exit 5
  std::string offaxis = kTmp + "/offaxis.json";
  {
    std::ofstream out(offaxis);
    out << R"({"schema": "g4v-hf-tensors/1", "defect": "SiV", "state": "ground",
               "q": 0.67, "frame": "cubic_crystal", "sites": [
               {"kind": "dopant", "label": "X", "nuclear_spin": 0.5,
                "tensor_mhz": {"xx": 5, "yy": 5, "zz": 500, "xy": 90, "xz": 0, "yz": 0}}]})";
  }
  CHECK(run("hf-decompose --input " + offaxis).exit_code == 5);
}
