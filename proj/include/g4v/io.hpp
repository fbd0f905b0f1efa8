#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "g4v/errors.hpp"
#include "g4v/spin.hpp"

namespace g4v::io {

/// Fixed 9-significant-digit formatting; keeps golden CSV byte-stable.
inline std::string sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write-to-temp then rename, so failures never leave a partial output file.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, target);
}

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Provenance record written next to every CLI output. Identical inputs give
/// identical manifests except for the timestamp field.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> data_file_hashes;

  void add_data_file(const std::string& path) {
    data_file_hashes[path] = fnv1a_hex(read_file(path));
  }

  std::string to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["data_file_hashes"] = data_file_hashes;
#ifdef G4V_VERSION
    j["tool_version"] = G4V_VERSION;
#else
    j["tool_version"] = "unknown";
#endif
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char ts[32];
    std::strftime(ts, sizeof ts, "%FT%TZ", std::gmtime(&now));
    j["timestamp"] = ts;
    return j.dump(2) + "\n";
  }

  void write_alongside(const std::string& output_path) const {
    atomic_write(output_path + ".manifest.json", to_json());
  }
};

// ---- fixed CSV layouts (column order and headers are part of the contract)

inline std::string levels_csv(const spin::LevelSet& ls) {
  std::ostringstream out;
  out << "index,energy_GHz,degeneracy,labels\n";
  char label[64];
  for (Eigen::Index i = 0; i < ls.energies_ghz.size(); ++i) {
    std::snprintf(label, sizeof label, "Sz=%+.3f;Iz=%+.3f", ls.sz_expect[i], ls.iz_expect[i]);
    out << i << ',' << sig9(ls.energies_ghz(i)) << ','
        << ls.group_size[ls.group_of_state[i]] << ',' << label << '\n';
  }
  return out.str();
}

inline std::string lines_csv(const std::vector<spin::PleLine>& lines) {
  std::ostringstream out;
  out << "index,energy_GHz,ground_level,excited_level,weight\n";
  for (std::size_t i = 0; i < lines.size(); ++i)
    out << i << ',' << sig9(lines[i].energy_ghz) << ',' << lines[i].ground_group << ','
        << lines[i].excited_group << ',' << sig9(lines[i].weight) << '\n';
  return out.str();
}

inline std::string eigenvalues_csv(const Eigen::VectorXd& vals, const std::string& unit) {
  std::ostringstream out;
  out << "index,energy_" << unit << "\n";
  for (Eigen::Index i = 0; i < vals.size(); ++i) out << i << ',' << sig9(vals(i)) << '\n';
  return out.str();
}

inline std::string curve_csv(const std::vector<std::pair<double, double>>& pts,
                             const std::string& ycol) {
  std::ostringstream out;
  out << "pressure_GPa," << ycol << "\n";
  for (const auto& [p, v] : pts) out << sig9(p) << ',' << sig9(v) << '\n';
  return out.str();
}

/// Resolve the data directory: flag beats environment beats compiled default.
inline std::string data_dir(const std::string& flag_value = {}) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("G4V_DATA_DIR")) return env;
#ifdef G4V_DEFAULT_DATA_DIR
  return G4V_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace g4v::io
