#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fpk/common.hpp"

namespace fpk {

inline constexpr int kReportSchemaVersion = 1;

/// One verified inequality or identity: margin = RHS - LHS, with the pass
/// rule margin >= -(tolerance + discretization_error).
struct VerificationReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double discretization_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double runtime_ms = 0.0;      // informational; not serialized (outputs are
                                // byte-identical across reruns)
  std::string provenance;       // oracles used for each side
  std::string note;             // subcase margins, fitted constants, errors

  void finalize() { pass = margin >= -(tolerance + discretization_error); }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Compact formatting for report names and notes.
inline std::string format_compact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline nlohmann::ordered_json to_json(const VerificationReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["name"] = r.name;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["margin"] = r.margin;
  j["discretization_error"] = r.discretization_error;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["provenance"] = r.provenance;
  j["note"] = r.note;
  return j;
}

inline void write_jsonl(const std::vector<VerificationReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open report file: " + path);
  for (const auto& r : reports) out << to_json(r).dump() << "\n";
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv(const std::vector<VerificationReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open report file: " + path);
  out << "name,lhs,rhs,margin,pass\n";
  for (const auto& r : reports)
    out << csv_escape(r.name) << "," << format_double(r.lhs) << "," << format_double(r.rhs) << ","
        << format_double(r.margin) << "," << (r.pass ? "true" : "false") << "\n";
}

}  // namespace fpk
