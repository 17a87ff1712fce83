#pragma once

// JSON and CSV serialization of a Report. Output is a pure function of the
// report: no timestamps, host names or paths, so repeated runs compare equal
// byte for byte.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "pbosons/runner.hpp"

namespace pbosons {

/// Fixed description of the build, identical on every run of one binary.
inline nlohmann::ordered_json environment_stamp() {
  nlohmann::ordered_json env;
  env["tool"] = "pbosons";
  env["tool_version"] = tool_version;
#if defined(__clang__)
  env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = std::string("gcc ") + __VERSION__;
#else
  env["compiler"] = "unknown";
#endif
  env["cxx_standard"] = static_cast<long>(__cplusplus);
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
#ifdef NDEBUG
  env["assertions"] = false;
#else
  env["assertions"] = true;
#endif
  env["scalar"] = "complex<double>";
  env["machine_epsilon"] = machine_epsilon;
  return env;
}

namespace detail {

inline nlohmann::ordered_json number_or_null(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const CheckRecord& r) {
  nlohmann::ordered_json j;
  j["group"] = r.group;
  j["check"] = r.name;
  j["dim"] = r.dim;
  j["trust"] = r.trust;
  j["status"] = to_string(r.status);
  j["residual"] = detail::number_or_null(r.residual);
  j["threshold"] = detail::number_or_null(r.threshold);
  if (!r.cause.empty()) j["cause"] = r.cause;
  if (!r.detail.empty()) {
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.detail) d[k] = detail::number_or_null(v);
    j["detail"] = d;
  }
  return j;
}

inline nlohmann::ordered_json to_json(const Report& rep) {
  nlohmann::ordered_json j;
  j["schema_version"] = schema_version;
  j["environment"] = environment_stamp();
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_echo(rep.config)) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json tol = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rep.config.tolerances) tol[k] = v;
  j["tolerances"] = tol;
  j["model"] = rep.config.model.label();
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.records) j["records"].push_back(to_json(r));
  j["condition_growth"] = nlohmann::ordered_json::array();
  for (const auto& g : rep.growth)
    j["condition_growth"].push_back({{"dim", g.dim}, {"lower", g.lower}, {"upper", g.upper}, {"condition", g.condition}});
  j["classification"] = rep.classification;
  j["summary"] = {{"pass", rep.count(Status::pass)},
                  {"fail", rep.count(Status::fail)},
                  {"error", rep.count(Status::error)},
                  {"not_applicable", rep.count(Status::not_applicable)},
                  {"outcome", rep.outcome()},
                  {"exit_code", rep.exit_code()}};
  return j;
}

inline std::string norm_profile_csv(const Report& rep) {
  std::string s = "n,phi_norm,psi_norm,product\n";
  for (const auto& r : rep.norm_profile)
    s += r.label + "," + detail::csv_number(r.phi) + "," + detail::csv_number(r.psi) + "," +
         detail::csv_number(r.product) + "\n";
  return s;
}

inline std::string condition_growth_csv(const Report& rep) {
  std::string s = "dim,lower,upper,condition\n";
  for (const auto& g : rep.growth)
    s += std::to_string(g.dim) + "," + detail::csv_number(g.lower) + "," + detail::csv_number(g.upper) + "," +
         detail::csv_number(g.condition) + "\n";
  return s;
}

inline std::string quadrature_csv(const Report& rep) {
  std::string s = "dim,radial_nodes,angular_nodes,defect,change\n";
  for (const auto& q : rep.quadrature)
    s += std::to_string(q.dim) + "," + std::to_string(q.radial) + "," + std::to_string(q.angular) + "," +
         detail::csv_number(q.defect) + "," + detail::csv_number(q.change) + "\n";
  return s;
}

/// Writes report.json plus the CSVs into `dir`, creating it if needed.
inline void emit(const Report& rep, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create '" + dir.string() + "': " + ec.message());
  detail::write_text(dir / "report.json", to_json(rep).dump(2) + "\n");
  if (!rep.config.csv) return;
  detail::write_text(dir / "norm_profile.csv", norm_profile_csv(rep));
  detail::write_text(dir / "condition_growth.csv", condition_growth_csv(rep));
  detail::write_text(dir / "quadrature_convergence.csv", quadrature_csv(rep));
}

}  // namespace pbosons
