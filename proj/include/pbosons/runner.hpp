#pragma once

// Config-driven orchestration: parse a flat `key = value` run file, execute
// the requested checks per truncation size, and collect a Report that the
// emitters in report.hpp serialize.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pbosons/coherent.hpp"
#include "pbosons/models.hpp"

namespace pbosons {

inline constexpr std::string_view schema_version = "1.0";
inline constexpr std::string_view tool_version = "0.1.0";

inline const std::vector<std::string>& all_check_groups() {
  static const std::vector<std::string> groups{"assumptions", "eigen",      "frames",      "bosonize",
                                               "coherent",    "quadrature", "hamiltonian", "metric"};
  return groups;
}

/// Records each group produces; a check list may name a group or "group.record".
inline const std::map<std::string, std::vector<std::string>>& check_records() {
  static const std::map<std::string, std::vector<std::string>> records{
      {"assumptions", {"commutator", "vacuum", "biorthogonality", "completeness"}},
      {"eigen", {"eigen"}},
      {"frames", {"frame_bounds", "mutual_mapping", "intertwine"}},
      {"bosonize", {"bosonize", "orthonormality"}},
      {"coherent", {"coherent"}},
      {"quadrature", {"quadrature"}},
      {"hamiltonian", {"hamiltonian", "spectrum"}},
      {"metric", {"metric"}},
  };
  return records;
}

inline bool is_check_name(const std::string& c) {
  const auto dot = c.find('.');
  const auto it = check_records().find(c.substr(0, dot));
  if (it == check_records().end()) return false;
  if (dot == std::string::npos) return true;
  const auto& names = it->second;
  return std::find(names.begin(), names.end(), c.substr(dot + 1)) != names.end();
}

inline std::map<std::string, double> default_tolerances() {
  return {
      {"commutator", 1e-10},    {"vacuum", 1e-10},      {"biorthogonality", 1e-8}, {"completeness", 1e-6},
      {"eigen", 1e-8},          {"frame_hermiticity", 1e-10}, {"mutual_mapping", 1e-6}, {"intertwine", 1e-6},
      {"bosonize", 1e-7},       {"orthonormality", 1e-8}, {"coherent", 1e-7},       {"coherent_tail", 1e-6},
      {"quadrature", 1e-5},     {"quadrature_change", 1e-8}, {"hamiltonian", 1e-10}, {"spectrum", 1e-8},
      {"metric", 1e-5},         {"grid_commutator", 1e-2}, {"rho_flat", 1.5},        {"rho_grow", 4.0},
  };
}

struct RunConfig {
  std::string name = "run";
  ModelSpec model;
  std::vector<int> dims{16, 32, 64};
  std::vector<std::string> checks;  ///< groups or group.record names, in the order given
  std::map<std::string, double> tolerances = default_tolerances();
  double coherent_z = 0.7;          ///< largest |z| sampled by the coherent check
  int quadrature_trust = 12;
  int metric_trust = 12;
  QuadratureSpec quadrature;
  bool csv = true;
  std::string expect = "pass";      ///< outcome the demo expects: pass or fail
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(s)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string where(int line, std::string_view key) {
  return (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + "key '" + std::string(key) + "': ";
}

inline double parse_double(std::string_view v, int line, std::string_view key) {
  double out = 0.0;
  // "pi/6"-style values keep the shipped configs readable
  if (v.starts_with("pi")) {
    double den = 1.0;
    if (v.size() > 2) {
      if (v[2] != '/') throw Error(ErrorKind::config, where(line, key) + "expected pi or pi/N, got '" + std::string(v) + "'");
      den = parse_double(v.substr(3), line, key);
    }
    return std::numbers::pi / den;
  }
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw Error(ErrorKind::config, where(line, key) + "expected a number, got '" + std::string(v) + "'");
  return out;
}

inline long long parse_int(std::string_view v, int line, std::string_view key) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorKind::config, where(line, key) + "expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view v, int line, std::string_view key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw Error(ErrorKind::config, where(line, key) + "expected true or false, got '" + std::string(v) + "'");
}

}  // namespace detail

/// Applies one setting; shared by the file parser and command-line overrides.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0) {
  using namespace detail;
  auto num = [&] { return parse_double(value, line, key); };
  auto integer = [&] { return static_cast<int>(parse_int(value, line, key)); };
  if (key == "name") {
    if (value.empty() || value.find_first_of("/\\ ") != std::string::npos)
      throw Error(ErrorKind::config, where(line, key) + "name must be non-empty without spaces or slashes");
    cfg.name = value;
  } else if (key == "model" || key == "model.kind") {
    auto k = parse_model_kind(value);
    if (!k) throw Error(ErrorKind::config, where(line, key) + "unknown model '" + value + "'");
    cfg.model.kind = *k;
  } else if (key == "model.beta") {
    cfg.model.beta = num();
  } else if (key == "model.theta") {
    cfg.model.theta = num();
  } else if (key == "model.alpha") {
    cfg.model.alpha = num();
  } else if (key == "model.condition") {
    cfg.model.seed_condition = num();
  } else if (key == "model.mix_block") {
    cfg.model.mix_block = integer();
  } else if (key == "model.modes") {
    cfg.model.modes = integer();
  } else if (key == "model.grid_points") {
    cfg.model.grid_points = integer();
  } else if (key == "model.half_width") {
    cfg.model.box_half_width = num();
  } else if (key == "seed" || key == "model.seed") {
    const long long s = parse_int(value, line, key);
    if (s < 0) throw Error(ErrorKind::config, where(line, key) + "seed must be non-negative");
    cfg.model.seed = static_cast<std::uint64_t>(s);
  } else if (key == "dims") {
    cfg.dims.clear();
    for (const auto& d : split_list(value)) cfg.dims.push_back(static_cast<int>(parse_int(d, line, key)));
  } else if (key == "checks") {
    cfg.checks.clear();
    for (const auto& c : split_list(value)) {
      if (c == "all") {
        cfg.checks = all_check_groups();
        continue;
      }
      if (!is_check_name(c))
        throw Error(ErrorKind::config, where(line, key) + "unknown check '" + c + "'");
      if (std::find(cfg.checks.begin(), cfg.checks.end(), c) == cfg.checks.end()) cfg.checks.push_back(c);
    }
  } else if (key.starts_with("tol.")) {
    const std::string name = key.substr(4);
    if (!cfg.tolerances.contains(name)) throw Error(ErrorKind::config, where(line, key) + "unknown tolerance '" + name + "'");
    const double v = num();
    if (!(v > 0.0)) throw Error(ErrorKind::config, where(line, key) + "tolerance overrides must be positive");
    cfg.tolerances[name] = v;
  } else if (key == "coherent.z_max") {
    cfg.coherent_z = num();
  } else if (key == "quadrature.r_max") {
    cfg.quadrature.r_max = num();
  } else if (key == "quadrature.radial") {
    cfg.quadrature.radial = integer();
  } else if (key == "quadrature.angular") {
    cfg.quadrature.angular = integer();
  } else if (key == "quadrature.doublings") {
    cfg.quadrature.doublings = integer();
  } else if (key == "quadrature.trust") {
    cfg.quadrature_trust = integer();
  } else if (key == "metric.trust") {
    cfg.metric_trust = integer();
  } else if (key == "output.csv") {
    cfg.csv = parse_bool(value, line, key);
  } else if (key == "expect") {
    if (value != "pass" && value != "fail")
      throw Error(ErrorKind::config, where(line, key) + "expected pass or fail, got '" + value + "'");
    cfg.expect = value;
  } else {
    throw Error(ErrorKind::config, where(line, key) + "unknown key");
  }
}

/// Checks the cross-field invariants once all settings are in.
inline void validate(const RunConfig& cfg) {
  if (cfg.dims.empty()) throw Error(ErrorKind::config, "dims must not be empty");
  for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
    if (cfg.dims[i] < 4) throw Error(ErrorKind::config, "every dim must be at least 4");
    if (i > 0 && cfg.dims[i] <= cfg.dims[i - 1]) throw Error(ErrorKind::config, "dims must be strictly increasing");
  }
  if (!(cfg.coherent_z >= 0.0)) throw Error(ErrorKind::config, "coherent.z_max must be non-negative");
  if (!(cfg.quadrature.r_max > 0.0) || cfg.quadrature.radial < 1 || cfg.quadrature.angular < 1 ||
      cfg.quadrature.doublings < 0)
    throw Error(ErrorKind::config, "quadrature settings must be positive");
  if (cfg.quadrature_trust < 1 || cfg.metric_trust < 1) throw Error(ErrorKind::config, "trust settings must be positive");
  try {
    for (int d : cfg.dims) validate(cfg.model.with_dim(d));
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("model: ") + e.what());
  }
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::config, "line " + std::to_string(line) + ": expected 'key = value', got '" + text + "'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::config, "line " + std::to_string(line) + ": empty key");
    apply_setting(cfg, key, value, line);
  }
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config '" + path + "'");
  try {
    return parse_config(in);
  } catch (const Error& e) {
    std::string_view msg = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (msg.starts_with(prefix)) msg.remove_prefix(prefix.size());
    throw Error(e.kind(), path + ": " + std::string(msg), e.value());
  }
}

/// Effective settings as ordered key/value text, echoed into every report.
inline std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("name", cfg.name);
  out.emplace_back("model.kind", std::string(to_string(cfg.model.kind)));
  out.emplace_back("model.modes", std::to_string(cfg.model.modes));
  switch (cfg.model.kind) {
    case ModelKind::extended_oscillator: out.emplace_back("model.beta", num(cfg.model.beta)); break;
    case ModelKind::swanson:
      out.emplace_back("model.theta", num(cfg.model.theta));
      out.emplace_back("model.alpha", num(std::abs(cfg.model.alpha)));
      break;
    case ModelKind::riesz_seeded:
      out.emplace_back("model.condition", num(cfg.model.seed_condition));
      out.emplace_back("model.mix_block", std::to_string(cfg.model.mix_block));
      out.emplace_back("model.seed", std::to_string(cfg.model.seed));
      break;
    case ModelKind::counterexample:
      out.emplace_back("model.grid_points", std::to_string(cfg.model.grid_points));
      out.emplace_back("model.half_width", num(cfg.model.box_half_width));
      break;
    case ModelKind::bosons: break;
  }
  std::string dims, checks;
  for (int d : cfg.dims) dims += (dims.empty() ? "" : ",") + std::to_string(d);
  for (const auto& c : cfg.checks) checks += (checks.empty() ? "" : ",") + c;
  out.emplace_back("dims", dims);
  out.emplace_back("checks", checks);
  out.emplace_back("coherent.z_max", num(cfg.coherent_z));
  out.emplace_back("quadrature.r_max", num(cfg.quadrature.r_max));
  out.emplace_back("quadrature.radial", std::to_string(cfg.quadrature.radial));
  out.emplace_back("quadrature.angular", std::to_string(cfg.quadrature.angular));
  out.emplace_back("quadrature.doublings", std::to_string(cfg.quadrature.doublings));
  out.emplace_back("quadrature.trust", std::to_string(cfg.quadrature_trust));
  out.emplace_back("metric.trust", std::to_string(cfg.metric_trust));
  out.emplace_back("output.csv", cfg.csv ? "true" : "false");
  out.emplace_back("expect", cfg.expect);
  return out;
}

// ---------------------------------------------------------------------------
// Report

enum class Status { pass, fail, not_applicable, error };

inline constexpr std::string_view to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::not_applicable: return "not-applicable";
    case Status::error: return "error";
  }
  return "error";
}

struct CheckRecord {
  std::string group;
  std::string name;
  int dim = 0;
  int trust = 0;
  Status status = Status::not_applicable;
  std::optional<double> residual;
  std::optional<double> threshold;
  std::string cause;
  std::vector<std::pair<std::string, double>> detail;
};

struct GrowthRow {
  int dim = 0;
  double lower = 0.0;
  double upper = 0.0;
  double condition = 0.0;
};

struct NormRow {
  std::string label;
  double phi = 0.0;
  double psi = 0.0;
  double product = 0.0;
};

struct QuadratureRow {
  int dim = 0;
  int radial = 0;
  int angular = 0;
  double defect = 0.0;
  double change = 0.0;
};

struct Report {
  RunConfig config;
  std::vector<CheckRecord> records;
  std::vector<GrowthRow> growth;
  std::string classification = "not-run";
  std::vector<NormRow> norm_profile;
  int norm_profile_dim = 0;
  std::vector<QuadratureRow> quadrature;

  int count(Status s) const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [s](const auto& r) { return r.status == s; }));
  }
  /// 0 iff no record failed or errored.
  int exit_code() const { return count(Status::fail) + count(Status::error) == 0 ? 0 : 1; }
  std::string outcome() const { return exit_code() == 0 ? "pass" : "fail"; }
};

namespace detail {

inline CheckRecord record(std::string group, std::string name, int dim, int trust) {
  CheckRecord r;
  r.group = std::move(group);
  r.name = std::move(name);
  r.dim = dim;
  r.trust = trust;
  return r;
}

inline CheckRecord judged(std::string group, std::string name, int dim, int trust, double residual, double threshold) {
  CheckRecord r = record(std::move(group), std::move(name), dim, trust);
  r.residual = residual;
  r.threshold = threshold;
  r.status = residual <= threshold ? Status::pass : Status::fail;
  return r;
}

inline CheckRecord skipped(std::string group, std::string name, int dim, std::string cause) {
  CheckRecord r = record(std::move(group), std::move(name), dim, 0);
  r.status = Status::not_applicable;
  r.cause = std::move(cause);
  return r;
}

/// Runs `body`, turning library errors into a single error record.
inline void guarded(std::vector<CheckRecord>& out, const std::string& group, const std::string& name, int dim, int trust,
                    const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    CheckRecord r = record(group, name, dim, trust);
    r.status = Status::error;
    r.cause = e.what();
    if (std::isfinite(e.value()) && e.value() != 0.0) r.detail.emplace_back("error_value", e.value());
    out.push_back(std::move(r));
  }
}

inline bool has_closed_forms(const ModelSpec& m) {
  return m.modes == 1 && (m.kind == ModelKind::extended_oscillator || m.kind == ModelKind::swanson);
}

/// Which groups and records a check list asks for.
struct Selection {
  std::vector<std::string> checks;
  bool listed(const std::string& c) const { return std::find(checks.begin(), checks.end(), c) != checks.end(); }
  bool wants(const std::string& g, const std::string& name) const { return listed(g) || listed(g + "." + name); }
  bool has(const std::string& g) const {
    const auto& names = check_records().at(g);
    return std::any_of(names.begin(), names.end(), [&](const std::string& n) { return wants(g, n); });
  }
};

inline void run_counterexample(const RunConfig& cfg, Report& rep) {
  const ModelSpec& m = cfg.model;
  const int dim = m.grid_points;
  const auto& tol = cfg.tolerances;
  const Selection sel{cfg.checks};
  for (const auto& group : all_check_groups()) {
    if (!sel.has(group)) continue;
    if (group != "assumptions") {
      for (const auto& name : check_records().at(group))
        if (sel.wants(group, name)) rep.records.push_back(skipped(group, name, dim, "no-vacuum"));
      continue;
    }
    guarded(rep.records, group, "commutator", dim, dim - 2, [&] {
      const auto demo = counterexample_demo(m);
      if (sel.wants(group, "commutator")) {
        auto r = judged(group, "commutator", dim, dim - 2, demo.commutator_defect, tol.at("grid_commutator"));
        r.detail = {{"spacing", demo.spacing}, {"defect_half_spacing", demo.commutator_defect_half}};
        rep.records.push_back(std::move(r));
      }
      if (sel.wants(group, "vacuum")) {
        CheckRecord v = record(group, "vacuum", dim, dim - 2);
        v.status = Status::fail;
        v.cause = demo.cause;
        v.residual = demo.kernel_residual;
        v.detail = {{"kernel_dimension", double(demo.kernel_dimension)},
                    {"norm_integral", demo.norm_integral},
                    {"norm_integral_doubled_box", demo.norm_integral_doubled},
                    {"doubling_ratio", demo.ratio},
                    {"half_width", demo.half_width}};
        rep.records.push_back(std::move(v));
      }
    });
    for (const char* name : {"biorthogonality", "completeness"})
      if (sel.wants(group, name)) rep.records.push_back(skipped(group, name, dim, "no-vacuum"));
  }
  rep.classification = "no-vacuum";
}

inline std::string label_text(const std::vector<int>& n) {
  std::string s;
  for (int j : n) s += (s.empty() ? "" : ":") + std::to_string(j);
  return s;
}

}  // namespace detail

/// Executes the requested checks for each dim in ascending order. Numeric
/// errors become status=error records; the remaining checks still run.
inline Report run_checks(const RunConfig& cfg) {
  validate(cfg);
  Report rep;
  rep.config = cfg;
  if (cfg.model.kind == ModelKind::counterexample) {
    detail::run_counterexample(cfg, rep);
    return rep;
  }
  const auto& tol = cfg.tolerances;
  const detail::Selection sel{cfg.checks};
  auto has = [&](const std::string& g) { return sel.has(g); };
  auto wants = [&](const std::string& g, const std::string& name) { return sel.wants(g, name); };
  std::vector<GrowthSample> growth;

  for (int dim : cfg.dims) {
    const ModelSpec m = cfg.model.with_dim(dim);
    const PseudoBosonPair pair = instantiate(m);
    const int trust = default_trust(dim);
    const int quarter = std::max(2, dim / 4);
    // partial-sum checks need the series to settle on the block, so they use a smaller one
    const int eighth = std::max(2, dim / 8);
    const int n_bio = std::min(16, clean_n_max(dim, trust));
    std::optional<BiorthogonalSystem> bio;
    std::string vacuum_cause;
    try {
      bio = build_system(pair, n_bio);
    } catch (const Error& e) {
      vacuum_cause = std::string(to_string(e.kind()));
    }
    auto need_bio = [&](const std::string& group, const std::string& name) {
      if (bio) return true;
      rep.records.push_back(detail::skipped(group, name, dim, "upstream " + vacuum_cause));
      return false;
    };

    if (has("assumptions")) {
      const std::string g = "assumptions";
      if (wants(g, "commutator"))
        detail::guarded(rep.records, g, "commutator", dim, trust, [&] {
          auto d = commutation_defects(pair, trust);
          auto r = detail::judged(g, "commutator", dim, trust, std::max(d.canonical, d.cross), tol.at("commutator"));
          r.detail = {{"canonical", d.canonical}, {"cross", d.cross}};
          rep.records.push_back(std::move(r));
        });
      if (!wants(g, "vacuum")) {
      } else if (!bio) {
        CheckRecord v = detail::record(g, "vacuum", dim, trust);
        v.status = Status::fail;
        v.cause = vacuum_cause;
        rep.records.push_back(std::move(v));
      } else {
        const double kr = std::max(bio->phi_vacuum.kernel_residual, bio->psi_vacuum.kernel_residual);
        rep.records.push_back(detail::judged(g, "vacuum", dim, trust, kr, tol.at("vacuum")));
      }
      if (wants(g, "biorthogonality") && need_bio(g, "biorthogonality")) {
        auto r = detail::judged(g, "biorthogonality", dim, trust, gram_deviation(*bio), tol.at("biorthogonality"));
        r.detail = {{"n_max", double(n_bio)}};
        rep.records.push_back(std::move(r));
      }
      if (wants(g, "completeness") && need_bio(g, "completeness"))
        detail::guarded(rep.records, g, "completeness", dim, eighth, [&] {
          const int n = clean_n_max(dim, eighth);
          auto r = detail::judged(g, "completeness", dim, eighth, basis_completeness(build_system(pair, n), eighth),
                                  tol.at("completeness"));
          r.detail = {{"n_max", double(n)}};
          rep.records.push_back(std::move(r));
        });
    }

    if (has("eigen") && need_bio("eigen", "eigen")) {
      auto e = eigen_check(*bio, pair, trust);
      auto r = detail::judged("eigen", "eigen", dim, trust, e.max(), tol.at("eigen"));
      r.detail = {{"phi", e.max_phi}, {"psi", e.max_psi}, {"n_max", double(n_bio)}};
      rep.records.push_back(std::move(r));
    }

    if (has("frames") && need_bio("frames", "frames")) {
      const std::string g = "frames";
      if (wants(g, "frame_bounds"))
        detail::guarded(rep.records, g, "frame_bounds", dim, trust, [&] {
          const auto rpt = frame_report(build_system(pair, clean_n_max(dim, trust)), trust);
          const double rel_herm = rpt.hermiticity / rpt.bounds.upper;
          auto r = detail::judged(g, "frame_bounds", dim, trust, rel_herm, tol.at("frame_hermiticity"));
          r.detail = {{"lower", rpt.bounds.lower},
                      {"upper", rpt.bounds.upper},
                      {"condition", rpt.bounds.condition},
                      {"partial_sum_change", rpt.convergence.max()},
                      {"inverse_defect", rpt.inverse_defect}};
          rep.records.push_back(std::move(r));
          rep.growth.push_back({dim, rpt.bounds.lower, rpt.bounds.upper, rpt.bounds.condition});
          growth.push_back({dim, rpt.bounds.condition});
        });
      if (wants(g, "mutual_mapping"))
        detail::guarded(rep.records, g, "mutual_mapping", dim, eighth, [&] {
          const auto sys = build_system(pair, clean_n_max(dim, eighth));
          const auto f = frame_operators(sys, eighth);
          const int n_check = std::max(1, eighth / 2);
          const auto mm = mutual_mapping_check(f.s_phi, f.s_psi, sys, eighth, n_check);
          auto r = detail::judged(g, "mutual_mapping", dim, eighth, mm.max(), tol.at("mutual_mapping"));
          r.detail = {{"phi", mm.phi}, {"psi", mm.psi}, {"n_check", double(n_check)}};
          rep.records.push_back(std::move(r));
        });
      if (wants(g, "intertwine"))
        detail::guarded(rep.records, g, "intertwine", dim, quarter, [&] {
          const auto f = frame_operators(build_system(pair, clean_n_max(dim, quarter)), quarter);
          const double scale_psi = norm2(f.s_psi.restricted(quarter)), scale_phi = norm2(f.s_phi.restricted(quarter));
          double worst = 0.0;
          for (int j = 0; j < pair.modes(); ++j) {
            worst = std::max(worst, intertwine_residual(f.s_psi, pair.number(j), pair.number_dual(j), quarter) / scale_psi);
            worst = std::max(worst, intertwine_residual(f.s_phi, pair.number_dual(j), pair.number(j), quarter) / scale_phi);
          }
          rep.records.push_back(detail::judged(g, "intertwine", dim, quarter, worst, tol.at("intertwine")));
        });
    }

    if (has("bosonize") && need_bio("bosonize", "bosonize")) {
      const std::string g = "bosonize";
      detail::guarded(rep.records, g, "bosonize", dim, trust, [&] {
        const auto sys = build_system(pair, trust - 1);
        const auto w = bosonize(pair, sys, frame_operators(sys, trust).s_phi);
        auto r = detail::judged(g, "bosonize", dim, w.headline, w.residual(), tol.at("bosonize"));
        r.detail = {{"residual_a", w.residual_a},
                    {"residual_b", w.residual_b},
                    {"residual_full_block", std::max(w.residual_a_full, w.residual_b_full)},
                    {"block", double(w.block)},
                    {"symmetrization", w.symmetrization}};
        if (wants(g, "bosonize")) rep.records.push_back(std::move(r));
        if (wants(g, "orthonormality"))
          rep.records.push_back(detail::judged(g, "orthonormality", dim, trust, w.orthonormality, tol.at("orthonormality")));
      });
    }

    if (has("coherent") && need_bio("coherent", "coherent")) {
      const std::string g = "coherent";
      detail::guarded(rep.records, g, "coherent", dim, trust, [&] {
        const auto sys = build_system(pair, clean_n_max(dim, trust));
        const double z = cfg.coherent_z;
        const std::vector<cplx> samples{cplx(0.0), std::polar(0.5 * z, 0.3), std::polar(z, 0.0),
                                        std::polar(z, std::numbers::pi / 3), std::polar(z, std::numbers::pi)};
        double worst = 0.0, tail = 0.0;
        for (cplx s : samples) {
          const std::vector<cplx> zz(static_cast<std::size_t>(pair.modes()), s);
          const auto st = coherent_build(sys, zz, CoherentOptions{tol.at("coherent_tail")});
          worst = std::max(worst, eigen_relation_check(st, pair, trust).max());
          tail = std::max(tail, st.tail_bound);
        }
        auto r = detail::judged(g, "coherent", dim, trust, worst, tol.at("coherent"));
        r.detail = {{"z_max", z}, {"tail_bound", tail}, {"n_max", double(sys.n_max)}};
        rep.records.push_back(std::move(r));
      });
    }

    if (has("quadrature") && need_bio("quadrature", "quadrature")) {
      const std::string g = "quadrature";
      const int tq = std::min(cfg.quadrature_trust, trust);
      detail::guarded(rep.records, g, "quadrature", dim, tq, [&] {
        if (pair.modes() > 1 && dim > 12)
          throw Error(ErrorKind::quadrature, "two-mode quadrature is limited to per-mode dim 12");
        const auto sys = build_system(pair, std::min(dim - 2, 2 * trust - 1));
        QuadratureSpec q = cfg.quadrature;
        q.tol = tol.at("quadrature_change");
        try {
          const auto res = identity_resolution_quadrature(sys, tq, q);
          auto r = detail::judged(g, "quadrature", dim, tq, res.defect_identity, tol.at("quadrature"));
          r.detail = {{"defect_phi", res.defect_phi},
                      {"defect_psi", res.defect_psi},
                      {"radial_tail", res.radial_tail},
                      {"integrand_growth", res.growth}};
          for (const auto& s : res.trace) rep.quadrature.push_back({dim, s.radial, s.angular, s.defect, s.change});
          rep.records.push_back(std::move(r));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::quadrature) throw;
          CheckRecord r = detail::record(g, "quadrature", dim, tq);
          r.status = Status::error;
          r.cause = e.what();
          r.detail = {{"integrand_growth", e.value()}};
          rep.records.push_back(std::move(r));
        }
      });
    }

    if (has("hamiltonian")) {
      const std::string g = "hamiltonian";
      if (!detail::has_closed_forms(m)) {
        for (const char* name : {"hamiltonian", "spectrum"})
          if (wants(g, name)) rep.records.push_back(detail::skipped(g, name, dim, "no Hamiltonian for this model"));
      } else {
        if (wants(g, "hamiltonian")) {
          const auto f = hamiltonian_factor_check(m, pair, trust);
          auto r = detail::judged(g, "hamiltonian", dim, trust, f.residual, tol.at("hamiltonian"));
          r.detail = {{m.kind == ModelKind::swanson ? "omega" : "gamma", f.constant}};
          rep.records.push_back(std::move(r));
        }
        if (wants(g, "spectrum") && need_bio(g, "spectrum")) {
          const auto s = spectral_check(m, *bio, trust);
          auto rs = detail::judged(g, "spectrum", dim, trust, std::max({s.max_error, s.eigen_residual, s.max_imag}),
                                   tol.at("spectrum"));
          rs.detail = {{"levels", double(s.levels)},
                       {"max_imag", s.max_imag},
                       {"max_error", s.max_error},
                       {"section_eigen_error", s.section_eigen_error}};
          rep.records.push_back(std::move(rs));
        }
      }
    }

    if (has("metric")) {
      const std::string g = "metric";
      const int tm = std::min(cfg.metric_trust, quarter);
      if (!detail::has_closed_forms(m)) {
        rep.records.push_back(detail::skipped(g, "metric", dim, "no closed-form metric for this model"));
      } else if (need_bio(g, "metric")) {
        detail::guarded(rep.records, g, "metric", dim, tm, [&] {
          const auto sys = build_system(pair, clean_n_max(dim, tm));
          const auto a = metric_agreement(explicit_metric(m), frame_operators(sys, tm).s_phi, sys, tm);
          auto r = detail::judged(g, "metric", dim, tm, a.relative, tol.at("metric"));
          r.detail = {{"gauge", a.gauge}, {"mapping", a.mapping}, {"hermiticity", a.hermiticity}};
          rep.records.push_back(std::move(r));
        });
      }
    }

    if (bio && dim == cfg.dims.back()) {
      rep.norm_profile_dim = dim;
      for (int k = 0; k < bio->count(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        rep.norm_profile.push_back(
            {detail::label_text(bio->labels[ks]), bio->phi_norms[ks], bio->psi_norms[ks], bio->norm_profile[ks]});
      }
    }
  }

  if (sel.wants("frames", "frame_bounds")) {
    if (growth.size() != cfg.dims.size()) {
      rep.classification = "inconclusive";
    } else {
      try {
        rep.classification =
            std::string(to_string(classify_regularity(growth, ClassifyOptions{tol.at("rho_flat"), tol.at("rho_grow")})));
      } catch (const Error& e) {
        rep.classification = std::string(to_string(e.kind()));
      }
    }
  }
  return rep;
}

}  // namespace pbosons
