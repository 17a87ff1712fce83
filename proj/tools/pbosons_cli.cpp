// pbosons command-line driver: check, sweep and demo.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbosons/report.hpp"
#include "pbosons/runner.hpp"

#ifndef PBOSONS_CONFIG_DIR
#define PBOSONS_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace pbosons;

namespace {

struct CommonArgs {
  std::string config;
  std::string model;
  std::vector<int> dims;
  std::vector<std::string> checks;
  std::vector<std::string> tols;
  std::vector<std::string> sets;
  std::string out;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "run file with key = value lines")->check(CLI::ExistingFile);
  cmd->add_option("--model", a.model, "bosons, extended_oscillator, swanson, riesz_seeded or counterexample");
  cmd->add_option("--dim", a.dims, "truncation size; repeat for several")->check(CLI::PositiveNumber);
  cmd->add_option("--check", a.checks, "check group; repeat for several, or 'all'");
  cmd->add_option("--tol", a.tols, "tolerance override NAME=VALUE");
  cmd->add_option("--set", a.sets, "config override KEY=VALUE");
  cmd->add_option("--seed", a.seed, "seed for the mixed Riesz model")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", a.out, "output directory (default: $PBOSONS_OUT_DIR or ./pbosons_out)");
}

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorKind::config, std::string(flag) + " expects KEY=VALUE, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

RunConfig resolve_config(const CommonArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (!a.model.empty()) apply_setting(cfg, "model", a.model);
  if (!a.dims.empty()) cfg.dims = a.dims;
  if (!a.checks.empty()) {
    std::string joined;
    for (const auto& c : a.checks) joined += (joined.empty() ? "" : ",") + c;
    apply_setting(cfg, "checks", joined);
  }
  if (a.seed >= 0) apply_setting(cfg, "seed", std::to_string(a.seed));
  for (const auto& s : a.sets) {
    auto [k, v] = split_assignment(s, "--set");
    apply_setting(cfg, k, v);
  }
  for (const auto& s : a.tols) {
    auto [k, v] = split_assignment(s, "--tol");
    apply_setting(cfg, "tol." + k, v);
  }
  if (cfg.checks.empty()) cfg.checks = all_check_groups();
  validate(cfg);
  return cfg;
}

fs::path out_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PBOSONS_OUT_DIR"); env && *env) return env;
  return "pbosons_out";
}

void print_summary(const Report& rep, std::ostream& os) {
  os << rep.config.name << " [" << rep.config.model.label() << "]\n";
  for (const auto& r : rep.records) {
    os << "  " << r.group << "/" << r.name << " dim=" << r.dim << " trust=" << r.trust << " " << to_string(r.status);
    if (r.residual) os << " residual=" << *r.residual;
    if (r.threshold) os << " threshold=" << *r.threshold;
    if (!r.cause.empty()) os << " (" << r.cause << ")";
    os << "\n";
  }
  os << "  classification: " << rep.classification << "\n";
  os << "  outcome: " << rep.outcome() << " (pass " << rep.count(Status::pass) << ", fail " << rep.count(Status::fail)
     << ", error " << rep.count(Status::error) << ", not-applicable " << rep.count(Status::not_applicable) << ")\n";
}

int run_check(const CommonArgs& a) {
  const RunConfig cfg = resolve_config(a);
  const Report rep = run_checks(cfg);
  const fs::path dir = out_root(a.out) / cfg.name;
  emit(rep, dir);
  print_summary(rep, std::cout);
  std::cout << "  wrote " << (dir / "report.json").string() << "\n";
  return rep.exit_code();
}

int run_sweep(const CommonArgs& a, const std::string& param, const std::vector<std::string>& values) {
  const RunConfig base = resolve_config(a);
  const fs::path root = out_root(a.out) / base.name;
  std::string csv = "value,dim,lower,upper,condition,classification,outcome\n";
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  int code = 0;
  for (const auto& v : values) {
    RunConfig cfg = base;
    apply_setting(cfg, param, v);
    cfg.name = base.name + "_" + v;
    const Report rep = run_checks(cfg);
    emit(rep, root / v);
    print_summary(rep, std::cout);
    for (const auto& g : rep.growth)
      csv += v + "," + std::to_string(g.dim) + "," + detail::csv_number(g.lower) + "," + detail::csv_number(g.upper) +
             "," + detail::csv_number(g.condition) + "," + rep.classification + "," + rep.outcome() + "\n";
    runs.push_back({{"value", v},
                    {"model", cfg.model.label()},
                    {"classification", rep.classification},
                    {"outcome", rep.outcome()}});
    code = std::max(code, rep.exit_code());
  }
  nlohmann::ordered_json j;
  j["schema_version"] = schema_version;
  j["environment"] = environment_stamp();
  j["parameter"] = param;
  j["runs"] = runs;
  detail::write_text(root / "sweep.json", j.dump(2) + "\n");
  detail::write_text(root / "sweep.csv", csv);
  std::cout << "wrote " << (root / "sweep.json").string() << "\n";
  return code;
}

int run_demo(const std::string& config_dir, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(config_dir))
    if (e.is_regular_file() && e.path().extension() == ".conf") files.push_back(e.path());
  if (files.empty()) throw Error(ErrorKind::io, "no .conf files in '" + config_dir + "'");
  std::sort(files.begin(), files.end());
  const fs::path root = out_root(out) / "demo";
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  int mismatches = 0;
  for (const auto& f : files) {
    RunConfig cfg = load_config(f.string());
    if (cfg.checks.empty()) cfg.checks = all_check_groups();
    const Report rep = run_checks(cfg);
    emit(rep, root / cfg.name);
    const bool match = rep.outcome() == cfg.expect;
    mismatches += match ? 0 : 1;
    std::cout << (match ? "MATCH    " : "MISMATCH ") << cfg.name << ": outcome " << rep.outcome() << ", expected "
              << cfg.expect << ", classification " << rep.classification << "\n";
    runs.push_back({{"name", cfg.name},
                    {"model", cfg.model.label()},
                    {"expected", cfg.expect},
                    {"outcome", rep.outcome()},
                    {"classification", rep.classification},
                    {"match", match}});
  }
  nlohmann::ordered_json j;
  j["schema_version"] = schema_version;
  j["environment"] = environment_stamp();
  j["runs"] = runs;
  j["mismatches"] = mismatches;
  detail::write_text(root / "demo_summary.json", j.dump(2) + "\n");
  std::cout << "wrote " << (root / "demo_summary.json").string() << "\n";
  return mismatches == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-section checks for pseudo-bosonic ladder operators"};
  app.require_subcommand(1);

  CommonArgs check_args;
  auto* check = app.add_subcommand("check", "run the configured checks and write a report");
  add_common(check, check_args);

  CommonArgs sweep_args;
  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "repeat the checks over values of one config key");
  add_common(sweep, sweep_args);
  sweep->add_option("--param", param, "config key to vary, e.g. model.theta")->required();
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  std::string config_dir = PBOSONS_CONFIG_DIR;
  std::string demo_out;
  auto* demo = app.add_subcommand("demo", "run the bundled configs and compare against their expected outcome");
  demo->add_option("--configs", config_dir, "directory of .conf files")->check(CLI::ExistingDirectory);
  demo->add_option("--out", demo_out, "output directory (default: $PBOSONS_OUT_DIR or ./pbosons_out)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*check) return run_check(check_args);
    if (*sweep) return run_sweep(sweep_args, param, values);
    if (*demo) return run_demo(config_dir, demo_out);
  } catch (const Error& e) {
    std::cerr << "pbosons: " << e.what() << "\n";
    return e.kind() == ErrorKind::config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "pbosons: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
