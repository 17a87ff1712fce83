#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pbosons/report.hpp"
#include "pbosons/runner.hpp"

using namespace pbosons;

namespace {

RunConfig config_of(const std::string& text) { return parse_config_text(text); }

const CheckRecord* find(const Report& rep, const std::string& name, int dim) {
  for (const auto& r : rep.records)
    if (r.name == name && r.dim == dim) return &r;
  return nullptr;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch(const std::string& leaf) {
  auto p = std::filesystem::path(::testing::TempDir()) / ("pbosons_runner_" + leaf);
  std::filesystem::remove_all(p);
  return p;
}

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    config_of(text);
    ADD_FAILURE() << "accepted: " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Config, ParsesKeysListsAndComments) {
  const auto cfg = config_of(
      "# header\n"
      "name = sw\n"
      "model = swanson   # trailing comment\n"
      "model.theta = pi/6\n"
      "dims = 8, 16 ,32\n"
      "checks = eigen, frames.intertwine\n"
      "tol.eigen = 1e-9\n"
      "output.csv = false\n");
  EXPECT_EQ(cfg.name, "sw");
  EXPECT_EQ(cfg.model.kind, ModelKind::swanson);
  EXPECT_DOUBLE_EQ(cfg.model.theta, std::numbers::pi / 6);
  EXPECT_EQ(cfg.dims, (std::vector<int>{8, 16, 32}));
  EXPECT_EQ(cfg.checks, (std::vector<std::string>{"eigen", "frames.intertwine"}));
  EXPECT_EQ(cfg.tolerances.at("eigen"), 1e-9);
  EXPECT_EQ(cfg.tolerances.at("commutator"), 1e-10);
  EXPECT_FALSE(cfg.csv);
}

TEST(Config, AllExpandsToEveryGroup) {
  EXPECT_EQ(config_of("checks = all\n").checks, all_check_groups());
}

TEST(Config, ErrorsNameLineAndKey) {
  expect_config_error("name = a\nmodel.beta = two\n", "line 2: key 'model.beta'");
  expect_config_error("model = spinor\n", "unknown model 'spinor'");
  expect_config_error("bogus = 1\n", "key 'bogus': unknown key");
  expect_config_error("dims 16\n", "line 1: expected 'key = value'");
  expect_config_error("checks = eigen, frames.nothing\n", "unknown check 'frames.nothing'");
  expect_config_error("tol.nothing = 1\n", "unknown tolerance 'nothing'");
  expect_config_error("tol.eigen = -1\n", "must be positive");
  expect_config_error("output.csv = maybe\n", "expected true or false");
  expect_config_error("dims = 16, x\n", "expected an integer");
}

TEST(Config, ValidationRejectsInconsistentSettings) {
  auto cfg = config_of("dims = 32, 16\n");
  EXPECT_THROW(validate(cfg), Error);
  cfg = config_of("model = swanson\nmodel.theta = 0.9\n");
  try {
    validate(cfg);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  EXPECT_THROW(validate(config_of("dims = 2\n")), Error);
}

TEST(Config, MissingFileIsAnIoErrorWithPath) {
  try {
    load_config("/nonexistent/run.conf");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/run.conf"), std::string::npos);
  }
}

TEST(Config, ParseErrorsCarryTheFilePath) {
  const auto dir = scratch("bad_conf");
  std::filesystem::create_directories(dir);
  const auto path = dir / "bad.conf";
  std::ofstream(path) << "model = swanson\nmodel.theta = x\n";
  try {
    load_config(path.string());
    ADD_FAILURE();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(msg.find(path.string() + ": line 2"), std::string::npos) << msg;
    EXPECT_EQ(msg.find("config: config:"), std::string::npos) << msg;
  }
}

TEST(Config, EchoParsesBackToTheSameEcho) {
  const auto cfg = config_of("model = riesz_seeded\nmodel.condition = 4\nmodel.mix_block = 6\nseed = 7\n"
                             "dims = 16, 32\nchecks = frames\ncoherent.z_max = 0.7\n");
  std::string text;
  for (const auto& [k, v] : config_echo(cfg))
    if (k != "model.modes") text += k + " = " + v + "\n";
  const auto again = config_of(text);
  EXPECT_EQ(config_echo(again), config_echo(cfg));
  for (const auto& [k, v] : config_echo(cfg))
    if (k == "coherent.z_max") {
      EXPECT_EQ(v, "0.7");
    }
}

TEST(Runner, EmptyCheckListEchoesConfigOnly) {
  const auto rep = run_checks(config_of("model = bosons\ndims = 8\nchecks = \n"));
  EXPECT_TRUE(rep.records.empty());
  EXPECT_EQ(rep.exit_code(), 0);
  const auto j = to_json(rep);
  EXPECT_EQ(j["config"]["model.kind"], "bosons");
  EXPECT_EQ(j["schema_version"], "1.0");
  EXPECT_TRUE(j["records"].empty());
  EXPECT_EQ(j["tolerances"].size(), default_tolerances().size());
}

TEST(Runner, BosonNormProfileIsAllOnes) {
  const auto rep = run_checks(config_of("model = bosons\ndims = 16, 32\nchecks = eigen\n"));
  EXPECT_EQ(rep.norm_profile_dim, 32);
  ASSERT_EQ(rep.norm_profile.size(), 16u);
  for (const auto& r : rep.norm_profile) EXPECT_NEAR(r.product, 1.0, 1e-14);
  const std::string csv = norm_profile_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,phi_norm,psi_norm,product");
  EXPECT_NE(csv.find("\n15,1.000000000000e+00,1.000000000000e+00,1.000000000000e+00\n"), std::string::npos);
}

TEST(Runner, SwansonIsClassifiedNonRegular) {
  const auto rep = run_checks(config_of("model = swanson\nmodel.theta = 0.3\ndims = 16, 32, 64\nchecks = all\n"));
  EXPECT_EQ(rep.classification, "PB-nonregular-consistent");
  ASSERT_EQ(rep.growth.size(), 3u);
  for (std::size_t i = 1; i < rep.growth.size(); ++i) EXPECT_GT(rep.growth[i].condition, rep.growth[i - 1].condition);
  EXPECT_GT(rep.growth.back().condition / rep.growth.front().condition, 4.0);
  for (int dim : {16, 32, 64}) {
    ASSERT_NE(find(rep, "commutator", dim), nullptr);
    EXPECT_EQ(find(rep, "commutator", dim)->status, Status::pass);
    EXPECT_EQ(find(rep, "intertwine", dim)->status, Status::pass);
  }
  // the divergent coherent-state integral is an error record, not an abort
  EXPECT_EQ(find(rep, "quadrature", 64)->status, Status::error);
  EXPECT_EQ(find(rep, "metric", 64)->status, Status::pass);
}

TEST(Runner, RieszSeedIsRegularAndBosonizes) {
  const auto rep = run_checks(config_of("model = riesz_seeded\nmodel.condition = 10\ndims = 16, 32, 64\n"
                                        "checks = frames.frame_bounds, bosonize\n"));
  EXPECT_EQ(rep.classification, "RPB-consistent");
  const auto* b = find(rep, "bosonize", 64);
  ASSERT_NE(b, nullptr);
  EXPECT_EQ(b->trust, 16);
  EXPECT_LT(*b->residual, 1e-7);
  EXPECT_EQ(find(rep, "orthonormality", 64)->status, Status::pass);
  EXPECT_EQ(rep.exit_code(), 0);
}

TEST(Runner, CounterexampleFailsWithNoVacuum) {
  const auto rep = run_checks(config_of("model = counterexample\nchecks = all\n"));
  const auto* v = find(rep, "vacuum", 201);
  ASSERT_NE(v, nullptr);
  EXPECT_EQ(v->status, Status::fail);
  EXPECT_EQ(v->cause, "no-vacuum");
  EXPECT_EQ(find(rep, "commutator", 201)->status, Status::pass);
  EXPECT_EQ(find(rep, "eigen", 201)->status, Status::not_applicable);
  EXPECT_EQ(rep.exit_code(), 1);
  double ratio = 0.0;
  for (const auto& [k, x] : v->detail)
    if (k == "doubling_ratio") ratio = x;
  EXPECT_NEAR(ratio, 2.0, 0.1);
}

TEST(Runner, NumericErrorsDoNotAbortLaterChecks) {
  const auto rep = run_checks(config_of("model = swanson\nmodel.theta = 0.4\ndims = 64\nchecks = quadrature, eigen\n"));
  const auto* q = find(rep, "quadrature", 64);
  ASSERT_NE(q, nullptr);
  EXPECT_EQ(q->status, Status::error);
  EXPECT_NE(q->cause.find("quadrature"), std::string::npos);
  EXPECT_EQ(find(rep, "eigen", 64)->status, Status::pass);
  EXPECT_EQ(rep.exit_code(), 1);
}

TEST(Runner, ModelsWithoutClosedFormsAreNotApplicable) {
  const auto rep = run_checks(config_of("model = bosons\ndims = 16\nchecks = hamiltonian, metric\n"));
  ASSERT_EQ(rep.records.size(), 3u);
  for (const auto& r : rep.records) EXPECT_EQ(r.status, Status::not_applicable);
  EXPECT_EQ(rep.exit_code(), 0);
}

TEST(Runner, PassingResidualsRespectThresholds) {
  for (const char* text : {"model = extended_oscillator\nmodel.beta = 2\ndims = 16, 32\nchecks = all\n",
                           "model = riesz_seeded\nmodel.condition = 4\nmodel.mix_block = 6\ndims = 16, 32\nchecks = all\n",
                           "model = bosons\nmodel.modes = 2\ndims = 6, 8\nchecks = assumptions, eigen, frames\n"}) {
    const auto rep = run_checks(config_of(text));
    EXPECT_FALSE(rep.records.empty());
    for (const auto& r : rep.records) {
      if (r.status != Status::pass) continue;
      ASSERT_TRUE(r.residual && r.threshold) << r.name;
      EXPECT_LE(*r.residual, *r.threshold) << r.name << " dim " << r.dim;
    }
  }
}

TEST(Runner, ReportsAreDeterministic) {
  const auto cfg = config_of("model = riesz_seeded\nmodel.condition = 4\nmodel.mix_block = 6\nseed = 11\n"
                             "dims = 16, 32\nchecks = all\n");
  EXPECT_EQ(to_json(run_checks(cfg)).dump(), to_json(run_checks(cfg)).dump());
  auto other = cfg;
  other.model.seed = 12;
  EXPECT_NE(norm_profile_csv(run_checks(cfg)), norm_profile_csv(run_checks(other)));
}

TEST(Emit, WritesReportAndTablesByteStably) {
  const auto cfg = config_of("name = sw\nmodel = swanson\nmodel.theta = 0.3\ndims = 16, 32, 64\nchecks = frames.frame_bounds\n");
  const auto a = scratch("emit_a"), b = scratch("emit_b");
  emit(run_checks(cfg), a);
  emit(run_checks(cfg), b);
  for (const char* f : {"report.json", "norm_profile.csv", "condition_growth.csv", "quadrature_convergence.csv"}) {
    ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
  std::istringstream growth(read_file(a / "condition_growth.csv"));
  std::string line;
  std::getline(growth, line);
  EXPECT_EQ(line, "dim,lower,upper,condition");
  double last = 0.0;
  int rows = 0;
  while (std::getline(growth, line)) {
    const double cond = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_GT(cond, last);
    last = cond;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Emit, SkipsTablesWhenDisabled) {
  const auto dir = scratch("emit_nocsv");
  emit(run_checks(config_of("model = bosons\ndims = 8\nchecks = eigen\noutput.csv = false\n")), dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "norm_profile.csv"));
}

TEST(Emit, UnwritablePathIsAnIoError) {
  const auto dir = scratch("emit_blocked");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  try {
    emit(run_checks(config_of("model = bosons\ndims = 8\nchecks = \n")), dir / "file" / "sub");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("file/sub"), std::string::npos);
  }
}
