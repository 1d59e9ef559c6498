#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gnls/errors.hpp"
#include "gnls/harness/config.hpp"
#include "gnls/harness/experiments.hpp"
#include "gnls/simd/kernels.hpp"

using namespace gnls;
using namespace gnls::harness;
using nlohmann::json;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gnls_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json base(const char* kind) { return {{"schema_version", 1}, {"kind", kind}}; }

// Small transform-check run that finishes in well under a second.
ExperimentConfig quick_transform_check(const std::string& out) {
  json doc = base("transform-check");
  doc["graph"] = {{"length", 32.0}, {"grid", 512}};
  doc["transform_check"] = {{"edge_counts", {2, 3}}, {"bank_size", 3}, {"slow_grid", 64}};
  doc["output_dir"] = out;
  return parse_config(doc, ExperimentKind::transform_check);
}

}  // namespace

TEST(Config, KindNames) {
  for (auto k : {ExperimentKind::transform_check, ExperimentKind::evolve, ExperimentKind::final_state,
                 ExperimentKind::ivp_scatter, ExperimentKind::failure_scan}) {
    EXPECT_EQ(parse_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_kind("evolv"), ConfigError);
}

TEST(Config, FailClosedParsing) {
  const auto k = ExperimentKind::evolve;
  EXPECT_NO_THROW(parse_config(base("evolve"), k));
  auto doc = base("evolve");
  doc["colour"] = 1;
  EXPECT_THROW(parse_config(doc, k), ConfigError);
  doc = base("evolve");
  doc["graph"] = {{"edges", 3}, {"legnth", 10.0}};
  EXPECT_THROW(parse_config(doc, k), ConfigError);
  doc = base("evolve");
  doc["graph"] = {{"edges", 2.5}};
  EXPECT_THROW(parse_config(doc, k), ConfigError);
  doc = base("evolve");
  doc["evolution"] = {{"nonlinear", "yes"}};
  EXPECT_THROW(parse_config(doc, k), ConfigError);
  doc = base("evolve");
  doc["schema_version"] = 2;
  EXPECT_THROW(parse_config(doc, k), ConfigError);
  doc.erase("schema_version");
  EXPECT_THROW(parse_config(doc, k), ConfigError);
  EXPECT_THROW(parse_config(base("final-state"), k), ConfigError);
  EXPECT_THROW(parse_config(json::array(), k), ConfigError);
  doc = base("evolve");
  doc["fit_window"] = {1.0, 2.0, 3.0};
  EXPECT_THROW(parse_config(doc, k), ConfigError);
}

TEST(Config, ValuesAndOverrides) {
  auto doc = base("final-state");
  doc["graph"] = {{"edges", 5}};
  doc["final_state"] = {{"T", 10.0}, {"T_max", 200.0}};
  auto c = parse_config(doc, ExperimentKind::final_state);
  EXPECT_EQ(c.graph.edges, 5);
  EXPECT_EQ(c.graph.grid, default_config(ExperimentKind::final_state).graph.grid);
  EXPECT_EQ(c.fit_window[0], 10.0);
  EXPECT_EQ(c.fit_window[1], 200.0);
  Overrides o;
  o.tmax = 400.0;
  o.alpha = 0.35;
  o.out = "elsewhere";
  apply_overrides(c, o);
  EXPECT_EQ(c.final_state.T_max, 400.0);
  EXPECT_EQ(c.final_state.alpha, 0.35);
  EXPECT_EQ(c.output_dir, "elsewhere");
  EXPECT_NO_THROW(validate(c));

  auto f = default_config(ExperimentKind::failure_scan);
  Overrides p;
  p.power = 1.0;
  p.tmax = 500.0;
  apply_overrides(f, p);
  EXPECT_EQ(f.failure.powers, std::vector<double>{1.0});
  EXPECT_EQ(f.evolution.t_end, 500.0);

  auto t = default_config(ExperimentKind::transform_check);
  Overrides e;
  e.edges = 4;
  apply_overrides(t, e);
  EXPECT_EQ(t.transform_check.edge_counts, std::vector<int>{4});
}

TEST(Config, Validation) {
  for (auto k : {ExperimentKind::transform_check, ExperimentKind::evolve, ExperimentKind::final_state,
                 ExperimentKind::ivp_scatter, ExperimentKind::failure_scan}) {
    EXPECT_NO_THROW(validate(default_config(k))) << to_string(k);
  }
  auto c = default_config(ExperimentKind::evolve);
  c.fit_window = {1.0, 50.0};
  EXPECT_THROW(validate(c), ConfigError);
  c = default_config(ExperimentKind::evolve);
  c.evolution.lambda = 2;
  EXPECT_THROW(validate(c), ConfigError);
  c = default_config(ExperimentKind::final_state);
  c.final_state.alpha = 0.2;
  EXPECT_THROW(validate(c), ConfigError);
  c = default_config(ExperimentKind::final_state);
  c.final_state.T_max = 100.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = default_config(ExperimentKind::evolve);
  c.data.preset = "sombrero";
  EXPECT_THROW(validate(c), ConfigError);
  c.data.preset = "bump";
  c.data.edges = {7};
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, CanonicalFormAndHash) {
  const auto a = default_config(ExperimentKind::evolve);
  auto b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  // The canonical form parses back to the same configuration.
  const auto c = parse_config(to_json(a), ExperimentKind::evolve);
  EXPECT_EQ(to_json(c).dump(), to_json(a).dump());
  const auto schema = describe_schema();
  EXPECT_EQ(schema["schema_version"], kSchemaVersion);
  EXPECT_TRUE(schema["fields"].contains("final_state.alpha"));
  EXPECT_EQ(schema["defaults"].size(), 5u);
}

TEST(Data, Presets) {
  const StarGraph g(3, 20.0, 256);
  DataSpec s;
  s.width = 2.0;
  s.amplitude = 0.5;
  const auto gauss = make_data<Domain::space>(s, g);
  EXPECT_EQ(kirchhoff_residual(gauss).continuity_defect, 0.0);
  EXPECT_NEAR(lp_norm(gauss, kInf), 0.5, 0.05);

  s.preset = "bump";
  s.center = 8.0;
  s.edges = {1};
  const auto bump = make_data<Domain::space>(s, g);
  EXPECT_NEAR(lp_norm(bump, kInf), 0.5, 1e-3);
  EXPECT_EQ(simd::max_abs(bump.edge(0)), 0.0);
  EXPECT_EQ(simd::max_abs(bump.edge(2)), 0.0);

  s.preset = "discontinuous";
  EXPECT_GT(kirchhoff_residual(make_data<Domain::space>(s, g)).continuity_defect, 0.5);

  s.preset = "gaussian";
  s.center = 0.0;
  s.edges.clear();
  s.sup_norm = 0.1;
  EXPECT_NEAR(lp_norm(make_data<Domain::frequency>(s, g), kInf), 0.1, 1e-15);
}

TEST(Data, SampleFile) {
  const StarGraph g(2, 10.0, 8);
  const auto dir = scratch("file");
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "ok.tsv");
    f << "# re0 im0 re1 im1\n";
    for (int m = 0; m <= 8; ++m) f << m << " 0 " << -m << " 0.5\n";
  }
  DataSpec s;
  s.preset = "file";
  s.file = (dir / "ok.tsv").string();
  const auto u = make_data<Domain::space>(s, g);
  EXPECT_EQ(u(0, 3), cplx(3.0, 0.0));
  EXPECT_EQ(u(1, 8), cplx(-8.0, 0.5));
  {
    std::ofstream f(dir / "short.tsv");
    f << "1 2 3 4\n";
  }
  s.file = (dir / "short.tsv").string();
  EXPECT_THROW(make_data<Domain::space>(s, g), ConfigError);
  s.file = (dir / "missing.tsv").string();
  EXPECT_THROW(make_data<Domain::space>(s, g), ConfigError);
}

TEST(Bank, DeterministicContinuousSmooth) {
  const StarGraph g(3, 64.0, 1024);
  const auto a = smooth_bank(g, 4, 9);
  const auto b = smooth_bank(g, 4, 9);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(l2_norm(a[i] - b[i]), 0.0);
    EXPECT_LT(kirchhoff_residual(a[i]).continuity_defect, 1e-12);
  }
  EXPECT_GT(l2_norm(a[0] - a[1]), 0.1);
  EXPECT_GT(l2_norm(a[0] - smooth_bank(g, 1, 10)[0]), 0.1);
}

TEST(Execute, TransformCheckIsDeterministic) {
  const auto dir = scratch("determinism");
  std::ostringstream err;
  auto cfg = quick_transform_check((dir / "a").string());
  EXPECT_EQ(execute(cfg, err), kExitPass) << err.str();
  cfg.output_dir = (dir / "b").string();
  EXPECT_EQ(execute(cfg, err), kExitPass);
  const auto sa = slurp(dir / "a" / "series.tsv");
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, slurp(dir / "b" / "series.tsv"));
  // Reports differ only in output_dir, which enters the config and its hash.
  auto ra = json::parse(slurp(dir / "a" / "report.json"));
  auto rb = json::parse(slurp(dir / "b" / "report.json"));
  for (auto* r : {&ra, &rb}) {
    r->erase("config");
    r->erase("config_hash");
  }
  EXPECT_EQ(ra.dump(), rb.dump());
  EXPECT_EQ(ra["pass"], true);
  for (const auto& v : ra["verdicts"]) {
    EXPECT_TRUE(v.contains("threshold"));
    EXPECT_TRUE(v.contains("window"));
    EXPECT_TRUE(v.contains("comparison"));
  }
}

TEST(Execute, ExitCodes) {
  const auto dir = scratch("exit");
  std::ostringstream err;

  auto bad = quick_transform_check((dir / "config").string());
  bad.graph.edges = 1;
  EXPECT_EQ(execute(bad, err), kExitConfigError);
  const auto record = json::parse(slurp(dir / "config" / "error.json"));
  EXPECT_EQ(record["error"]["type"], "config_error");
  EXPECT_EQ(record["error"]["exit_code"], kExitConfigError);

  // A wide Gaussian has not started to disperse by t = 100: the decay verdict fails.
  auto slow = default_config(ExperimentKind::evolve);
  slow.graph = {3, 400.0, 1024};
  slow.data.width = 20.0;
  slow.evolution.nonlinear = false;
  slow.output_dir = (dir / "verdict").string();
  EXPECT_EQ(execute(slow, err), kExitVerdictFail);
  EXPECT_EQ(json::parse(slurp(dir / "verdict" / "report.json"))["pass"], false);

  auto breach = default_config(ExperimentKind::evolve);
  breach.graph = {3, 8.0, 64};
  breach.evolution.t_end = 10.0;
  breach.evolution.dt = 0.01;
  breach.evolution.abort_on_support_breach = true;
  breach.fit_window = {0.05, 10.0};
  breach.output_dir = (dir / "abort").string();
  EXPECT_EQ(execute(breach, err), kExitNumericalAbort);
  EXPECT_EQ(json::parse(slurp(dir / "abort" / "error.json"))["error"]["type"], "numerical_abort");
}

TEST(Execute, FinalStateWithZeroDataPasses) {
  const auto dir = scratch("zero");
  auto c = default_config(ExperimentKind::final_state);
  c.graph = {3, 800.0, 2048};
  c.data.amplitude = 0.0;
  c.final_state.T = 10.0;
  c.final_state.T_max = 160.0;
  c.final_state.per_octave = 4;
  c.output_dir = dir.string();
  std::ostringstream err;
  EXPECT_EQ(execute(c, err), kExitPass) << err.str();
  const auto r = json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(r["results"]["rho"], 0.0);
}
