#include "gnls/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gnls/errors.hpp"

namespace gnls::harness {

using nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::transform_check, "transform-check"}, {ExperimentKind::evolve, "evolve"},
    {ExperimentKind::final_state, "final-state"},         {ExperimentKind::ivp_scatter, "ivp-scatter"},
    {ExperimentKind::failure_scan, "failure-scan"},
};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where.empty() ? what : where + ": " + what);
}

// Reads the keys of one JSON object and rejects any it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  void read(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(at(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(at(key), "must be finite");
    }
  }
  void read(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(at(key), "expected an integer");
      const auto x = v->get<long long>();
      if (x < -2147483647LL || x > 2147483647LL) fail(at(key), "integer out of range");
      out = static_cast<int>(x);
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) fail(at(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <class T>
  void read(const char* key, std::vector<T>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(at(key), "expected an array");
      std::vector<T> tmp;
      for (const auto& e : *v) {
        if constexpr (std::is_same_v<T, int>) {
          if (!e.is_number_integer()) fail(at(key), "expected integers");
        } else {
          if (!e.is_number()) fail(at(key), "expected numbers");
        }
        tmp.push_back(e.get<T>());
      }
      out = std::move(tmp);
    }
  }
  void read(const char* key, std::array<double, 2>& out) {
    std::vector<double> v;
    if (!has(key)) return;
    read(key, v);
    if (v.size() != 2) fail(at(key), "expected [lo, hi]");
    out = {v[0], v[1]};
  }

  std::optional<Section> child(const char* key) {
    if (const json* v = take(key)) return Section(*v, at(key));
    return std::nullopt;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(path_, "unknown key '" + key + "'");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool rate_fit_kind(ExperimentKind k) { return k == ExperimentKind::evolve || k == ExperimentKind::ivp_scatter; }

}  // namespace

ExperimentKind parse_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (name == k.name) return k.kind;
  }
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

const char* to_string(ExperimentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::transform_check:
      c.graph = {3, 64.0, 4096};
      break;
    case ExperimentKind::evolve:
      c.graph = {3, 1600.0, 8192};
      break;
    case ExperimentKind::final_state:
      c.graph = {3, 2560.0, 8192};
      c.data.width = 1.0;
      c.data.tilt = 0.5;
      c.data.amplitude = 1.0;
      c.data.sup_norm = 0.1;
      c.fit_window = {c.final_state.T, c.final_state.T_max};
      break;
    case ExperimentKind::ivp_scatter:
      c.graph = {3, 20000.0, 16384};
      c.data.width = 4.0;
      c.evolution.t_end = 4096.0;
      c.evolution.growth = "proportional";
      c.fit_window = {10.0, 1000.0};
      break;
    case ExperimentKind::failure_scan:
      c.graph = {3, 6000.0, 8192};
      c.data.width = 4.0;
      c.evolution.t_end = 1024.0;
      c.evolution.growth = "proportional";
      c.fit_window = {c.failure.T, c.evolution.t_end};
      break;
  }
  return c;
}

ExperimentConfig parse_config(const json& doc, ExperimentKind kind, const std::filesystem::path& base_dir) {
  ExperimentConfig c = default_config(kind);
  Section root(doc, "");
  int version = -1;
  root.read("schema_version", version);
  if (version != kSchemaVersion) {
    fail("schema_version", "expected " + std::to_string(kSchemaVersion) + (version < 0 ? " (missing)" : ""));
  }
  std::string kind_name = to_string(kind);
  root.read("kind", kind_name);
  if (parse_kind(kind_name) != kind) fail("kind", "config is for '" + kind_name + "', not '" + to_string(kind) + "'");

  if (auto s = root.child("graph")) {
    s->read("edges", c.graph.edges);
    s->read("length", c.graph.length);
    s->read("grid", c.graph.grid);
    s->finish();
  }
  if (auto s = root.child("data")) {
    auto& d = c.data;
    s->read("preset", d.preset);
    s->read("center", d.center);
    s->read("width", d.width);
    s->read("amplitude", d.amplitude);
    s->read("tilt", d.tilt);
    s->read("edges", d.edges);
    s->read("sup_norm", d.sup_norm);
    s->read("file", d.file);
    s->finish();
    if (!d.file.empty() && std::filesystem::path(d.file).is_relative() && !base_dir.empty()) {
      d.file = (base_dir / d.file).lexically_normal().string();
    }
  }
  if (auto s = root.child("evolution")) {
    auto& e = c.evolution;
    s->read("nonlinear", e.nonlinear);
    s->read("lambda", e.lambda);
    s->read("power", e.power);
    s->read("t_end", e.t_end);
    s->read("dt", e.dt);
    s->read("growth", e.growth);
    s->read("max_dt", e.max_dt);
    s->read("snapshots_per_octave", e.snapshots_per_octave);
    s->read("abort_on_support_breach", e.abort_on_support_breach);
    s->finish();
  }
  const bool window_given = root.has("fit_window");
  root.read("fit_window", c.fit_window);
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  if (auto s = root.child("final_state")) {
    auto& f = c.final_state;
    s->read("alpha", f.alpha);
    s->read("T", f.T);
    s->read("T_max", f.T_max);
    s->read("per_octave", f.per_octave);
    s->read("max_iters", f.max_iters);
    s->read("tol", f.tol);
    s->read("nonlinear", f.nonlinear);
    s->read("calibration_scales", f.calibration_scales);
    s->read("calibration_starts", f.calibration_starts);
    s->finish();
  }
  if (auto s = root.child("failure")) {
    auto& f = c.failure;
    s->read("powers", f.powers);
    s->read("T", f.T);
    s->read("t_ref", f.t_ref);
    s->finish();
  }
  if (auto s = root.child("transform_check")) {
    auto& t = c.transform_check;
    s->read("edge_counts", t.edge_counts);
    s->read("bank_size", t.bank_size);
    s->read("slow_grid", t.slow_grid);
    s->finish();
  }
  root.finish();

  // Windows tied to other fields follow them unless given explicitly.
  if (!window_given) {
    if (kind == ExperimentKind::final_state) c.fit_window = {c.final_state.T, c.final_state.T_max};
    if (kind == ExperimentKind::failure_scan) c.fit_window = {c.failure.T, c.evolution.t_end};
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file, ExperimentKind kind) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, false);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + file.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, kind, file.parent_path());
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  if (o.edges) {
    c.graph.edges = *o.edges;
    c.transform_check.edge_counts = {*o.edges};
  }
  if (o.grid) c.graph.grid = *o.grid;
  if (o.length) c.graph.length = *o.length;
  if (o.lambda) c.evolution.lambda = *o.lambda;
  if (o.power) {
    c.evolution.power = *o.power;
    c.failure.powers = {*o.power};
  }
  if (o.alpha) c.final_state.alpha = *o.alpha;
  if (o.tmax) {
    if (c.kind == ExperimentKind::final_state) {
      c.final_state.T_max = *o.tmax;
      c.fit_window[1] = *o.tmax;
    } else {
      c.evolution.t_end = *o.tmax;
      if (c.kind == ExperimentKind::failure_scan) c.fit_window[1] = *o.tmax;
    }
  }
  if (o.out) c.output_dir = *o.out;
}

void validate(const ExperimentConfig& c) {
  require(c.graph.edges >= 2, "graph.edges must be at least 2");
  require(c.graph.grid >= 8, "graph.grid must be at least 8");
  require(c.graph.length > 0.0, "graph.length must be positive");

  const auto& d = c.data;
  require(d.preset == "gaussian" || d.preset == "bump" || d.preset == "discontinuous" || d.preset == "file",
          "data.preset must be gaussian, bump, discontinuous or file");
  require(d.width > 0.0, "data.width must be positive");
  require(d.sup_norm >= 0.0, "data.sup_norm must be non-negative");
  for (int j : d.edges) require(j >= 0 && j < c.graph.edges, "data.edges lists an edge the graph does not have");
  require(d.preset != "file" || !d.file.empty(), "data.file is required for the file preset");

  const auto& e = c.evolution;
  require(e.lambda == 1 || e.lambda == -1, "evolution.lambda must be +1 or -1");
  require(e.power > 0.0, "evolution.power must be positive");
  require(e.t_end > 0.0, "evolution.t_end must be positive");
  require(e.dt > 0.0 && e.dt <= e.t_end, "evolution.dt must lie in (0, t_end]");
  require(e.growth == "fixed" || e.growth == "proportional", "evolution.growth must be fixed or proportional");
  require(e.max_dt >= 0.0, "evolution.max_dt must be non-negative");
  require(e.snapshots_per_octave >= 1, "evolution.snapshots_per_octave must be at least 1");

  require(c.fit_window[0] > 0.0 && c.fit_window[1] > c.fit_window[0], "fit_window must satisfy 0 < lo < hi");
  if (rate_fit_kind(c.kind)) {
    require(c.fit_window[1] >= 100.0 * c.fit_window[0] * (1.0 - 1e-12), "fit_window must span at least two decades");
    require(c.fit_window[1] <= e.t_end * (1.0 + 1e-12), "fit_window must end before evolution.t_end");
  }
  if (c.kind == ExperimentKind::ivp_scatter) {
    require(e.t_end > 1.0, "ivp-scatter needs evolution.t_end > 1");
    require(e.nonlinear, "ivp-scatter needs a nonlinear evolution");
  }

  const auto& f = c.final_state;
  require(f.alpha > 0.25 && f.alpha < 0.5, "final_state.alpha must lie in (1/4, 1/2)");
  require(f.T > 0.0 && f.T_max > f.T, "final_state needs 0 < T < T_max");
  require(f.per_octave >= 1 && f.max_iters >= 1, "final_state.per_octave and max_iters must be positive");
  require(f.tol > 0.0, "final_state.tol must be positive");
  for (double s : f.calibration_scales) require(s > 0.0, "final_state.calibration_scales must be positive");
  for (double s : f.calibration_starts) require(s > 0.0, "final_state.calibration_starts must be positive");
  if (c.kind == ExperimentKind::final_state) {
    require(f.T_max >= 16.0 * f.T * (1.0 - 1e-12), "final_state.T_max must be at least 16 T");
  }

  require(!c.failure.powers.empty(), "failure.powers must not be empty");
  for (double p : c.failure.powers) require(p > 0.0, "failure.powers must be positive");
  require(c.failure.T >= 1.0, "failure.T must be at least 1");
  require(c.failure.t_ref >= 0.0, "failure.t_ref must be non-negative");
  if (c.kind == ExperimentKind::failure_scan) {
    require(e.t_end >= 10.0 * c.failure.T * (1.0 - 1e-12), "failure-scan needs evolution.t_end >= 10 T");
    require(c.failure.t_ref == 0.0 || (c.failure.t_ref >= 1.0 && c.failure.t_ref <= e.t_end),
            "failure.t_ref must lie in [1, t_end]");
  }

  const auto& t = c.transform_check;
  require(!t.edge_counts.empty(), "transform_check.edge_counts must not be empty");
  for (int n : t.edge_counts) require(n >= 2, "transform_check.edge_counts must be at least 2");
  require(t.bank_size >= 1, "transform_check.bank_size must be positive");
  require(t.slow_grid >= 8 && t.slow_grid <= 1024, "transform_check.slow_grid must lie in [8, 1024]");
}

json to_json(const ExperimentConfig& c) {
  json j = json::object();
  j["schema_version"] = kSchemaVersion;
  j["kind"] = to_string(c.kind);
  j["graph"] = {{"edges", c.graph.edges}, {"length", c.graph.length}, {"grid", c.graph.grid}};
  const auto& d = c.data;
  j["data"] = {{"preset", d.preset},       {"center", d.center}, {"width", d.width},
               {"amplitude", d.amplitude}, {"tilt", d.tilt},     {"edges", d.edges},
               {"sup_norm", d.sup_norm},   {"file", d.file}};
  const auto& e = c.evolution;
  j["evolution"] = {{"nonlinear", e.nonlinear},
                    {"lambda", e.lambda},
                    {"power", e.power},
                    {"t_end", e.t_end},
                    {"dt", e.dt},
                    {"growth", e.growth},
                    {"max_dt", e.max_dt},
                    {"snapshots_per_octave", e.snapshots_per_octave},
                    {"abort_on_support_breach", e.abort_on_support_breach}};
  j["fit_window"] = {c.fit_window[0], c.fit_window[1]};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  const auto& f = c.final_state;
  j["final_state"] = {{"alpha", f.alpha},
                      {"T", f.T},
                      {"T_max", f.T_max},
                      {"per_octave", f.per_octave},
                      {"max_iters", f.max_iters},
                      {"tol", f.tol},
                      {"nonlinear", f.nonlinear},
                      {"calibration_scales", f.calibration_scales},
                      {"calibration_starts", f.calibration_starts}};
  j["failure"] = {{"powers", c.failure.powers}, {"T", c.failure.T}, {"t_ref", c.failure.t_ref}};
  j["transform_check"] = {{"edge_counts", c.transform_check.edge_counts},
                          {"bank_size", c.transform_check.bank_size},
                          {"slow_grid", c.transform_check.slow_grid}};
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json describe_schema() {
  json fields = json::object();
  auto doc = [&](const char* key, const char* type, const char* text) {
    fields[key] = {{"type", type}, {"description", text}};
  };
  doc("schema_version", "integer", "must equal the tool's schema version");
  doc("kind", "string", "optional; must match the command-line kind");
  doc("graph.edges", "integer >= 2", "number of half-line edges");
  doc("graph.length", "number > 0", "truncation length L of every edge");
  doc("graph.grid", "integer >= 8", "grid intervals N per edge (N + 1 samples)");
  doc("data.preset", "string", "gaussian | bump | discontinuous | file");
  doc("data.center", "number", "bump center on the edge");
  doc("data.width", "number > 0", "Gaussian width");
  doc("data.amplitude", "number", "peak amplitude before sup_norm rescaling");
  doc("data.tilt", "number", "gaussian preset: odd perpendicular part tilt * c_j * y / width, sum c_j = 0");
  doc("data.edges", "integer array", "edges carrying data (gaussian: empty = all; bump: first entry)");
  doc("data.sup_norm", "number >= 0", "if > 0, rescale the data to this sup norm");
  doc("data.file", "string",
      "file preset: N + 1 rows of 2n numbers (re, im per edge), '#' starts a comment; relative to the config file");
  doc("evolution.nonlinear", "boolean", "false: free evolution (evolve kind only)");
  doc("evolution.lambda", "+1 | -1", "sign of the nonlinearity, +1 focusing");
  doc("evolution.power", "number > 0", "exponent p in |u|^p u");
  doc("evolution.t_end", "number > 0", "final time");
  doc("evolution.dt", "number > 0", "time step (proportional growth: dt * max(1, t))");
  doc("evolution.growth", "string", "fixed | proportional");
  doc("evolution.max_dt", "number >= 0", "step cap, 0 for none");
  doc("evolution.snapshots_per_octave", "integer >= 1", "geometric snapshots from t = 1");
  doc("evolution.abort_on_support_breach", "boolean", "abort (exit 3) instead of warning on support loss");
  doc("fit_window", "[lo, hi]", "time window of rate fits; two decades or more for evolve and ivp-scatter");
  doc("seed", "integer >= 0", "random seed (transform-check function bank)");
  doc("output_dir", "string", "directory receiving report.json and series.tsv");
  doc("final_state.alpha", "number in (1/4, 1/2)", "weight exponent of the X norm");
  doc("final_state.T", "number > 0", "start of the time window");
  doc("final_state.T_max", "number >= 16 T", "truncation time of the integral equation");
  doc("final_state.per_octave", "integer >= 1", "time grid density");
  doc("final_state.max_iters", "integer >= 1", "Picard iteration cap");
  doc("final_state.tol", "number > 0", "relative increment at which the iteration stops");
  doc("final_state.nonlinear", "boolean", "false drops both Duhamel terms");
  doc("final_state.calibration_scales", "number array", "amplitude scales of the calibration sweep");
  doc("final_state.calibration_starts", "number array", "start times T of the calibration sweep");
  doc("failure.powers", "number array", "exponents p scanned");
  doc("failure.T", "number >= 1", "start of the pairing integral");
  doc("failure.t_ref", "number >= 0", "time at which the test function is built, 0 for sqrt(T t_end)");
  doc("transform_check.edge_counts", "integer array", "star sizes checked");
  doc("transform_check.bank_size", "integer >= 1", "random smooth functions per star");
  doc("transform_check.slow_grid", "integer in [8, 1024]", "grid of the fast vs slow path comparison");

  json defaults = json::object();
  for (const auto& k : kKinds) defaults[k.name] = to_json(default_config(k.kind));
  return {{"schema_version", kSchemaVersion}, {"fields", fields}, {"defaults", defaults}};
}

}  // namespace gnls::harness
