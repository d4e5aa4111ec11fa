#include "numit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "numit/error.hpp"
#include "numit/harness.hpp"

namespace numit {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
};

struct RunContext {
  std::string command;
  Json config;
  fs::path config_dir;
  std::uint64_t seed = 0;
  EnsembleOptions opts;
  Json counts = Json::object();
};

[[noreturn]] void usage_error(const std::string& msg) { throw Error(ErrorKind::ConfigParse, msg); }

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("NUMIT_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const std::string s(env);
    if (s.front() == '-') throw std::invalid_argument(s);
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    usage_error(std::string("NUMIT_SEED is not an unsigned integer: ") + env);
  }
}

Json load_config(const std::string& path) {
  if (path.empty()) usage_error("--config is required");
  std::ifstream in(path);
  if (!in) usage_error("cannot open config file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    usage_error(path + ": " + e.what());
  }
  check_schema_version(j);
  return j;
}

fs::path resolve_path(const RunContext& ctx, const std::string& key) {
  if (!ctx.config.contains(key) || !ctx.config.at(key).is_string())
    usage_error("config field '" + key + "' must be a file path");
  fs::path p = ctx.config.at(key).get<std::string>();
  return p.is_relative() ? ctx.config_dir / p : p;
}

std::size_t field_count(const Json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    usage_error(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

// --- subcommands; each renders its primary output into a string -----------

std::string run_pid(RunContext& ctx) {
  const GaussianPidSystem sys = parse_gaussian_system(ctx.config);
  const PidAtoms a = pid_gaussian(sys);
  std::ostringstream os;
  os << "tmi,red,un_x,un_y,syn,red_nmi,unx_nmi,uny_nmi,syn_nmi\n";
  const AtomShares s = a.tmi >= 1e-12 ? nmi_normalize(a) : AtomShares{};
  os << format_number(a.tmi);
  for (double v : {a.red, a.un_x, a.un_y, a.syn, s.red, s.un_x, s.un_y, s.syn}) os << ',' << format_number(v);
  os << '\n';
  return os.str();
}

std::string run_normalize(RunContext& ctx) {
  const GaussianPidSystem sys = parse_gaussian_system(ctx.config);
  SweepTable t;
  t.param_name = "g";
  SweepRow row;
  row.param = sys.g;
  row.atoms = pid_gaussian(sys);
  row.shares = nmi_normalize(row.atoms);
  row.quantiles = numit_normalize(sys, field_count(ctx.config, "n_null", 1000), ctx.seed, ctx.opts);
  t.n_failed = row.quantiles.meta.n_failed;
  t.rows.push_back(row);
  ctx.counts["n_failed"] = t.n_failed;
  std::ostringstream os;
  write_sweep_csv(os, t);
  return os.str();
}

std::string run_discrete(RunContext& ctx) {
  const SweepTable t = noise_sweep(parse_discrete_sweep(ctx.config), ctx.seed, ctx.opts);
  ctx.counts["n_failed"] = t.n_failed;
  std::ostringstream os;
  write_sweep_csv(os, t);
  return os.str();
}

std::string run_sweep_noise(RunContext& ctx) {
  const std::string family = ctx.config.value("family", "gaussian");
  if (family == "discrete") return run_discrete(ctx);
  if (family != "gaussian") usage_error("'family' must be gaussian or discrete");
  const SweepTable t = noise_sweep(parse_gaussian_sweep(ctx.config), ctx.seed, ctx.opts);
  ctx.counts["n_failed"] = t.n_failed;
  std::ostringstream os;
  write_sweep_csv(os, t);
  return os.str();
}

std::string run_sweep_tmi(RunContext& ctx, const std::string& out_path) {
  const auto rows = tmi_sweep(parse_tmi_sweep(ctx.config), ctx.seed, ctx.opts);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.n_failed;
  ctx.counts["n_failed"] = failed;
  std::ostringstream os;
  write_tmi_sweep_csv(os, rows);
  if (!out_path.empty()) {
    std::ostringstream hist;
    write_histograms_csv(hist, rows);
    std::ofstream(out_path + ".hist.csv", std::ios::binary) << hist.str();
  }
  return os.str();
}

std::string run_var_pid(RunContext& ctx) {
  const VarModel m = parse_var_model(ctx.config);
  const std::size_t n = m.dim();
  std::optional<Partition> part;
  try {
    if (ctx.config.contains("x")) {
      std::vector<std::size_t> x = ctx.config.at("x").get<std::vector<std::size_t>>();
      std::vector<std::size_t> y;
      for (std::size_t v = 0; v < n; ++v)
        if (std::find(x.begin(), x.end(), v) == x.end()) y.push_back(v);
      part.emplace(IndexSet(std::move(x)), IndexSet(std::move(y)), n);
    } else {
      const std::size_t dx = field_count(ctx.config, "d_x", (n + 1) / 2);
      part.emplace(IndexSet::range(0, dx), IndexSet::range(dx, n - std::min(dx, n)), n);
    }
  } catch (const Error& e) {
    usage_error(std::string("bad partition: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    usage_error(std::string("bad partition: ") + e.what());
  }
  const PidAtoms a = var_pid(m, *part);
  SweepTable t;
  t.param_name = "rho";
  SweepRow row;
  row.param = spectral_radius(companion_matrix(m));
  row.atoms = a;
  row.shares = nmi_normalize(a);
  row.quantiles = numit_normalize_var(m, *part, field_count(ctx.config, "n_null", 1000), ctx.seed, ctx.opts);
  t.n_failed = row.quantiles.meta.n_failed;
  t.rows.push_back(row);
  ctx.counts["n_failed"] = t.n_failed;
  std::ostringstream os;
  write_sweep_csv(os, t);
  return os.str();
}

std::string run_var_simulate(RunContext& ctx) {
  const VarModel m = parse_var_model(ctx.config);
  const std::size_t steps = field_count(ctx.config, "steps", 1000);
  const std::size_t burn_in = field_count(ctx.config, "burn_in", 1000);
  const std::size_t epochs = field_count(ctx.config, "epochs", 1);
  if (steps == 0 || epochs == 0) usage_error("'steps' and 'epochs' must be positive");
  Rng rng = make_stream(ctx.seed, 0);
  const TimeSeries ts = simulate_var(m, steps, burn_in, rng, epochs);
  std::ostringstream os;
  write_timeseries_csv(os, ts);
  return os.str();
}

std::string run_pipeline(RunContext& ctx) {
  const PipelineConfig cfg = parse_pipeline(ctx.config);
  const fs::path data = resolve_path(ctx, "data");
  std::ifstream in(data);
  if (!in) usage_error("cannot open time-series file: " + data.string());
  const TimeSeries ts = read_timeseries_csv(in);
  const PipelineResult r = pipeline_subsets(ts, cfg, ctx.seed, ctx.opts.workers);
  ctx.counts["n_failed"] = r.n_failed;
  ctx.counts["n_zero_tmi"] = r.n_zero_tmi;
  ctx.counts["n_null_failed"] = r.n_null_failed;
  std::ostringstream os;
  write_pipeline_csv(os, r);
  return os.str();
}

std::string run_regress(RunContext& ctx) {
  const fs::path data = resolve_path(ctx, "data");
  std::ifstream in(data);
  if (!in) usage_error("cannot open data file: " + data.string());
  const auto cols = read_columns_csv(in);
  auto column = [&](const std::string& name) -> const std::vector<double>& {
    for (const auto& [n, v] : cols)
      if (n == name) return v;
    usage_error(data.string() + " has no column '" + name + "'");
  };
  const std::string mode = ctx.config.value("standardization", "per_group");
  if (mode != "per_group" && mode != "global") usage_error("'standardization' must be per_group or global");
  const RegressionFit fit =
      interaction_regression(column("x_nmi"), column("x_numit"), column("y_nmi"), column("y_numit"),
                             mode == "global" ? Standardization::Global : Standardization::PerGroup);
  std::vector<std::pair<std::string, SummaryStats>> ttests;
  for (const auto& [name, values] : cols) ttests.emplace_back(name, summary_stats(values));
  std::ostringstream os;
  write_regression_csv(os, fit, ttests);
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"NuMIT: partial information decomposition with null-model normalisation", "numit"};
  app.require_subcommand(1);
  CommonOptions common;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"pid", "PID atoms of a Gaussian system"},
      {"normalize", "PID atoms of a Gaussian system with NMI and NuMIT normalisation"},
      {"sweep-noise", "atoms over a noise grid (gaussian g or discrete p_eps)"},
      {"sweep-tmi", "null-ensemble atom means and histograms over a TMI grid"},
      {"var-pid", "PID and NuMIT of a VAR model"},
      {"var-simulate", "simulate a VAR model to a time-series CSV"},
      {"discrete", "PID and NuMIT of a noisy logic gate"},
      {"pipeline", "repeated random-subset VAR analysis of a time-series CSV"},
      {"regress", "interaction regression and t-tests on paired atom columns"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config_path, "JSON config file")->required();
    sub->add_option("--out", common.out_path, "output CSV (stdout if omitted)");
    sub->add_option("--seed", common.seed, "master seed (falls back to NUMIT_SEED, then 0)");
    sub->add_option("--workers", common.workers, "worker threads, 0 = all cores")->default_val(0);
  }

  if (argc > 1 && argv[1][0] != '-' &&
      std::ranges::none_of(commands, [&](const auto& c) { return c.first == argv[1]; })) {
    std::cerr << "unknown subcommand: " << argv[1] << "\n\n" << app.help();
    return 2;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    RunContext ctx;
    ctx.command = command;
    ctx.config = load_config(common.config_path);
    ctx.config_dir = fs::path(common.config_path).parent_path();
    ctx.seed = resolve_seed(common.seed);
    ctx.opts.workers = common.workers;

    std::string output;
    if (command == "pid") output = run_pid(ctx);
    else if (command == "normalize") output = run_normalize(ctx);
    else if (command == "sweep-noise") output = run_sweep_noise(ctx);
    else if (command == "sweep-tmi") output = run_sweep_tmi(ctx, common.out_path);
    else if (command == "var-pid") output = run_var_pid(ctx);
    else if (command == "var-simulate") output = run_var_simulate(ctx);
    else if (command == "discrete") output = run_discrete(ctx);
    else if (command == "pipeline") output = run_pipeline(ctx);
    else output = run_regress(ctx);

    if (common.out_path.empty()) {
      std::cout << output;
      return 0;
    }
    write_file(common.out_path, output);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json meta = {{"command", command},      {"config", ctx.config},     {"seed", ctx.seed},
                 {"workers", common.workers}, {"counts", ctx.counts}, {"wall_time_s", wall}};
    write_file(common.out_path + ".meta.json", meta.dump(2) + "\n");
    return 0;
  } catch (const Error& e) {
    std::cerr << "numit " << command << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::ConfigParse ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "numit " << command << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace numit
