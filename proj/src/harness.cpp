#include "numit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "numit/error.hpp"
#include "numit/parallel.hpp"

namespace numit {

// --- sweeps ---------------------------------------------------------------

SweepTable noise_sweep(const GaussianSweepConfig& cfg, std::uint64_t seed, const EnsembleOptions& opts) {
  if (cfg.g_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty g grid");
  SweepTable table;
  table.param_name = "g";
  const CovMatrix sigma_s(cfg.sigma_s);
  const CovMatrix sigma_eps(cfg.sigma_eps);
  for (std::size_t k = 0; k < cfg.g_grid.size(); ++k) {
    const GaussianPidSystem sys(cfg.a, sigma_s, sigma_eps, cfg.g_grid[k], cfg.d_x);
    SweepRow row;
    row.param = cfg.g_grid[k];
    row.atoms = pid_gaussian(sys);
    row.shares = nmi_normalize(row.atoms);
    row.quantiles = numit_normalize(sys, cfg.n_null, mix_seed(seed, k), opts);
    table.n_failed += row.quantiles.meta.n_failed;
    table.rows.push_back(row);
  }
  return table;
}

SweepTable noise_sweep(const DiscreteSweepConfig& cfg, std::uint64_t seed, const EnsembleOptions& opts) {
  if (cfg.p_eps_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty p_eps grid");
  SweepTable table;
  table.param_name = "p_eps";
  EnsembleOptions dopts = opts;
  dopts.retry_budget = std::max(opts.retry_budget, kDiscreteRetryBudget);
  for (std::size_t k = 0; k < cfg.p_eps_grid.size(); ++k) {
    const DiscreteSystem sys(cfg.pmf, cfg.gate, cfg.p_eps_grid[k]);
    SweepRow row;
    row.param = cfg.p_eps_grid[k];
    row.atoms = pid_discrete(sys);
    row.shares = nmi_normalize(row.atoms);
    const NullEnsemble ens = build_null_ensemble_discrete(
        row.atoms.tmi, cfg.n_null, mix_seed(seed, k), {.alpha = cfg.alpha, .selection = cfg.selection}, dopts);
    row.quantiles = quantiles_against(row.atoms, ens, opts.tie_rule);
    table.n_failed += ens.n_failed;
    table.rows.push_back(row);
  }
  return table;
}

std::vector<TmiSweepRow> tmi_sweep(const TmiSweepConfig& cfg, std::uint64_t seed, const EnsembleOptions& opts) {
  if (cfg.bins < 1) throw Error(ErrorKind::InvalidArgument, "histograms need at least one bin");
  std::vector<TmiSweepRow> out;
  for (std::size_t k = 0; k < cfg.tmi_grid.size(); ++k) {
    TmiSweepRow row;
    row.tmi = cfg.tmi_grid[k];
    for (auto& h : row.histograms) h.assign(cfg.bins, 0);
    if (row.tmi < 0.0) throw Error(ErrorKind::InvalidArgument, "TMI grid values must be >= 0");
    if (row.tmi == 0.0) {
      // Every atom is bounded by the TMI.
      for (auto& h : row.histograms) h[0] = cfg.n_samples;
      out.push_back(std::move(row));
      continue;
    }
    const NullEnsemble ens =
        build_null_ensemble(row.tmi, cfg.d_x, cfg.d_y, cfg.d_t, cfg.n_samples, mix_seed(seed, k), opts);
    row.n_failed = ens.n_failed;
    const double n = static_cast<double>(ens.samples.size());
    const double width = row.tmi / static_cast<double>(cfg.bins);
    auto bin = [&](double v) {
      const auto b = static_cast<std::size_t>(std::max(0.0, v) / width);
      return std::min(b, cfg.bins - 1);
    };
    for (const auto& s : ens.samples) {
      row.mean_atoms.tmi += s.tmi / n;
      row.mean_atoms.red += s.red / n;
      row.mean_atoms.un_x += s.un_x / n;
      row.mean_atoms.un_y += s.un_y / n;
      row.mean_atoms.syn += s.syn / n;
      const AtomShares sh = nmi_normalize(s);
      row.mean_shares.red += sh.red / n;
      row.mean_shares.un_x += sh.un_x / n;
      row.mean_shares.un_y += sh.un_y / n;
      row.mean_shares.syn += sh.syn / n;
      row.histograms[0][bin(s.red)] += 1;
      row.histograms[1][bin(s.un_x)] += 1;
      row.histograms[2][bin(s.un_y)] += 1;
      row.histograms[3][bin(s.syn)] += 1;
    }
    out.push_back(std::move(row));
  }
  return out;
}

// --- pipeline -------------------------------------------------------------

namespace {

TimeSeries select_columns(const TimeSeries& ts, const std::vector<std::size_t>& cols,
                          const std::vector<std::size_t>& epochs) {
  TimeSeries out;
  out.n_vars = cols.size();
  out.sample_rate = ts.sample_rate;
  for (auto e : epochs) {
    const Eigen::MatrixXd& src = ts.epochs[e];
    Eigen::MatrixXd m(src.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
      m.col(static_cast<Eigen::Index>(c)) = src.col(static_cast<Eigen::Index>(cols[c]));
    out.epochs.push_back(std::move(m));
  }
  return out;
}

// First k entries of a uniformly shuffled 0..n-1.
std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

PipelineResult pipeline_subsets(const TimeSeries& ts, const PipelineConfig& cfg, std::uint64_t seed,
                                unsigned workers) {
  if (cfg.subset_size < 2) throw Error(ErrorKind::InvalidArgument, "subset size must be >= 2");
  if (cfg.subset_size > ts.n_vars)
    throw Error(ErrorKind::TooFewVariables, "subset size " + std::to_string(cfg.subset_size) + " exceeds the " +
                                                std::to_string(ts.n_vars) + " available variables");
  if (ts.epochs.empty()) throw Error(ErrorKind::TooShortEpoch, "time series has no epochs");
  if (cfg.n_subsets < 1 || cfg.epochs < 1 || cfg.order < 1)
    throw Error(ErrorKind::InvalidArgument, "pipeline counts must be >= 1");

  struct Slot {
    std::optional<PipelineRow> row;
    bool zero_tmi = false;
    std::size_t null_failed = 0;
  };
  std::vector<Slot> slots(cfg.n_subsets);
  const std::size_t k = cfg.subset_size;
  const std::size_t kx = (k + 1) / 2;
  const std::size_t n_epochs = std::min(cfg.epochs, ts.epochs.size());

  parallel_for(cfg.n_subsets, workers, [&](std::size_t s) {
    Rng rng = make_stream(seed, s);
    const std::vector<std::size_t> vars = draw_without_replacement(ts.n_vars, k, rng);
    std::vector<std::size_t> epochs = draw_without_replacement(ts.epochs.size(), n_epochs, rng);
    std::sort(epochs.begin(), epochs.end());

    PipelineRow row;
    row.subset = s;
    row.x_vars.assign(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(kx));
    row.y_vars.assign(vars.begin() + static_cast<std::ptrdiff_t>(kx), vars.end());
    const Partition part(IndexSet::range(0, kx), IndexSet::range(kx, k - kx), k);
    try {
      const VarModel model = fit_var(select_columns(ts, vars, epochs), cfg.order);
      row.atoms = var_pid(model, part);
      if (row.atoms.tmi >= 1e-12) {
        row.shares = nmi_normalize(row.atoms);
        if (cfg.n_null > 0) {
          const NormalizedAtoms q =
              numit_normalize_var(model, part, cfg.n_null, mix_seed(seed, s, 1), {.workers = 1});
          slots[s].null_failed = q.meta.n_failed;
          row.quantiles = q;
        }
      } else {
        slots[s].zero_tmi = true;
      }
      slots[s].row = std::move(row);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidArgument) throw;
      // failed subset: counted below, not retried
    }
  });

  PipelineResult result;
  std::size_t n_shares = 0, n_quant = 0;
  for (auto& slot : slots) {
    result.n_null_failed += slot.null_failed;
    if (!slot.row) {
      ++result.n_failed;
      continue;
    }
    if (slot.zero_tmi) ++result.n_zero_tmi;
    const PipelineRow& r = *slot.row;
    result.mean_atoms.tmi += r.atoms.tmi;
    result.mean_atoms.red += r.atoms.red;
    result.mean_atoms.un_x += r.atoms.un_x;
    result.mean_atoms.un_y += r.atoms.un_y;
    result.mean_atoms.syn += r.atoms.syn;
    if (r.shares) {
      ++n_shares;
      result.mean_shares.red += r.shares->red;
      result.mean_shares.un_x += r.shares->un_x;
      result.mean_shares.un_y += r.shares->un_y;
      result.mean_shares.syn += r.shares->syn;
    }
    if (r.quantiles) {
      ++n_quant;
      result.mean_quantiles.red_q += r.quantiles->red_q;
      result.mean_quantiles.unx_q += r.quantiles->unx_q;
      result.mean_quantiles.uny_q += r.quantiles->uny_q;
      result.mean_quantiles.syn_q += r.quantiles->syn_q;
    }
    result.rows.push_back(std::move(*slot.row));
  }
  const double n_ok = static_cast<double>(result.rows.size());
  if (n_ok > 0) {
    result.mean_atoms.tmi /= n_ok;
    result.mean_atoms.red /= n_ok;
    result.mean_atoms.un_x /= n_ok;
    result.mean_atoms.un_y /= n_ok;
    result.mean_atoms.syn /= n_ok;
  }
  if (n_shares > 0) {
    const double d = static_cast<double>(n_shares);
    result.mean_shares.red /= d;
    result.mean_shares.un_x /= d;
    result.mean_shares.un_y /= d;
    result.mean_shares.syn /= d;
  }
  if (n_quant > 0) {
    const double d = static_cast<double>(n_quant);
    result.mean_quantiles.red_q /= d;
    result.mean_quantiles.unx_q /= d;
    result.mean_quantiles.uny_q /= d;
    result.mean_quantiles.syn_q /= d;
  }
  result.mean_quantiles.meta = {NullFamily::Var, cfg.n_null, seed, result.mean_atoms.tmi, result.n_null_failed};
  return result;
}

// --- configuration --------------------------------------------------------

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigParse, msg); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) config_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) config_error("'" + what + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error("'" + what + "' must be finite");
  return v;
}

std::size_t count(const Json& j, const std::string& what, std::size_t min_value) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) config_error("'" + what + "' must be an integer");
  const auto v = j.get<long long>();
  if (v < static_cast<long long>(min_value))
    config_error("'" + what + "' must be >= " + std::to_string(min_value));
  return static_cast<std::size_t>(v);
}

std::size_t count_or(const Json& j, const char* key, std::size_t fallback, std::size_t min_value) {
  return j.contains(key) ? count(j.at(key), key, min_value) : fallback;
}

double positive_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const double v = number(j.at(key), key);
  if (!(v > 0.0)) config_error(std::string("'") + key + "' must be positive");
  return v;
}

}  // namespace

void check_schema_version(const Json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  const Json& v = require(j, "schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
    config_error("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

Eigen::MatrixXd parse_matrix(const Json& j, const std::string& what) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, number(j, what));
  if (!j.is_array() || j.empty()) config_error("'" + what + "' must be a non-empty nested array");
  // A flat array is a single row.
  if (j.front().is_number()) {
    Eigen::MatrixXd m(1, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) m(0, static_cast<Eigen::Index>(c)) = number(j[c], what);
    return m;
  }
  const std::size_t rows = j.size();
  if (!j.front().is_array() || j.front().empty()) config_error("'" + what + "' rows must be arrays");
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) config_error("'" + what + "' is ragged");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], what);
  }
  return m;
}

std::vector<double> parse_grid(const Json& j, const std::string& what) {
  std::vector<double> grid;
  if (j.is_array()) {
    for (const auto& e : j) grid.push_back(number(e, what));
  } else if (j.is_object()) {
    const double from = number(require(j, "from"), what + ".from");
    const double to = number(require(j, "to"), what + ".to");
    const std::size_t num = count(require(j, "num"), what + ".num", 1);
    const std::string spacing = j.value("spacing", "linear");
    if (spacing != "linear" && spacing != "log") config_error("'" + what + ".spacing' must be linear or log");
    if (spacing == "log" && !(from > 0.0 && to > 0.0)) config_error("log grid '" + what + "' needs positive ends");
    for (std::size_t i = 0; i < num; ++i) {
      const double f = num == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(num - 1);
      grid.push_back(spacing == "log" ? std::exp(std::log(from) + f * (std::log(to) - std::log(from)))
                                      : from + f * (to - from));
    }
  } else {
    config_error("'" + what + "' must be an array or {from, to, num, spacing}");
  }
  if (grid.empty()) config_error("'" + what + "' is empty");
  return grid;
}

namespace {

struct GaussianParams {
  Eigen::MatrixXd a, sigma_s, sigma_eps;
  std::size_t d_x = 1;
};

// Either explicit matrices or {"random": {d_x, d_y, d_t, seed}} drawn from
// the null family.
GaussianParams parse_gaussian_params(const Json& j) {
  GaussianParams p;
  if (j.contains("random")) {
    const Json& r = j.at("random");
    const std::size_t dx = count(require(r, "d_x"), "random.d_x", 1);
    const std::size_t dy = count(require(r, "d_y"), "random.d_y", 1);
    const std::size_t dt = count(require(r, "d_t"), "random.d_t", 1);
    const auto seed = r.contains("seed") ? r.at("seed").get<std::uint64_t>() : std::uint64_t{0};
    Rng rng = make_stream(seed, 0);
    NullParams np = sample_null_params(dx, dy, dt, rng);
    p.a = np.a;
    p.sigma_s = np.sigma_s.entries();
    p.sigma_eps = np.sigma_eps.entries();
    p.d_x = dx;
    return p;
  }
  p.a = parse_matrix(require(j, "a"), "a");
  p.sigma_s = parse_matrix(require(j, "sigma_s"), "sigma_s");
  p.sigma_eps = j.contains("sigma_eps") ? parse_matrix(j.at("sigma_eps"), "sigma_eps")
                                        : Eigen::MatrixXd::Identity(p.a.rows(), p.a.rows());
  p.d_x = count_or(j, "d_x", 1, 1);
  return p;
}

template <class F>
auto wrap_domain_errors(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigParse) throw;
    config_error(e.what());
  } catch (const nlohmann::json::exception& e) {
    config_error(e.what());
  }
}

}  // namespace

GaussianPidSystem parse_gaussian_system(const Json& j) {
  return wrap_domain_errors([&] {
    const Json& sys = require(j, "system");
    GaussianParams p = parse_gaussian_params(sys);
    const double g = positive_or(sys, "g", 1.0);
    return GaussianPidSystem(p.a, CovMatrix(p.sigma_s), CovMatrix(p.sigma_eps), g, p.d_x);
  });
}

GaussianSweepConfig parse_gaussian_sweep(const Json& j) {
  return wrap_domain_errors([&] {
    GaussianParams p = parse_gaussian_params(require(j, "system"));
    GaussianSweepConfig cfg;
    cfg.a = p.a;
    cfg.sigma_s = p.sigma_s;
    cfg.sigma_eps = p.sigma_eps;
    cfg.d_x = p.d_x;
    cfg.g_grid = parse_grid(require(j, "g_grid"), "g_grid");
    for (double g : cfg.g_grid)
      if (!(g > 0.0)) config_error("g_grid values must be positive");
    cfg.n_null = count_or(j, "n_null", 1000, 1);
    // Validate shapes and definiteness up front.
    (void)GaussianPidSystem(cfg.a, CovMatrix(cfg.sigma_s), CovMatrix(cfg.sigma_eps), 1.0, cfg.d_x);
    return cfg;
  });
}

DiscreteSweepConfig parse_discrete_sweep(const Json& j) {
  return wrap_domain_errors([&] {
    DiscreteSweepConfig cfg;
    const Json& gate = require(j, "gate");
    if (!gate.is_string()) config_error("'gate' must be a bitstring such as \"0110\"");
    cfg.gate = Gate::parse(gate.get<std::string>());
    if (j.contains("pmf")) {
      const Json& pmf = j.at("pmf");
      if (!pmf.is_array() || pmf.size() != 4) config_error("'pmf' must hold 4 probabilities");
      cfg.pmf = JointPmf({number(pmf[0], "pmf"), number(pmf[1], "pmf"), number(pmf[2], "pmf"),
                          number(pmf[3], "pmf")});
    }
    if (j.contains("p_eps_grid")) {
      cfg.p_eps_grid = parse_grid(j.at("p_eps_grid"), "p_eps_grid");
    } else {
      cfg.p_eps_grid = {number(require(j, "p_eps"), "p_eps")};
    }
    for (double p : cfg.p_eps_grid)
      if (!(p >= 0.0 && p <= 1.0)) config_error("p_eps values must lie in [0, 1]");
    cfg.n_null = count_or(j, "n_null", 1000, 1);
    cfg.alpha = positive_or(j, "alpha", 1.0);
    const std::string sel = j.value("gate_selection", "uniform");
    if (sel == "uniform") cfg.selection = GateSelection::Uniform;
    else if (sel == "stratified") cfg.selection = GateSelection::Stratified;
    else config_error("'gate_selection' must be uniform or stratified");
    return cfg;
  });
}

TmiSweepConfig parse_tmi_sweep(const Json& j) {
  return wrap_domain_errors([&] {
    TmiSweepConfig cfg;
    cfg.tmi_grid = parse_grid(require(j, "tmi_grid"), "tmi_grid");
    for (double t : cfg.tmi_grid)
      if (!(t >= 0.0)) config_error("tmi_grid values must be >= 0");
    cfg.d_x = count_or(j, "d_x", 1, 1);
    cfg.d_y = count_or(j, "d_y", 1, 1);
    cfg.d_t = count_or(j, "d_t", 1, 1);
    cfg.n_samples = count_or(j, "n_samples", 10000, 1);
    cfg.bins = count_or(j, "bins", 50, 1);
    return cfg;
  });
}

VarModel parse_var_model(const Json& j) {
  return wrap_domain_errors([&] {
    const Json& coeffs = require(j, "coeffs");
    if (!coeffs.is_array() || coeffs.empty()) config_error("'coeffs' must be a non-empty list of matrices");
    std::vector<Eigen::MatrixXd> a;
    // A single matrix is accepted as a VAR(1).
    if (coeffs.front().is_array() && !coeffs.front().empty() && coeffs.front().front().is_number()) {
      a.push_back(parse_matrix(coeffs, "coeffs"));
    } else {
      for (const auto& m : coeffs) a.push_back(parse_matrix(m, "coeffs"));
    }
    const Eigen::Index n = a.front().rows();
    Eigen::MatrixXd v = j.contains("resid_cov") ? parse_matrix(j.at("resid_cov"), "resid_cov")
                                                : Eigen::MatrixXd::Identity(n, n);
    return VarModel(std::move(a), CovMatrix(std::move(v)));
  });
}

PipelineConfig parse_pipeline(const Json& j) {
  return wrap_domain_errors([&] {
    PipelineConfig cfg;
    cfg.subset_size = count_or(j, "subset_size", 10, 2);
    cfg.n_subsets = count_or(j, "n_subsets", 1000, 1);
    cfg.epochs = count_or(j, "epochs", 50, 1);
    cfg.order = count_or(j, "order", 1, 1);
    cfg.n_null = count_or(j, "n_null", 100, 0);
    return cfg;
  });
}

// --- serialisation --------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x == 0.0 ? 0.0 : x);
  return buf;
}

namespace {

void check_row(const SweepRow& r) {
  const PidAtoms& a = r.atoms;
  if (std::abs(a.sum() - a.tmi) > 1e-9 * std::max(1.0, a.tmi))
    throw Error(ErrorKind::InconsistentInformation, "atoms do not sum to TMI");
  const double share_sum = r.shares.red + r.shares.un_x + r.shares.un_y + r.shares.syn;
  if (a.tmi > 0.0 && std::abs(share_sum - 1.0) > 1e-9)
    throw Error(ErrorKind::InconsistentInformation, "NMI shares do not sum to one");
  for (double q : {r.quantiles.red_q, r.quantiles.unx_q, r.quantiles.uny_q, r.quantiles.syn_q})
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::InconsistentInformation, "quantile outside [0, 1]");
}

void join(std::ostream& os, std::initializer_list<double> values) {
  for (double v : values) os << ',' << format_number(v);
}

}  // namespace

void write_sweep_csv(std::ostream& os, const SweepTable& table) {
  for (const auto& r : table.rows) check_row(r);
  std::ostringstream buf;
  buf << table.param_name
      << ",tmi,red,un_x,un_y,syn,red_nmi,unx_nmi,uny_nmi,syn_nmi,red_numit,unx_numit,uny_numit,syn_numit\n";
  for (const auto& r : table.rows) {
    buf << format_number(r.param);
    join(buf, {r.atoms.tmi, r.atoms.red, r.atoms.un_x, r.atoms.un_y, r.atoms.syn, r.shares.red, r.shares.un_x,
               r.shares.un_y, r.shares.syn, r.quantiles.red_q, r.quantiles.unx_q, r.quantiles.uny_q,
               r.quantiles.syn_q});
    buf << '\n';
  }
  os << buf.str();
}

void write_tmi_sweep_csv(std::ostream& os, const std::vector<TmiSweepRow>& rows) {
  os << "tmi,red,un_x,un_y,syn,red_nmi,unx_nmi,uny_nmi,syn_nmi,n_failed\n";
  for (const auto& r : rows) {
    os << format_number(r.tmi);
    join(os, {r.mean_atoms.red, r.mean_atoms.un_x, r.mean_atoms.un_y, r.mean_atoms.syn, r.mean_shares.red,
              r.mean_shares.un_x, r.mean_shares.un_y, r.mean_shares.syn});
    os << ',' << r.n_failed << '\n';
  }
}

void write_histograms_csv(std::ostream& os, const std::vector<TmiSweepRow>& rows) {
  static constexpr const char* names[4] = {"red", "un_x", "un_y", "syn"};
  os << "tmi,atom,bin_lo,bin_hi,count\n";
  for (const auto& r : rows) {
    for (std::size_t a = 0; a < 4; ++a) {
      const auto& h = r.histograms[a];
      const double width = r.tmi / static_cast<double>(h.size());
      for (std::size_t b = 0; b < h.size(); ++b)
        os << format_number(r.tmi) << ',' << names[a] << ',' << format_number(width * static_cast<double>(b))
           << ',' << format_number(width * static_cast<double>(b + 1)) << ',' << h[b] << '\n';
    }
  }
}

void write_pipeline_csv(std::ostream& os, const PipelineResult& result) {
  auto vars = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
  };
  const double nan = std::nan("");
  os << "subset,x_vars,y_vars,tmi,red,un_x,un_y,syn,red_nmi,unx_nmi,uny_nmi,syn_nmi,"
        "red_numit,unx_numit,uny_numit,syn_numit\n";
  for (const auto& r : result.rows) {
    const AtomShares sh = r.shares.value_or(AtomShares{nan, nan, nan, nan});
    NormalizedAtoms q;
    q.red_q = q.unx_q = q.uny_q = q.syn_q = nan;
    if (r.quantiles) q = *r.quantiles;
    os << r.subset << ',' << vars(r.x_vars) << ',' << vars(r.y_vars);
    join(os, {r.atoms.tmi, r.atoms.red, r.atoms.un_x, r.atoms.un_y, r.atoms.syn, sh.red, sh.un_x, sh.un_y, sh.syn,
              q.red_q, q.unx_q, q.uny_q, q.syn_q});
    os << '\n';
  }
  const PidAtoms& m = result.mean_atoms;
  const AtomShares& s = result.mean_shares;
  const NormalizedAtoms& q = result.mean_quantiles;
  os << "mean,,";
  join(os, {m.tmi, m.red, m.un_x, m.un_y, m.syn, s.red, s.un_x, s.un_y, s.syn, q.red_q, q.unx_q, q.uny_q, q.syn_q});
  os << '\n';
}

void write_regression_csv(std::ostream& os, const RegressionFit& fit,
                          const std::vector<std::pair<std::string, SummaryStats>>& ttests) {
  os << "term,estimate,std_err,p_value\n";
  for (std::size_t k = 0; k < 4; ++k)
    os << "beta" << k << ',' << format_number(fit.beta[k]) << ',' << format_number(fit.std_err[k]) << ','
       << format_number(fit.p_values[k]) << '\n';
  os << "r_nmi," << format_number(fit.r_nmi) << ",,\n";
  os << "r_numit," << format_number(fit.r_numit) << ",,\n";
  for (const auto& [name, st] : ttests)
    os << "mean_" << name << ',' << format_number(st.mean) << ','
       << format_number(st.std / std::sqrt(static_cast<double>(fit.n))) << ',' << format_number(st.p) << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigParse, "line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
  }
}

}  // namespace

TimeSeries read_timeseries_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::ConfigParse, "time-series CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "epoch" || header[1] != "t")
    throw Error(ErrorKind::ConfigParse, "time-series header must be epoch,t,v0,...");
  const std::size_t n = header.size() - 2;

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> rows;
  std::map<std::string, double> last_t;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::ConfigParse, "line " + std::to_string(line_no) + " has the wrong number of fields");
    const std::string& epoch = cells[0];
    const double t = parse_cell(cells[1], line_no);
    if (!rows.contains(epoch)) order.push_back(epoch);
    else if (!(t > last_t[epoch]))
      throw Error(ErrorKind::ConfigParse, "line " + std::to_string(line_no) + ": t must increase within an epoch");
    last_t[epoch] = t;
    std::vector<double> v(n);
    for (std::size_t c = 0; c < n; ++c) {
      v[c] = parse_cell(cells[c + 2], line_no);
      if (!std::isfinite(v[c]))
        throw Error(ErrorKind::ConfigParse, "line " + std::to_string(line_no) + " has a non-finite value");
    }
    rows[epoch].push_back(std::move(v));
  }
  TimeSeries ts;
  ts.n_vars = n;
  for (const auto& e : order) {
    const auto& r = rows[e];
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t c = 0; c < n; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r[i][c];
    ts.epochs.push_back(std::move(m));
  }
  if (ts.epochs.empty()) throw Error(ErrorKind::ConfigParse, "time-series CSV has no data rows");
  return ts;
}

void write_timeseries_csv(std::ostream& os, const TimeSeries& ts) {
  os << "epoch,t";
  for (std::size_t c = 0; c < ts.n_vars; ++c) os << ",v" << c;
  os << '\n';
  for (std::size_t e = 0; e < ts.epochs.size(); ++e) {
    const auto& m = ts.epochs[e];
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      os << e << ',' << t;
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << format_number(m(t, c));
      os << '\n';
    }
  }
}

std::vector<std::pair<std::string, std::vector<double>>> read_columns_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::ConfigParse, "CSV is empty");
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  for (auto& name : split_csv_line(line)) cols.emplace_back(name, std::vector<double>{});
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != cols.size())
      throw Error(ErrorKind::ConfigParse, "line " + std::to_string(line_no) + " has the wrong number of fields");
    for (std::size_t c = 0; c < cells.size(); ++c) cols[c].second.push_back(parse_cell(cells[c], line_no));
  }
  return cols;
}

}  // namespace numit
