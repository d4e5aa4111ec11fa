#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "numit/discrete.hpp"
#include "numit/gaussian.hpp"
#include "numit/null_model.hpp"
#include "numit/pid.hpp"
#include "numit/stats.hpp"
#include "numit/var.hpp"

namespace numit {

using Json = nlohmann::json;

constexpr int kSchemaVersion = 1;

/// One grid point of a sweep: raw atoms, TMI shares, and null-model quantiles.
struct SweepRow {
  double param = 0.0;
  PidAtoms atoms;
  AtomShares shares;
  NormalizedAtoms quantiles;
};

struct SweepTable {
  std::string param_name;
  std::vector<SweepRow> rows;
  std::size_t n_failed = 0;
};

struct GaussianSweepConfig {
  Eigen::MatrixXd a;
  Eigen::MatrixXd sigma_s;
  Eigen::MatrixXd sigma_eps;
  std::size_t d_x = 1;
  std::vector<double> g_grid;
  std::size_t n_null = 1000;
};

struct DiscreteSweepConfig {
  Gate gate{{0, 1, 1, 0}};
  JointPmf pmf = JointPmf::uniform();
  std::vector<double> p_eps_grid;
  std::size_t n_null = 1000;
  double alpha = 1.0;
  GateSelection selection = GateSelection::Uniform;
};

/// Grid point k draws its null ensemble with seed mix_seed(seed, k).
SweepTable noise_sweep(const GaussianSweepConfig& cfg, std::uint64_t seed, const EnsembleOptions& opts);
SweepTable noise_sweep(const DiscreteSweepConfig& cfg, std::uint64_t seed, const EnsembleOptions& opts);

struct TmiSweepConfig {
  std::vector<double> tmi_grid;
  std::size_t d_x = 1;
  std::size_t d_y = 1;
  std::size_t d_t = 1;
  std::size_t n_samples = 10000;
  std::size_t bins = 50;
};

struct TmiSweepRow {
  double tmi = 0.0;
  PidAtoms mean_atoms;
  AtomShares mean_shares;
  /// Counts over [0, tmi] in `bins` equal bins, for red, un_x, un_y, syn.
  std::array<std::vector<std::size_t>, 4> histograms;
  std::size_t n_failed = 0;
};

std::vector<TmiSweepRow> tmi_sweep(const TmiSweepConfig& cfg, std::uint64_t seed, const EnsembleOptions& opts);

struct PipelineConfig {
  std::size_t subset_size = 10;
  std::size_t n_subsets = 1000;
  std::size_t epochs = 50;
  std::size_t order = 1;
  std::size_t n_null = 100;
};

struct PipelineRow {
  std::size_t subset = 0;
  std::vector<std::size_t> x_vars;  ///< column ids in the input series
  std::vector<std::size_t> y_vars;
  PidAtoms atoms;
  std::optional<AtomShares> shares;
  std::optional<NormalizedAtoms> quantiles;
};

struct PipelineResult {
  std::vector<PipelineRow> rows;  ///< successful subsets, in draw order
  std::size_t n_failed = 0;       ///< subsets whose fit or PID failed
  std::size_t n_zero_tmi = 0;     ///< subsets without NuMIT because TMI was zero
  std::size_t n_null_failed = 0;  ///< resampled null draws across all subsets
  PidAtoms mean_atoms;
  AtomShares mean_shares;
  NormalizedAtoms mean_quantiles;
};

/// Repeated subset analysis: random variable subset, split into X (the first
/// ceil(k/2) drawn) and Y, random epoch subset, VAR fit, PID, NMI and NuMIT.
/// Subsets run in parallel; each null ensemble inside is serial.
PipelineResult pipeline_subsets(const TimeSeries& ts, const PipelineConfig& cfg, std::uint64_t seed,
                                unsigned workers);

// --- configuration parsing (throws Error{ConfigParse}) --------------------

Eigen::MatrixXd parse_matrix(const Json& j, const std::string& what);
std::vector<double> parse_grid(const Json& j, const std::string& what);
GaussianPidSystem parse_gaussian_system(const Json& j);
GaussianSweepConfig parse_gaussian_sweep(const Json& j);
DiscreteSweepConfig parse_discrete_sweep(const Json& j);
TmiSweepConfig parse_tmi_sweep(const Json& j);
VarModel parse_var_model(const Json& j);
PipelineConfig parse_pipeline(const Json& j);
void check_schema_version(const Json& j);

// --- serialisation --------------------------------------------------------

/// printf "%.9g"
std::string format_number(double x);

/// Columns: <param>,tmi,red,un_x,un_y,syn,red_nmi,unx_nmi,uny_nmi,syn_nmi,
/// red_numit,unx_numit,uny_numit,syn_numit. Sum identities are re-checked
/// before anything is written (throws InconsistentInformation).
void write_sweep_csv(std::ostream& os, const SweepTable& table);

/// Columns: tmi,red,un_x,un_y,syn,red_nmi,unx_nmi,uny_nmi,syn_nmi,n_failed
void write_tmi_sweep_csv(std::ostream& os, const std::vector<TmiSweepRow>& rows);

/// Long format: tmi,atom,bin_lo,bin_hi,count
void write_histograms_csv(std::ostream& os, const std::vector<TmiSweepRow>& rows);

/// One row per subset then a final "mean" row.
void write_pipeline_csv(std::ostream& os, const PipelineResult& result);

void write_regression_csv(std::ostream& os, const RegressionFit& fit,
                          const std::vector<std::pair<std::string, SummaryStats>>& ttests);

/// Time-series CSV: header epoch,t,v0,...,v{n-1}; long format.
TimeSeries read_timeseries_csv(std::istream& is);
void write_timeseries_csv(std::ostream& os, const TimeSeries& ts);

/// Named numeric columns from a CSV with a header row.
std::vector<std::pair<std::string, std::vector<double>>> read_columns_csv(std::istream& is);

}  // namespace numit
