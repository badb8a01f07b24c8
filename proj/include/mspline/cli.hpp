#pragma once

// Command implementations behind the `mspline` executable: data ingestion,
// JSON configuration, and the fit / select / simulate / rates commands.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mspline/basis.hpp"
#include "mspline/error.hpp"
#include "mspline/fit.hpp"
#include "mspline/loss.hpp"
#include "mspline/select.hpp"
#include "mspline/simulate.hpp"

namespace mspline::cli {

/// Delimited text input. Columns are header names or 0-based indices.
struct DatasetSpec {
  std::filesystem::path path;
  std::string x_column = "0";
  std::string y_column = "1";
  char delimiter = ',';
  char decimal_mark = '.';
  std::optional<double> missing_sentinel;
  bool header = true;

  /// Throws Error(Config) on identical columns or delimiter == decimal mark.
  void validate() const;
};

struct IngestResult {
  DesignData data{{0.0, 1.0}, {0.0, 0.0}};
  double x_offset = 0.0;  ///< x = x_offset + x_scale * t
  double x_scale = 1.0;
  std::size_t rows_read = 0;
  std::size_t dropped_missing = 0;    ///< sentinel or empty field in x or y
  std::size_t duplicates_merged = 0;  ///< rows folded into an earlier x
  std::vector<std::string> warnings;
};

/// Parses, drops missing rows, sorts by x, rescales x to [0, 1] and averages
/// y over repeated x. Throws Error(DataFormat / InsufficientData / InvalidDesign).
IngestResult ingest(const DatasetSpec& spec);

/// `{"loss": "huber", "k": 1.345}`; names ls, huber, lad (eps), quantile
/// (alpha, eps), lp (p). Throws Error(Config) naming the offending field.
LossSpec loss_from_json(const std::string& json_text);

/// `{"scale": "rice"}`, `{"scale": "tau-refit"}` or `{"scale": "fixed", "value": s}`.
ScaleChoice scale_from_json(const std::string& json_text);

/// Loss from command-line style parameters; unused parameters are ignored.
LossSpec make_loss(const std::string& name, double k, double eps, double alpha, double p);
ScaleChoice make_scale(const std::string& name, double value);

struct FitArgs {
  DatasetSpec dataset;
  LossSpec loss = LossSpec::huber();
  ScaleChoice scale{ScaleMode::Rice, 1.0};  ///< overrides options.scale
  std::optional<double> lambda;  ///< empty selects by GCV
  FitOptions options{};
  SearchOptions search{};
  std::size_t grid_size = 201;
  int derivatives = 0;  ///< highest derivative order written to fit.csv
  std::filesystem::path out_dir = ".";
};

struct FitReport {
  IngestResult input;
  SplineFit fit;
  std::optional<GcvResult> selection;
  std::size_t weight_buckets[3] = {0, 0, 0};  ///< (0, 1/3], (1/3, 2/3], (2/3, 1] by 0.33 / 0.66
};

/// Writes fit.csv, residuals.csv and summary.json into out_dir.
FitReport cmd_fit(const FitArgs& args);

/// Writes selection.json and gcv_trace.csv; a positive `scan` also writes
/// gcv_scan.csv with the criterion on that many log-spaced lambdas.
GcvResult cmd_select(const FitArgs& args, std::size_t scan = 0);

/// Fitted spline as persisted in summary.json.
struct StoredFit {
  BasisSystem basis;
  std::vector<double> coef;
  double x_offset = 0.0;
  double x_scale = 1.0;
};

StoredFit load_summary(const std::filesystem::path& summary_json);

/// j-th derivative in original x units at rescaled points t in [0, 1].
std::vector<double> evaluate(const StoredFit& stored, const std::vector<double>& t, int j = 0);

struct SimulateConfig {
  ScenarioConfig base;
  std::vector<FunctionId> functions;
  std::vector<ErrorDist> errors;
};

struct RatesConfig {
  RateConfig rate;
};

/// Schema-1 configuration files. Throws Error(Config) with line or field
/// diagnostics, listing every missing required field.
SimulateConfig parse_simulate_config(const std::string& json_text);
RatesConfig parse_rates_config(const std::string& json_text);

/// Writes table.csv, table.txt and run.json into out_dir.
SimulationReport cmd_simulate(const std::filesystem::path& config_path,
                              const std::filesystem::path& out_dir,
                              std::optional<unsigned> threads = std::nullopt);

/// Writes rates.csv, slopes.csv, rates.txt and run.json into out_dir.
RateReport cmd_rates(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                     std::optional<unsigned> threads = std::nullopt);

/// Aligned text table: one row per (function, error), mean and SE per estimator.
std::string format_table(const SimulationReport& report);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Shortest round-trip decimal text, always with '.' as decimal mark.
std::string format_double(double v);

/// Process exit code for an error category (2 usage, 3 data, 4 numerical).
int exit_code(ErrorCategory category) noexcept;

}  // namespace mspline::cli
