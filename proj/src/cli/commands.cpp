#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mspline/cli.hpp"

namespace mspline::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::DataFormat, "cannot read '" + p.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::DataFormat, "cannot write '" + p.string() + "'");
}

std::string short_g(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

int bucket_of(double w) { return w <= 0.33 ? 0 : (w <= 0.66 ? 1 : 2); }

SplineFit run_fit(const FitArgs& args, const PenalizedProblem& pb, std::optional<GcvResult>& sel) {
  if (args.lambda) return fit_spline(pb, args.loss, *args.lambda, args.options);
  sel = select_lambda(pb, args.loss, args.options, args.search);
  return sel->fit;
}

ordered_json selection_json(const GcvResult& g) {
  ordered_json trace = ordered_json::array();
  for (const auto& e : g.trace) {
    trace.push_back({{"lambda", e.lambda},
                     {"score", std::isfinite(e.score) ? ordered_json(e.score) : ordered_json(nullptr)},
                     {"edf", std::isfinite(e.edf) ? ordered_json(e.edf) : ordered_json(nullptr)}});
  }
  ordered_json j;
  j["lambda"] = g.lambda_opt;
  j["score"] = g.score_opt;
  j["evaluations"] = g.evaluations;
  j["converged"] = g.converged;
  if (g.preliminary_lambda > 0.0) j["preliminary_lambda"] = g.preliminary_lambda;
  j["trace"] = trace;
  return j;
}

ordered_json input_json(const FitArgs& args, const IngestResult& in) {
  ordered_json j;
  j["path"] = args.dataset.path.string();
  j["rows_read"] = in.rows_read;
  j["dropped_missing"] = in.dropped_missing;
  j["duplicates_merged"] = in.duplicates_merged;
  j["n"] = in.data.size();
  j["warnings"] = in.warnings;
  return j;
}

void check_fit_args(const FitArgs& args) {
  args.options.validate();
  if (!args.lambda) args.search.validate();
  if (args.lambda && !(*args.lambda > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  }
  if (args.grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid size must be >= 2");
  if (args.derivatives < 0 || args.derivatives > 2 * args.options.m - 1) {
    throw Error(ErrorCode::InvalidArgument, "derivative order must lie in [0, 2m - 1]");
  }
}

std::string simulation_csv(const SimulationReport& r) {
  std::string s = "function,error,estimator,n,replications,failures,mean_mse,se_mse,median_mse,max_mse\n";
  for (const auto& c : r.cells) {
    s += to_string(c.function) + "," + to_string(c.error) + "," + to_string(c.estimator) + "," +
         std::to_string(c.n) + "," + std::to_string(c.replications) + "," +
         std::to_string(c.failures) + "," + format_double(c.mean_mse) + "," +
         format_double(c.se_mse) + "," + format_double(c.median_mse) + "," +
         format_double(c.max_mse) + "\n";
  }
  return s;
}

double theory_slope(double gamma, int m, int j) {
  // Squared bias ~ lambda^{(m-j)/m}, variance ~ 1 / (n lambda^{(2j+1)/(2m)}).
  const double bias = gamma * (m - j) / m;
  const double var = 1.0 - gamma * (2.0 * j + 1.0) / (2.0 * m);
  return 0.0 - std::min(bias, var);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int exit_code(ErrorCategory category) noexcept { return static_cast<int>(category); }

FitReport cmd_fit(const FitArgs& a) {
  FitArgs args = a;
  args.options.scale = args.scale;
  check_fit_args(args);
  FitReport rep;
  rep.input = ingest(args.dataset);
  const PenalizedProblem pb(rep.input.data, args.options.m, args.options.max_knots);
  rep.fit = run_fit(args, pb, rep.selection);
  const double off = rep.input.x_offset, sc = rep.input.x_scale;
  const auto& fit = rep.fit;

  std::vector<double> grid(args.grid_size);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid[k] = static_cast<double>(k) / static_cast<double>(grid.size() - 1);
  }
  std::vector<std::vector<double>> cols;
  for (int j = 0; j <= args.derivatives; ++j) {
    auto v = predict(fit, grid, j);
    const double f = std::pow(sc, -j);
    for (double& x : v) x *= f;
    cols.push_back(std::move(v));
  }
  std::string fit_csv = "x,t,f";
  for (int j = 1; j <= args.derivatives; ++j) fit_csv += ",d" + std::to_string(j);
  fit_csv += "\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    fit_csv += format_double(off + sc * grid[k]) + "," + format_double(grid[k]);
    for (const auto& c : cols) fit_csv += "," + format_double(c[k]);
    fit_csv += "\n";
  }

  const auto t = pb.data.t();
  const auto y = pb.data.y();
  std::string res_csv = "x,y,fitted,residual,weight,weight_bucket\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    const int b = bucket_of(fit.weights[i]);
    ++rep.weight_buckets[b];
    res_csv += format_double(off + sc * t[i]) + "," + format_double(y[i]) + "," +
               format_double(y[i] - fit.residuals[i]) + "," + format_double(fit.residuals[i]) +
               "," + format_double(fit.weights[i]) + "," + std::to_string(b + 1) + "\n";
  }

  ordered_json s;
  s["schema"] = 1;
  s["command"] = "fit";
  s["input"] = input_json(args, rep.input);
  s["x_map"] = {{"offset", off}, {"scale", sc}};
  s["loss"] = args.loss.name();
  s["m"] = args.options.m;
  s["lambda_mode"] = args.lambda ? "fixed" : "auto";
  s["lambda"] = fit.lambda;
  s["scale"] = {{"method", std::string(to_string(fit.scale.method))}, {"value", fit.scale.value}};
  s["edf"] = fit.edf;
  s["iterations"] = fit.iterations;
  s["converged"] = fit.converged;
  s["objective"] = fit.objective;
  if (rep.selection) s["gcv"] = selection_json(*rep.selection);
  s["weight_buckets"] = {{"(0,0.33]", rep.weight_buckets[0]},
                         {"(0.33,0.66]", rep.weight_buckets[1]},
                         {"(0.66,1]", rep.weight_buckets[2]}};
  s["basis"] = {{"order", fit.basis->order()}, {"breakpoints", fit.basis->breakpoints}};
  s["coefficients"] = fit.coef;

  write_file(args.out_dir / "fit.csv", fit_csv);
  write_file(args.out_dir / "residuals.csv", res_csv);
  write_file(args.out_dir / "summary.json", s.dump(2) + "\n");
  return rep;
}

GcvResult cmd_select(const FitArgs& a, std::size_t scan) {
  FitArgs args = a;
  args.options.scale = args.scale;
  args.lambda.reset();
  check_fit_args(args);
  const IngestResult in = ingest(args.dataset);
  const PenalizedProblem pb(in.data, args.options.m, args.options.max_knots);
  const GcvResult g = select_lambda(pb, args.loss, args.options, args.search);

  ordered_json s;
  s["schema"] = 1;
  s["command"] = "select";
  s["input"] = input_json(args, in);
  s["loss"] = args.loss.name();
  s["m"] = args.options.m;
  s["scale"] = {{"method", std::string(to_string(g.fit.scale.method))}, {"value", g.fit.scale.value}};
  s["edf"] = g.fit.edf;
  s["gcv"] = selection_json(g);
  write_file(args.out_dir / "selection.json", s.dump(2) + "\n");

  std::string trace = "evaluation,lambda,log10_lambda,score,edf\n";
  for (std::size_t k = 0; k < g.trace.size(); ++k) {
    const auto& e = g.trace[k];
    trace += std::to_string(k + 1) + "," + format_double(e.lambda) + "," +
             format_double(std::log10(e.lambda)) + "," + format_double(e.score) + "," +
             format_double(e.edf) + "\n";
  }
  write_file(args.out_dir / "gcv_trace.csv", trace);

  if (scan > 0) {
    std::string out = "log10_lambda,lambda,score,edf\n";
    const double lo = args.search.log10_lambda_min, hi = args.search.log10_lambda_max;
    for (std::size_t k = 0; k < scan; ++k) {
      const double u = scan == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(scan - 1);
      double score = std::numeric_limits<double>::infinity(), edf = std::numeric_limits<double>::quiet_NaN();
      try {
        const auto ev = gcv_score(pb, args.loss, std::pow(10.0, u), args.options);
        score = ev.score;
        edf = ev.edf;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::IllPosed && e.code() != ErrorCode::DegenerateGcv) throw;
      }
      out += format_double(u) + "," + format_double(std::pow(10.0, u)) + "," + format_double(score) +
             "," + format_double(edf) + "\n";
    }
    write_file(args.out_dir / "gcv_scan.csv", out);
  }
  return g;
}

StoredFit load_summary(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::DataFormat, "cannot parse '" + path.string() + "': " + e.what());
  }
  try {
    StoredFit s;
    const int m = j.at("m").get<int>();
    const auto bp = j.at("basis").at("breakpoints").get<std::vector<double>>();
    s.basis = build_basis(bp, m);
    s.coef = j.at("coefficients").get<std::vector<double>>();
    s.x_offset = j.at("x_map").at("offset").get<double>();
    s.x_scale = j.at("x_map").at("scale").get<double>();
    if (s.coef.size() != s.basis.n_basis) {
      throw Error(ErrorCode::DataFormat, "coefficient count does not match the stored basis");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::DataFormat, "malformed summary '" + path.string() + "': " + e.what());
  }
}

std::vector<double> evaluate(const StoredFit& s, const std::vector<double>& t, int j) {
  auto v = evaluation_matrix(s.basis, t, j).multiply(s.coef);
  const double f = std::pow(s.x_scale, -j);
  for (double& x : v) x *= f;
  return v;
}

std::string format_table(const SimulationReport& r) {
  std::vector<Estimator> est;
  for (const auto& c : r.cells) {
    if (std::find(est.begin(), est.end(), c.estimator) == est.end()) est.push_back(c.estimator);
  }
  std::ostringstream os;
  os << pad("f", 5) << pad("Distribution", 14);
  for (auto e : est) os << pad(to_string(e), 20);
  os << "\n" << pad("", 5) << pad("", 14);
  for (std::size_t k = 0; k < est.size(); ++k) os << pad("Mean", 10) << pad("SE", 10);
  os << "\n";
  std::string last_f;
  for (std::size_t i = 0; i < r.cells.size(); i += est.size()) {
    const auto& first = r.cells[i];
    const std::string f = to_string(first.function);
    if (!last_f.empty() && f != last_f) os << "\n";
    os << pad(f == last_f ? "" : f, 5) << pad(to_string(first.error), 14);
    last_f = f;
    for (std::size_t k = 0; k < est.size() && i + k < r.cells.size(); ++k) {
      const auto& c = r.cells[i + k];
      os << pad(short_g(c.mean_mse), 10) << pad(short_g(c.se_mse), 10);
    }
    std::size_t failures = 0;
    for (std::size_t k = 0; k < est.size() && i + k < r.cells.size(); ++k) failures += r.cells[i + k].failures;
    if (failures > 0) os << " (" << failures << " failed fits)";
    os << "\n";
  }
  return os.str();
}

SimulationReport cmd_simulate(const std::filesystem::path& config_path,
                              const std::filesystem::path& out_dir, std::optional<unsigned> threads) {
  const std::string text = read_file(config_path);
  SimulateConfig c = parse_simulate_config(text);
  if (threads) c.base.threads = *threads;
  const SimulationReport r = run_table(c.base, c.functions, c.errors);
  const std::string hash = fnv1a_hex(text);

  std::ostringstream head;
  head << "n = " << c.base.n << ", replications = " << c.base.replications
       << ", seed = " << c.base.seed << ", config fnv1a = " << hash << "\n\n";
  write_file(out_dir / "table.csv", simulation_csv(r));
  write_file(out_dir / "table.txt", head.str() + format_table(r));
  ordered_json run;
  run["schema"] = 1;
  run["command"] = "simulate";
  run["config"] = config_path.filename().string();
  run["config_fnv1a"] = hash;
  run["seed"] = c.base.seed;
  run["cells"] = r.cells.size();
  write_file(out_dir / "run.json", run.dump(2) + "\n");
  return r;
}

RateReport cmd_rates(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                     std::optional<unsigned> threads) {
  const std::string text = read_file(config_path);
  RatesConfig c = parse_rates_config(text);
  if (threads) c.rate.threads = *threads;
  const RateReport r = rate_study(c.rate);
  const std::string hash = fnv1a_hex(text);
  const int m = r.m;

  std::string csv = "n,lambda,failures,median_l2,median_sobolev";
  for (int j = 1; j <= m; ++j) csv += ",median_d" + std::to_string(j);
  csv += "\n";
  for (std::size_t k = 0; k < r.n_grid.size(); ++k) {
    csv += std::to_string(r.n_grid[k]) + "," + format_double(r.lambdas[k]) + "," +
           std::to_string(r.failures[k]) + "," + format_double(r.median_l2[k]) + "," +
           format_double(r.median_sobolev[k]);
    for (int j = 1; j <= m; ++j) csv += "," + format_double(r.median_deriv[static_cast<std::size_t>(j - 1)][k]);
    csv += "\n";
  }

  struct Row {
    std::string name;
    Slope s;
    double theory;
  };
  std::vector<Row> rows{{"l2", r.slope_l2, theory_slope(r.gamma, m, 0)},
                        {"sobolev", r.slope_sobolev, theory_slope(r.gamma, m, 0)}};
  for (int j = 1; j <= m; ++j) {
    rows.push_back({"d" + std::to_string(j), r.slope_deriv[static_cast<std::size_t>(j - 1)],
                    theory_slope(r.gamma, m, j)});
  }
  std::string slopes = "quantity,slope,se,theory\n";
  for (const auto& row : rows) {
    slopes += row.name + "," + format_double(row.s.value) + "," + format_double(row.s.se) + "," +
              format_double(row.theory) + "\n";
  }

  std::ostringstream txt;
  txt << "function = " << to_string(c.rate.function) << ", error = " << to_string(c.rate.error)
      << ", loss = " << c.rate.loss.name() << ", m = " << m << ", lambda = "
      << short_g(r.a) << " * n^-" << r.gamma << ", replications = " << c.rate.replications
      << ", seed = " << c.rate.seed << ", config fnv1a = " << hash << "\n\n";
  txt << pad("n", 8) << pad("lambda", 12) << pad("l2", 12) << pad("sobolev", 12);
  for (int j = 1; j <= m; ++j) txt << pad("d" + std::to_string(j), 12);
  txt << "failures\n";
  for (std::size_t k = 0; k < r.n_grid.size(); ++k) {
    txt << pad(std::to_string(r.n_grid[k]), 8) << pad(short_g(r.lambdas[k]), 12)
        << pad(short_g(r.median_l2[k]), 12) << pad(short_g(r.median_sobolev[k]), 12);
    for (int j = 1; j <= m; ++j) txt << pad(short_g(r.median_deriv[static_cast<std::size_t>(j - 1)][k]), 12);
    txt << r.failures[k] << "\n";
  }
  txt << "\n" << pad("slope", 10) << pad("estimate", 12) << pad("se", 12) << "theory\n";
  for (const auto& row : rows) {
    char est[32], se[32], th[32];
    std::snprintf(est, sizeof est, "%.3f", row.s.value);
    std::snprintf(se, sizeof se, "%.3f", row.s.se);
    std::snprintf(th, sizeof th, "%.3f", row.theory);
    txt << pad(row.name, 10) << pad(est, 12) << pad(se, 12) << th << "\n";
  }

  write_file(out_dir / "rates.csv", csv);
  write_file(out_dir / "slopes.csv", slopes);
  write_file(out_dir / "rates.txt", txt.str());
  ordered_json run;
  run["schema"] = 1;
  run["command"] = "rates";
  run["config"] = config_path.filename().string();
  run["config_fnv1a"] = hash;
  run["seed"] = c.rate.seed;
  run["a"] = r.a;
  run["gamma"] = r.gamma;
  write_file(out_dir / "run.json", run.dump(2) + "\n");
  return r;
}

}  // namespace mspline::cli
