#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mspline/cli.hpp"

namespace mspline::cli {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

json parse_json(const std::string& text, const std::string& what) {
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
    return json::object();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << what << ": invalid JSON at line " << line << ", column " << col;
    config_error(os.str());
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

void check_fields(const json& j, const std::string& where, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional) {
  if (!j.is_object()) config_error(where + ": expected a JSON object");
  std::vector<std::string> missing;
  for (const auto& k : required) {
    if (!j.contains(k)) missing.push_back(k);
  }
  if (!missing.empty()) config_error(where + ": missing required fields: " + join(missing));
  std::set<std::string> known(required.begin(), required.end());
  known.insert(optional.begin(), optional.end());
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) config_error(where + ": unknown field '" + k + "'");
  }
}

double get_double(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) config_error(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_uint(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    config_error(where + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) config_error(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> get_strings(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) {
    config_error(where + ": field '" + key + "' must be a non-empty array of strings");
  }
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) config_error(where + ": field '" + key + "' must contain strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void check_schema(const json& j, const std::string& where) {
  if (get_uint(j, "schema", where) != 1) config_error(where + ": unsupported schema version");
}

LossSpec loss_from(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("loss")) config_error(where + ": missing required fields: loss");
  const std::string name = get_string(j, "loss", where);
  auto with = [&](const std::vector<std::string>& req, const std::vector<std::string>& opt) {
    std::vector<std::string> r{"loss"};
    r.insert(r.end(), req.begin(), req.end());
    check_fields(j, where, r, opt);
  };
  try {
    if (name == "ls") {
      with({}, {});
      return LossSpec::least_squares();
    }
    if (name == "huber") {
      with({}, {"k"});
      return LossSpec::huber(j.contains("k") ? get_double(j, "k", where) : 1.345);
    }
    if (name == "lad") {
      with({"eps"}, {});
      return LossSpec::smoothed_abs(get_double(j, "eps", where));
    }
    if (name == "quantile") {
      with({"alpha", "eps"}, {});
      return LossSpec::smoothed_quantile(get_double(j, "alpha", where), get_double(j, "eps", where));
    }
    if (name == "lp") {
      with({"p"}, {});
      return LossSpec::lp(get_double(j, "p", where));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    config_error(where + ": " + e.what());
  }
  config_error(where + ": unknown loss '" + name + "' (expected ls, huber, lad, quantile or lp)");
}

ScaleChoice scale_from(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("scale")) config_error(where + ": missing required fields: scale");
  const std::string name = get_string(j, "scale", where);
  if (name == "fixed") {
    check_fields(j, where, {"scale", "value"}, {});
    const double v = get_double(j, "value", where);
    if (!(v > 0.0)) config_error(where + ": fixed scale value must be positive");
    return {ScaleMode::Fixed, v};
  }
  check_fields(j, where, {"scale"}, {});
  if (name == "rice") return {ScaleMode::Rice, 1.0};
  if (name == "tau-refit") return {ScaleMode::TauRefit, 1.0};
  config_error(where + ": unknown scale '" + name + "' (expected rice, tau-refit or fixed)");
}

SearchOptions search_from(const json& j, const std::string& where) {
  check_fields(j, where, {},
               {"log10_lambda_init", "init_step", "max_evals", "xtol", "log10_lambda_min",
                "log10_lambda_max"});
  SearchOptions s;
  if (j.contains("log10_lambda_init")) s.log10_lambda_init = get_double(j, "log10_lambda_init", where);
  if (j.contains("init_step")) s.init_step = get_double(j, "init_step", where);
  if (j.contains("max_evals")) s.max_evals = static_cast<int>(get_uint(j, "max_evals", where));
  if (j.contains("xtol")) s.xtol = get_double(j, "xtol", where);
  if (j.contains("log10_lambda_min")) s.log10_lambda_min = get_double(j, "log10_lambda_min", where);
  if (j.contains("log10_lambda_max")) s.log10_lambda_max = get_double(j, "log10_lambda_max", where);
  try {
    s.validate();
  } catch (const Error& e) {
    config_error(where + ": " + e.what());
  }
  return s;
}

}  // namespace

LossSpec loss_from_json(const std::string& text) { return loss_from(parse_json(text, "loss"), "loss"); }

ScaleChoice scale_from_json(const std::string& text) {
  return scale_from(parse_json(text, "scale"), "scale");
}

LossSpec make_loss(const std::string& name, double k, double eps, double alpha, double p) {
  json j{{"loss", name}};
  if (name == "huber") j["k"] = k;
  if (name == "lad" || name == "quantile") j["eps"] = eps;
  if (name == "quantile") j["alpha"] = alpha;
  if (name == "lp") j["p"] = p;
  return loss_from(j, "--loss");
}

ScaleChoice make_scale(const std::string& name, double value) {
  json j{{"scale", name}};
  if (name == "fixed") j["value"] = value;
  return scale_from(j, "--scale");
}

SimulateConfig parse_simulate_config(const std::string& text) {
  const std::string where = "simulate config";
  const json j = parse_json(text, where);
  check_fields(j, where, {"schema", "functions", "errors", "n", "replications", "seed"},
               {"estimators", "lambda", "m", "huber_k", "lad_eps_factor", "threads", "search",
                "description"});
  check_schema(j, where);
  SimulateConfig c;
  for (const auto& s : get_strings(j, "functions", where)) c.functions.push_back(function_from_string(s));
  for (const auto& s : get_strings(j, "errors", where)) c.errors.push_back(error_dist_from_string(s));
  ScenarioConfig& b = c.base;
  b.n = get_uint(j, "n", where);
  b.replications = get_uint(j, "replications", where);
  b.seed = get_uint(j, "seed", where);
  if (j.contains("estimators")) {
    b.estimators.clear();
    for (const auto& s : get_strings(j, "estimators", where)) b.estimators.push_back(estimator_from_string(s));
  }
  if (j.contains("lambda")) {
    const json& l = j.at("lambda");
    const std::string lw = where + ", field 'lambda'";
    if (!l.is_object() || !l.contains("mode")) config_error(lw + ": missing required fields: mode");
    const std::string mode = get_string(l, "mode", lw);
    if (mode == "gcv") {
      check_fields(l, lw, {"mode"}, {});
      b.lambda_mode = LambdaMode::Gcv;
    } else if (mode == "schedule") {
      check_fields(l, lw, {"mode", "a", "gamma"}, {});
      b.lambda_mode = LambdaMode::Schedule;
      b.schedule_a = get_double(l, "a", lw);
      b.schedule_gamma = get_double(l, "gamma", lw);
    } else {
      config_error(lw + ": unknown mode '" + mode + "' (expected gcv or schedule)");
    }
  }
  if (j.contains("m")) b.m = static_cast<int>(get_uint(j, "m", where));
  if (j.contains("huber_k")) b.huber_k = get_double(j, "huber_k", where);
  if (j.contains("lad_eps_factor")) b.lad_eps_factor = get_double(j, "lad_eps_factor", where);
  if (j.contains("threads")) b.threads = static_cast<unsigned>(get_uint(j, "threads", where));
  if (j.contains("search")) b.search = search_from(j.at("search"), where + ", field 'search'");
  b.validate();
  return c;
}

RatesConfig parse_rates_config(const std::string& text) {
  const std::string where = "rates config";
  const json j = parse_json(text, where);
  check_fields(j, where, {"schema", "function", "error", "loss", "n_grid", "replications", "seed"},
               {"sigma", "m", "gamma", "a", "calibration_replications", "threads", "search",
                "description"});
  check_schema(j, where);
  RatesConfig c;
  RateConfig& r = c.rate;
  r.function = function_from_string(get_string(j, "function", where));
  r.error = error_dist_from_string(get_string(j, "error", where));
  r.loss = loss_from(j.at("loss"), where + ", field 'loss'");
  const json& grid = j.at("n_grid");
  if (!grid.is_array()) config_error(where + ": field 'n_grid' must be an array of integers");
  r.n_grid.clear();
  for (const auto& v : grid) {
    if (!v.is_number_unsigned()) config_error(where + ": field 'n_grid' must contain positive integers");
    r.n_grid.push_back(v.get<std::size_t>());
  }
  r.replications = get_uint(j, "replications", where);
  r.seed = get_uint(j, "seed", where);
  if (j.contains("sigma")) r.sigma = get_double(j, "sigma", where);
  if (j.contains("m")) r.m = static_cast<int>(get_uint(j, "m", where));
  if (j.contains("gamma")) r.gamma = get_double(j, "gamma", where);
  if (j.contains("a")) r.a = get_double(j, "a", where);
  if (j.contains("calibration_replications")) {
    r.calibration_replications = get_uint(j, "calibration_replications", where);
  }
  if (j.contains("threads")) r.threads = static_cast<unsigned>(get_uint(j, "threads", where));
  if (j.contains("search")) r.search = search_from(j.at("search"), where + ", field 'search'");
  r.validate();
  return c;
}

}  // namespace mspline::cli
