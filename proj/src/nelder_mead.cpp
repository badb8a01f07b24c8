#include "mspline/nelder_mead.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace mspline {

NelderMead1dResult nelder_mead_1d(const std::function<double(double)>& f, double x0,
                                  const NelderMead1dOptions& opt) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::map<double, double> cache;
  NelderMead1dResult res;
  res.x = x0;
  res.value = inf;

  auto eval = [&](double x) {
    if (x < opt.lower || x > opt.upper) return inf;
    if (auto it = cache.find(x); it != cache.end()) return it->second;
    if (res.evaluations >= opt.max_evals) return inf;
    double v = f(x);
    if (!std::isfinite(v)) v = inf;
    ++res.evaluations;
    cache.emplace(x, v);
    if (v < res.value || (res.evaluations == 1)) {
      res.x = x;
      res.value = v;
    }
    return v;
  };

  std::pair<double, double> best{x0, eval(x0)};
  std::pair<double, double> worst{x0 + opt.init_step, eval(x0 + opt.init_step)};

  while (true) {
    if (worst.second < best.second) std::swap(best, worst);
    if (std::abs(worst.first - best.first) < opt.xtol) {
      res.converged = std::isfinite(best.second);
      break;
    }
    if (res.evaluations >= opt.max_evals) break;

    const double d = best.first - worst.first;
    const double xr = best.first + d;
    const double fr = eval(xr);
    if (fr < best.second) {
      const double xe = best.first + 2.0 * d;
      const double fe = eval(xe);
      worst = fe < fr ? std::pair{xe, fe} : std::pair{xr, fr};
      continue;
    }
    if (fr < worst.second) {
      const double xc = best.first + 0.5 * d;  // outside contraction
      const double fc = eval(xc);
      if (fc <= fr) {
        worst = {xc, fc};
        continue;
      }
    } else {
      const double xc = best.first - 0.5 * d;  // inside contraction
      const double fc = eval(xc);
      if (fc < worst.second) {
        worst = {xc, fc};
        continue;
      }
    }
    // Shrink toward the best vertex.
    const double xs = best.first - 0.5 * d;
    worst = {xs, eval(xs)};
  }
  return res;
}

}  // namespace mspline
