#include "mspline/scale.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mspline/error.hpp"

namespace mspline {

namespace {

constexpr double kMadConstant = 0.6745;
// Phi^{-1}(3/4)
constexpr double kNormalQ75 = 0.6744897501960817;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// E[min(Z^2, b^2)] for Z ~ N(0, 1).
double truncated_second_moment(double b) {
  return 2.0 * ((1.0 - b * b) * normal_cdf(b) - b * normal_pdf(b) + b * b) - 1.0;
}

void require_size(std::span<const double> x, std::size_t n, const char* who) {
  if (x.size() < n) {
    throw Error(ErrorCode::InsufficientData,
                std::string(who) + ": need at least " + std::to_string(n) + " values");
  }
}

}  // namespace

std::string_view to_string(ScaleMethod m) noexcept {
  switch (m) {
    case ScaleMethod::RicePseudo: return "rice";
    case ScaleMethod::TauResidual: return "tau-refit";
    case ScaleMethod::Mad: return "mad";
    case ScaleMethod::Fixed: return "fixed";
  }
  return "unknown";
}

double median(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::InsufficientData, "median of empty sample");
  std::vector<double> v(x.begin(), x.end());
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
  const double upper = v[h];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
  return 0.5 * (lower + upper);
}

ScaleEstimate rice_scale(std::span<const double> y) {
  require_size(y, 2, "rice_scale");
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = std::abs(y[i + 1] - y[i]);
  const double med = median(d);
  if (!(med > 0.0)) {
    throw Error(ErrorCode::DegenerateScale, "rice_scale: median successive difference is zero");
  }
  return {med / (std::numbers::sqrt2 * kMadConstant), ScaleMethod::RicePseudo};
}

ScaleEstimate mad(std::span<const double> r) {
  require_size(r, 2, "mad");
  const double mu = median(r);
  std::vector<double> a(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) a[i] = std::abs(r[i] - mu);
  const double s = median(a);
  if (!(s > 0.0)) throw Error(ErrorCode::DegenerateScale, "mad: zero median absolute deviation");
  return {s / kMadConstant, ScaleMethod::Mad};
}

ScaleEstimate tau_scale(std::span<const double> r) {
  require_size(r, 2, "tau_scale");
  const double mu0 = median(r);
  std::vector<double> a(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) a[i] = std::abs(r[i] - mu0);
  const double s0 = median(a);
  if (!(s0 > 0.0)) throw Error(ErrorCode::DegenerateScale, "tau_scale: zero initial scale");

  // Bisquare-weighted location.
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double u = a[i] / (kTauC1 * s0);
    const double w = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    sw += w;
    swx += w * r[i];
  }
  const double mu = swx / sw;

  double acc = 0.0;
  for (double ri : r) {
    const double z = (ri - mu) / s0;
    acc += std::min(z * z, kTauC2 * kTauC2);
  }
  const double n = static_cast<double>(r.size());
  const double consistency = truncated_second_moment(kTauC2 * kNormalQ75);
  return {s0 * std::sqrt(acc / (n * consistency)), ScaleMethod::TauResidual};
}

}  // namespace mspline
