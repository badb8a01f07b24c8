#include "mspline/loss.hpp"

#include <cmath>
#include <sstream>

#include "mspline/error.hpp"

namespace mspline {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double smooth_abs(double x, double eps) {
  const double a = std::abs(x);
  return a <= eps ? x * x / (2.0 * eps) : a - 0.5 * eps;
}

double smooth_sign(double x, double eps) {
  if (std::abs(x) <= eps) return x / eps;
  return x > 0.0 ? 1.0 : -1.0;
}

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

}  // namespace

LossSpec::LossSpec(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const LeastSquares&) {},
                 [](const Huber& h) {
                   if (!(h.k > 0.0) || !std::isfinite(h.k)) bad("huber: k must be positive");
                 },
                 [](const SmoothedAbs& s) {
                   if (!(s.eps > 0.0) || !std::isfinite(s.eps)) bad("smoothed abs: eps must be positive");
                 },
                 [](const SmoothedQuantile& q) {
                   if (!(q.alpha > 0.0 && q.alpha < 1.0)) bad("quantile: alpha must lie in (0, 1)");
                   if (!(q.eps > 0.0) || !std::isfinite(q.eps)) bad("quantile: eps must be positive");
                 },
                 [](const Lp& l) {
                   if (!(l.p > 1.0 && l.p <= 2.0)) bad("lp: p must lie in (1, 2]");
                 },
             },
             v_);
}

bool LossSpec::is_symmetric() const noexcept {
  if (const auto* q = std::get_if<SmoothedQuantile>(&v_)) return q->alpha == 0.5;
  return true;
}

std::string LossSpec::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const LeastSquares&) { os << "ls"; },
                 [&](const Huber& h) { os << "huber(k=" << h.k << ")"; },
                 [&](const SmoothedAbs& s) { os << "lad(eps=" << s.eps << ")"; },
                 [&](const SmoothedQuantile& q) {
                   os << "quantile(alpha=" << q.alpha << ",eps=" << q.eps << ")";
                 },
                 [&](const Lp& l) { os << "lp(p=" << l.p << ")"; },
             },
             v_);
  return os.str();
}

double rho(const LossSpec& spec, double x) {
  return std::visit(overloaded{
                        [&](const LeastSquares&) { return x * x; },
                        [&](const Huber& h) {
                          const double a = std::abs(x);
                          return a <= h.k ? x * x : 2.0 * h.k * (a - 0.5 * h.k);
                        },
                        [&](const SmoothedAbs& s) { return smooth_abs(x, s.eps); },
                        [&](const SmoothedQuantile& q) {
                          return smooth_abs(x, q.eps) + (2.0 * q.alpha - 1.0) * x;
                        },
                        [&](const Lp& l) { return std::pow(std::abs(x), l.p); },
                    },
                    spec.variant());
}

double psi(const LossSpec& spec, double x) {
  return std::visit(overloaded{
                        [&](const LeastSquares&) { return 2.0 * x; },
                        [&](const Huber& h) {
                          if (std::abs(x) <= h.k) return 2.0 * x;
                          return x > 0.0 ? 2.0 * h.k : -2.0 * h.k;
                        },
                        [&](const SmoothedAbs& s) { return smooth_sign(x, s.eps); },
                        [&](const SmoothedQuantile& q) {
                          return smooth_sign(x, q.eps) + (2.0 * q.alpha - 1.0);
                        },
                        [&](const Lp& l) {
                          if (x == 0.0) return 0.0;
                          const double v = l.p * std::pow(std::abs(x), l.p - 1.0);
                          return x > 0.0 ? v : -v;
                        },
                    },
                    spec.variant());
}

double psi_prime_zero(const LossSpec& spec) {
  return std::visit(overloaded{
                        [](const LeastSquares&) { return 2.0; },
                        [](const Huber&) { return 2.0; },
                        [](const SmoothedAbs& s) { return 1.0 / s.eps; },
                        [](const SmoothedQuantile& q) { return 1.0 / q.eps; },
                        [](const Lp& l) { return l.p * std::pow(kLpWeightFloor, l.p - 2.0); },
                    },
                    spec.variant());
}

double weight(const LossSpec& spec, double x) {
  const double a = std::abs(x);
  if (a < 1e-10) return psi_prime_zero(spec);
  return std::visit(overloaded{
                        [](const LeastSquares&) { return 2.0; },
                        [&](const Huber& h) { return a <= h.k ? 2.0 : 2.0 * h.k / a; },
                        [&](const SmoothedAbs& s) { return a <= s.eps ? 1.0 / s.eps : 1.0 / a; },
                        [&](const SmoothedQuantile& q) {
                          return a <= q.eps ? 1.0 / q.eps : 1.0 / a;
                        },
                        [&](const Lp& l) {
                          return l.p * std::pow(std::max(a, kLpWeightFloor), l.p - 2.0);
                        },
                    },
                    spec.variant());
}

double score_offset(const LossSpec& spec) {
  if (const auto* q = std::get_if<SmoothedQuantile>(&spec.variant())) {
    return 2.0 * q->alpha - 1.0;
  }
  return 0.0;
}

double irls_weight(const LossSpec& spec, double r, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidScale, "scale must be positive and finite");
  }
  return weight(spec, r / sigma);
}

}  // namespace mspline
