#pragma once

// Convex loss family rho with score psi and IRLS weights psi(x)/x.
//
// Huber follows the factor-2 scaling rho_k(x) = x^2 on |x| <= k and
// 2k(|x| - k/2) beyond, so psi(x) = 2x on the core and least squares is
// rho(x) = x^2. Tuning constants quoted elsewhere for the x^2/2 convention
// do not carry over unchanged.

#include <string>
#include <variant>

namespace mspline {

struct LeastSquares {};

struct Huber {
  double k = 1.345;
};

/// |x| with the corner replaced by x^2 / (2 eps) on [-eps, eps]; beyond the
/// core rho(x) = |x| - eps/2, so rho(0) = 0 and the gap to |x| is at most eps/2.
struct SmoothedAbs {
  double eps = 1e-4;
};

/// Check function |x| + (2 alpha - 1) x with only the |x| part smoothed.
struct SmoothedQuantile {
  double alpha = 0.5;
  double eps = 1e-4;
};

/// |x|^p for 1 < p <= 2. The IRLS weight p |x|^{p-2} is capped at
/// p * kLpWeightFloor^{p-2} near zero.
struct Lp {
  double p = 1.5;
};

inline constexpr double kLpWeightFloor = 1e-6;

class LossSpec {
 public:
  using Variant = std::variant<LeastSquares, Huber, SmoothedAbs, SmoothedQuantile, Lp>;

  LossSpec() = default;
  /// Validates parameters; throws Error(InvalidArgument).
  explicit LossSpec(Variant v);

  static LossSpec least_squares() { return LossSpec(LeastSquares{}); }
  static LossSpec huber(double k = 1.345) { return LossSpec(Huber{k}); }
  static LossSpec smoothed_abs(double eps) { return LossSpec(SmoothedAbs{eps}); }
  static LossSpec smoothed_quantile(double alpha, double eps) {
    return LossSpec(SmoothedQuantile{alpha, eps});
  }
  static LossSpec lp(double p) { return LossSpec(Lp{p}); }

  [[nodiscard]] const Variant& variant() const noexcept { return v_; }
  [[nodiscard]] bool is_least_squares() const noexcept {
    return std::holds_alternative<LeastSquares>(v_);
  }
  [[nodiscard]] bool is_symmetric() const noexcept;
  [[nodiscard]] std::string name() const;

 private:
  Variant v_{LeastSquares{}};
};

double rho(const LossSpec& spec, double x);
double psi(const LossSpec& spec, double x);

/// psi'(0), the upper bound of the weight function.
double psi_prime_zero(const LossSpec& spec);

/// Weight w(x) = psi_s(x) / x of the symmetric part of rho; for every variant
/// except SmoothedQuantile this is psi(x)/x. Uses psi'(0) for |x| < 1e-10.
double weight(const LossSpec& spec, double x);

/// Constant part of psi that is not carried by the weight: 2 alpha - 1 for
/// SmoothedQuantile, zero otherwise. psi(x) = weight(x) * x + score_offset.
double score_offset(const LossSpec& spec);

/// weight(r / sigma); throws Error(InvalidScale) unless sigma > 0.
double irls_weight(const LossSpec& spec, double r, double sigma);

}  // namespace mspline
