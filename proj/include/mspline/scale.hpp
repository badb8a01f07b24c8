#pragma once

// Auxiliary robust scale estimators used to standardize residuals.

#include <span>
#include <string_view>

namespace mspline {

enum class ScaleMethod { RicePseudo, TauResidual, Mad, Fixed };

std::string_view to_string(ScaleMethod m) noexcept;

struct ScaleEstimate {
  double value = 1.0;
  ScaleMethod method = ScaleMethod::Fixed;
};

/// Sample median; even counts average the two central order statistics.
double median(std::span<const double> x);

/// Robustified Rice estimator from successive differences of responses
/// ordered by design point: median|y_{i+1} - y_i| / (sqrt(2) * 0.6745).
ScaleEstimate rice_scale(std::span<const double> y);

/// Tau-scale with tuning constants c1 = 4.5 (location weights) and c2 = 3.0
/// (truncation), normalised to be consistent at the Gaussian.
ScaleEstimate tau_scale(std::span<const double> r);

/// Median absolute deviation about the median, divided by 0.6745.
ScaleEstimate mad(std::span<const double> r);

inline constexpr double kTauC1 = 4.5;
inline constexpr double kTauC2 = 3.0;

}  // namespace mspline
