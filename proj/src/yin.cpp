#include <cmath>
#include <vector>

#include "dspear/features.hpp"

namespace dspear::features {

std::optional<double> yin_pitch(std::span<const double> x, const YinConfig& cfg, double sample_rate) {
  const std::size_t n = x.size();
  if (n < 4) return std::nullopt;
  double energy = 0.0;
  for (double v : x) energy += v * v;
  if (energy < 1e-12) return std::nullopt;

  const std::size_t w = n / 2;
  const auto tau_max = std::min(static_cast<std::size_t>(sample_rate / cfg.fmin_hz), n - w);
  const auto tau_min = std::max<std::size_t>(2, static_cast<std::size_t>(sample_rate / cfg.fmax_hz));
  if (tau_max <= tau_min) return std::nullopt;

  std::vector<double> d(tau_max + 1, 0.0);
  for (std::size_t tau = 1; tau <= tau_max; ++tau) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      const double diff = x[j] - x[j + tau];
      acc += diff * diff;
    }
    d[tau] = acc;
  }
  // Cumulative mean normalized difference.
  std::vector<double> dn(tau_max + 1, 1.0);
  double running = 0.0;
  for (std::size_t tau = 1; tau <= tau_max; ++tau) {
    running += d[tau];
    dn[tau] = running > 0.0 ? d[tau] * static_cast<double>(tau) / running : 1.0;
  }

  std::size_t tau = tau_min;
  for (; tau <= tau_max; ++tau)
    if (dn[tau] < cfg.threshold) break;
  if (tau > tau_max) return std::nullopt;
  while (tau + 1 <= tau_max && dn[tau + 1] < dn[tau]) ++tau;

  double refined = static_cast<double>(tau);
  if (tau > 1 && tau < tau_max) {
    const double a = dn[tau - 1], b = dn[tau], c = dn[tau + 1];
    const double denom = a - 2.0 * b + c;
    if (std::abs(denom) > 1e-15) refined += 0.5 * (a - c) / denom;
  }
  const double f0 = sample_rate / refined;
  if (f0 < cfg.fmin_hz || f0 > cfg.fmax_hz) return std::nullopt;
  return f0;
}

}  // namespace dspear::features
