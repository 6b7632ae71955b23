#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dspear/matrix.hpp"

namespace dspear::models {

// Diagonal-covariance Gaussian mixture.
struct GmmModel {
  std::string label;
  std::string gender;  // speaker models only: "male", "female" or "uncertain"
  std::vector<double> weights;
  Matrix means;      // n_components x dim
  Matrix variances;  // n_components x dim

  std::size_t n_components() const { return weights.size(); }
  std::size_t dim() const { return means.cols(); }

  // Throws ModelFormatError on inconsistent shapes, non-simplex weights or
  // non-positive variances.
  void validate() const;
};

// Summed log-likelihood of the rows of `obs`.
double gmm_loglik(const GmmModel& model, const Matrix& obs);
// Log density of one observation.
double gmm_frame_loglik(const GmmModel& model, std::span<const double> x);

struct EmOptions {
  std::size_t max_iter = 100;
  double tol = 1e-4;              // relative log-likelihood improvement
  double var_floor_ratio = 1e-4;  // of the global per-dimension variance
};

struct EmResult {
  GmmModel model;
  // Training log-likelihood before each M-step, plus the final model's value.
  std::vector<double> loglik_history;
  std::size_t iterations = 0;
};

// k-means++ seeding then EM. Needs at least 10 rows per component and
// non-degenerate data (throws DataError otherwise).
EmResult gmm_train_em(const Matrix& data, std::size_t n_components, std::uint64_t seed,
                      const EmOptions& options = {});

// Means-only MAP adaptation. Weights and variances are copied.
GmmModel gmm_map_adapt(const GmmModel& background, const Matrix& data, double relevance = 16.0);

}  // namespace dspear::models
