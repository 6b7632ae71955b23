#include "dspear/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dspear/errors.hpp"

namespace dspear::models {

namespace {

// Per-component constant and inverse variances, computed once per call.
struct Evaluator {
  std::vector<double> log_norm;  // log w_k - 0.5 * sum log(2 pi var)
  Matrix inv_var;
  const GmmModel* model;

  explicit Evaluator(const GmmModel& m) : log_norm(m.n_components()), inv_var(m.n_components(), m.dim()), model(&m) {
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < m.n_components(); ++k) {
      double acc = m.weights[k] > 0.0 ? std::log(m.weights[k]) : -std::numeric_limits<double>::infinity();
      for (std::size_t d = 0; d < m.dim(); ++d) {
        acc -= 0.5 * (log2pi + std::log(m.variances(k, d)));
        inv_var(k, d) = 1.0 / m.variances(k, d);
      }
      log_norm[k] = acc;
    }
  }

  // Fills per-component log joint densities, returns log-sum-exp.
  double component_logs(std::span<const double> x, std::vector<double>& out) const {
    const auto& m = *model;
    out.resize(m.n_components());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m.n_components(); ++k) {
      const auto mu = m.means.row(k);
      const auto iv = inv_var.row(k);
      double q = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = x[d] - mu[d];
        q += diff * diff * iv[d];
      }
      out[k] = log_norm[k] - 0.5 * q;
      best = std::max(best, out[k]);
    }
    if (!std::isfinite(best)) return best;
    double s = 0.0;
    for (double v : out) s += std::exp(v - best);
    return best + std::log(s);
  }
};

void check_dim(const GmmModel& m, std::size_t dim) {
  if (dim != m.dim())
    throw std::invalid_argument("observation dim " + std::to_string(dim) + " does not match model dim " +
                                std::to_string(m.dim()));
}

}  // namespace

void GmmModel::validate() const {
  const std::size_t k = weights.size();
  if (k == 0) throw ModelFormatError("GMM has no components");
  if (means.rows() != k || variances.rows() != k || variances.cols() != means.cols() || means.cols() == 0)
    throw ModelFormatError("GMM parameter shapes disagree");
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ModelFormatError("GMM weight negative or NaN");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-6) throw ModelFormatError("GMM weights do not sum to 1");
  for (double v : variances.data())
    if (!(v > 0.0) || !std::isfinite(v)) throw ModelFormatError("GMM variance not positive");
  for (double v : means.data())
    if (!std::isfinite(v)) throw ModelFormatError("GMM mean not finite");
}

double gmm_loglik(const GmmModel& model, const Matrix& obs) {
  if (obs.rows() == 0) return 0.0;
  check_dim(model, obs.cols());
  const Evaluator ev(model);
  std::vector<double> scratch;
  double total = 0.0;
  for (std::size_t r = 0; r < obs.rows(); ++r) total += ev.component_logs(obs.row(r), scratch);
  return total;
}

double gmm_frame_loglik(const GmmModel& model, std::span<const double> x) {
  check_dim(model, x.size());
  const Evaluator ev(model);
  std::vector<double> scratch;
  return ev.component_logs(x, scratch);
}

EmResult gmm_train_em(const Matrix& data, std::size_t n_components, std::uint64_t seed, const EmOptions& options) {
  const std::size_t n = data.rows(), dim = data.cols();
  if (n_components == 0) throw std::invalid_argument("n_components must be positive");
  if (n < 10 * n_components)
    throw DataError("EM needs at least " + std::to_string(10 * n_components) + " observations for " +
                    std::to_string(n_components) + " components, got " + std::to_string(n));

  std::vector<double> gmean(dim, 0.0), gvar(dim, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t d = 0; d < dim; ++d) gmean[d] += data(r, d);
  for (auto& v : gmean) v /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t d = 0; d < dim; ++d) gvar[d] += (data(r, d) - gmean[d]) * (data(r, d) - gmean[d]);
  bool degenerate = true;
  for (auto& v : gvar) {
    v /= static_cast<double>(n);
    if (v > 0.0) degenerate = false;
  }
  if (degenerate) throw DataError("EM data is degenerate (all observations identical)");
  std::vector<double> floor(dim);
  for (std::size_t d = 0; d < dim; ++d) floor[d] = std::max(options.var_floor_ratio * gvar[d], 1e-12);

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> centers;
  centers.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  auto sqdist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = (data(a, d) - data(b, d)) / std::sqrt(gvar[d] > 0 ? gvar[d] : 1.0);
      s += diff * diff;
    }
    return s;
  };
  while (centers.size() < n_components) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      d2[r] = std::min(d2[r], sqdist(r, centers.back()));
      total += d2[r];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= d2[pick];
        if (u <= 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    centers.push_back(pick);
  }

  GmmModel m;
  m.weights.assign(n_components, 1.0 / static_cast<double>(n_components));
  m.means = Matrix(n_components, dim);
  m.variances = Matrix(n_components, dim);
  for (std::size_t k = 0; k < n_components; ++k)
    for (std::size_t d = 0; d < dim; ++d) {
      m.means(k, d) = data(centers[k], d);
      m.variances(k, d) = std::max(gvar[d], floor[d]);
    }

  EmResult res;
  std::vector<double> logs;
  Matrix resp(n, n_components);
  for (std::size_t iter = 0;; ++iter) {
    // E-step.
    const Evaluator ev(m);
    double ll = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double lse = ev.component_logs(data.row(r), logs);
      ll += lse;
      for (std::size_t k = 0; k < n_components; ++k) resp(r, k) = std::exp(logs[k] - lse);
    }
    res.loglik_history.push_back(ll);
    if (iter > 0) {
      const double prev = res.loglik_history[iter - 1];
      if (std::abs(ll - prev) <= options.tol * std::abs(prev) || iter >= options.max_iter) break;
    }
    if (iter >= options.max_iter) break;

    // M-step.
    for (std::size_t k = 0; k < n_components; ++k) {
      double nk = 0.0;
      for (std::size_t r = 0; r < n; ++r) nk += resp(r, k);
      if (nk < 1e-10) continue;  // orphaned component keeps its parameters
      m.weights[k] = nk / static_cast<double>(n);
      for (std::size_t d = 0; d < dim; ++d) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += resp(r, k) * data(r, d);
        m.means(k, d) = s / nk;
      }
      for (std::size_t d = 0; d < dim; ++d) {
        double s = 0.0;
        const double mu = m.means(k, d);
        for (std::size_t r = 0; r < n; ++r) s += resp(r, k) * (data(r, d) - mu) * (data(r, d) - mu);
        m.variances(k, d) = std::max(s / nk, floor[d]);
      }
    }
    double wsum = 0.0;
    for (double w : m.weights) wsum += w;
    for (double& w : m.weights) w /= wsum;
    res.iterations = iter + 1;
  }
  res.model = std::move(m);
  return res;
}

GmmModel gmm_map_adapt(const GmmModel& background, const Matrix& data, double relevance) {
  if (relevance < 0.0) throw std::invalid_argument("relevance must be non-negative");
  GmmModel out = background;
  if (data.rows() == 0) return out;
  check_dim(background, data.cols());
  const std::size_t k_count = background.n_components(), dim = background.dim();
  const Evaluator ev(background);
  std::vector<double> occ(k_count, 0.0);
  Matrix sums(k_count, dim);
  std::vector<double> logs;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto x = data.row(r);
    const double lse = ev.component_logs(x, logs);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double g = std::exp(logs[k] - lse);
      occ[k] += g;
      for (std::size_t d = 0; d < dim; ++d) sums(k, d) += g * x[d];
    }
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!(occ[k] > 0.0)) continue;
    const double alpha = occ[k] / (occ[k] + relevance);
    for (std::size_t d = 0; d < dim; ++d)
      out.means(k, d) = alpha * (sums(k, d) / occ[k]) + (1.0 - alpha) * background.means(k, d);
  }
  return out;
}

}  // namespace dspear::models
