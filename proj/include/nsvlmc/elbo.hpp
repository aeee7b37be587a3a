#pragma once

#include <vector>

#include "nsvlmc/common.hpp"
#include "nsvlmc/model.hpp"

namespace nsvlmc {

struct ElboConfig {
  int s = 10;               // importance samples
  Index minibatch = 0;      // per-task batch size; 0 = full batch
};

// All randomness consumed by one ELBO evaluation, frozen so that a value and
// its gradient (or a finite-difference probe) see identical draws.
struct ElboDraws {
  std::vector<std::vector<Index>> batch;  // per-task row indices
  Vec eps_a;                              // c*h (nsvlmc)
  std::vector<Mat> eps_b;                 // per sample: n_batch x h*q (nsvlmc)
  std::vector<Mat> eps_f;                 // per sample: n_batch x q (nmogp)
};

ElboDraws make_elbo_draws(const ModelState& state, const MultiTaskDataset& data,
                         const ElboConfig& cfg, RngStream& rng);

// Per-task expected log-likelihood contribution given mixing weights w
// (n x q), latent moments and per-latent variances; the variance-correction
// term follows the configured mode. Standalone reference used by the oracles.
double expected_loglik_term(const Mat& w, const Mat& w_var_sq, const Mat& mu,
                            const Mat& var, const Vec& y, double noise_var,
                            double scale);

// Importance-weighted ELBO (Eq. objective). scale factors inflate minibatch
// sums to full-data estimates; S = 1 recovers the tight bound exactly.
double elbo_value(const ModelState& state, const MultiTaskDataset& data,
                  const ElboConfig& cfg, const ElboDraws& draws);

struct ElboResult {
  double value = 0.0;
  Vec grad;  // d elbo / d params.data (ascent direction is +grad)
};
ElboResult elbo_value_and_grad(const ModelState& state, const MultiTaskDataset& data,
                               const ElboConfig& cfg, const ElboDraws& draws);

// Convenience wrappers drawing fresh randomness.
double elbo_iwvi(const ModelState& state, const MultiTaskDataset& data, int s,
                 RngStream& rng, Index minibatch = 0);
double elbo_tight(const ModelState& state, const MultiTaskDataset& data,
                  RngStream& rng, Index minibatch = 0);

}  // namespace nsvlmc
