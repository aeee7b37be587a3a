#pragma once

#include <vector>

#include "nsvlmc/common.hpp"
#include "nsvlmc/data.hpp"
#include "nsvlmc/model.hpp"

namespace nsvlmc {

// Diagonal marginals of every latent process at x_star (normalized inputs).
std::vector<LatentMoments> predict_latent(const ModelState& state, const Mat& x_star);

// Per-task predictive moments on the original output scale. Moments are the
// Monte Carlo mixture over draws of (A, B(x*)) (and f for the nonlinear
// variant); observation noise is included in var.
struct PredictiveSummary {
  Mat mean;  // n_star x c
  Mat var;   // n_star x c
};

PredictiveSummary predict_outputs(const ModelState& state, const NormStats& norm,
                                  const Mat& x_star_raw, int n_samples,
                                  RngStream& rng);

struct TaskMetrics {
  double mae = 0.0;
  double smse = 0.0;
  double nll = 0.0;
  Index n = 0;
};

struct Metrics {
  std::vector<TaskMetrics> per_task;
  TaskMetrics overall;  // pooled over test points
};

// SMSE normalizes squared error by the (raw-scale) training output variance of
// the same task; NLL is the Gaussian negative log-likelihood of the summary.
// mean/var/y are per task (test sets may be heterotopic).
Metrics compute_metrics(const std::vector<Vec>& mean, const std::vector<Vec>& var,
                        const std::vector<TaskBlock>& test,
                        const MultiTaskDataset& train_raw);

// Predict each task at its own test inputs and score it.
Metrics evaluate_model(const ModelState& state, const MultiTaskDataset& train_raw,
                       const NormStats& norm, const std::vector<TaskBlock>& test,
                       int n_samples, RngStream& rng);

}  // namespace nsvlmc
