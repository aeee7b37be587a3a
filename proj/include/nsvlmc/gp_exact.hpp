#pragma once

#include <vector>

#include "nsvlmc/common.hpp"
#include "nsvlmc/data.hpp"
#include "nsvlmc/kernels.hpp"

namespace nsvlmc {

// Dense single-output GP regression; the reference implementation used as an
// oracle for the sparse models and as the independent baseline.
struct ExactGpModel {
  KernelParams kernel;
  double noise_var = 1e-2;
  Mat x;  // training inputs
  Vec y;  // training targets
};

double gp_log_marginal(const ExactGpModel& m);

struct GpPrediction {
  Vec mean;
  Vec var;  // observation variance (noise included)
};
GpPrediction gp_predict(const ExactGpModel& m, const Mat& x_star);

// Maximize the log marginal over (log sf2, log ls, log noise) with Adam.
// Returns the final log marginal.
double gp_train_hyperparams(ExactGpModel& m, int iters, double lr = 5e-3);

// Exact linear model of coregionalization with constant mixing weights:
// cov(y_c(x), y_c'(x')) = sum_q a_cq a_c'q k_q(x, x') + delta noise.
struct ExactLmcModel {
  std::vector<KernelParams> kernels;  // one per latent process
  Mat a;                              // c x q mixing weights
  Vec noise_vars;                     // per task
  MultiTaskDataset data;
  Index max_points = 2000;  // guard on the assembled system size
};

// Full (sum_c N^c) x (sum_c N^c) covariance in task-block order, noise included.
Mat lmc_joint_cov(const ExactLmcModel& m);

double lmc_log_marginal(const ExactLmcModel& m);

struct LmcPrediction {
  Mat mean;  // n_star x c
  Mat var;   // n_star x c, per-task marginal with noise included
};
LmcPrediction lmc_predict(const ExactLmcModel& m, const Mat& x_star);

}  // namespace nsvlmc
