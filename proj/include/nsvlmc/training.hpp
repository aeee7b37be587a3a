#pragma once

#include <functional>
#include <vector>

#include "nsvlmc/common.hpp"
#include "nsvlmc/elbo.hpp"
#include "nsvlmc/model.hpp"

namespace nsvlmc {

struct AdamState {
  Vec m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// One ascent step: params += lr * corrected(m) / (sqrt(corrected(v)) + eps).
void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr);

struct TrainConfig {
  int iters = 10000;
  double lr = 5e-3;
  ElboConfig elbo;
  std::uint64_t seed = 0;
  int trace_every = 50;  // record cadence; 0 disables the trace
};

struct TracePoint {
  int step = 0;
  double elbo = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  double final_elbo = 0.0;
  std::vector<TracePoint> trace;
};

// Maximizes the IWVI ELBO in place. Throws NonFiniteObjective with the names
// of the offending parameter groups if the objective or gradient degenerates.
TrainResult train(ModelState& state, const MultiTaskDataset& data,
                  const TrainConfig& cfg);

}  // namespace nsvlmc
