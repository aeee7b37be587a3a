#pragma once

#include <string>
#include <vector>

#include "nsvlmc/common.hpp"

namespace nsvlmc {

struct TaskBlock {
  Mat x;  // N^c x D
  Vec y;  // N^c
};

// Normalization statistics; inputs share per-dimension stats across tasks,
// outputs are standardized per task.
struct NormStats {
  Vec x_mean, x_std;               // D
  std::vector<double> y_mean, y_std;  // per task
  bool active = false;
};

struct MultiTaskDataset {
  std::vector<TaskBlock> tasks;
  NormStats norm;

  Index num_tasks() const { return Index(tasks.size()); }
  Index input_dim() const { return tasks.empty() ? 0 : tasks[0].x.cols(); }
  Index total_points() const {
    Index n = 0;
    for (const auto& t : tasks) n += t.x.rows();
    return n;
  }
  // all task inputs stacked in task order
  Mat pooled_inputs() const;
};

// Standardize inputs (pooled, per dimension) and outputs (per task), storing
// the statistics for inversion. Throws ZeroVariance on constant columns.
MultiTaskDataset normalize(const MultiTaskDataset& data);

// Map a normalized input row back / forth given stored statistics.
Vec normalize_input(const NormStats& norm, const Vec& x);
double denormalize_output(const NormStats& norm, Index task, double y);
double denormalize_variance(const NormStats& norm, Index task, double var);

// Toy three-task generator; also exposes the latent truth for evaluation.
struct ToyCase {
  MultiTaskDataset data;          // raw (unnormalized) training data
  // noiseless task outputs at arbitrary x
  static double truth(int task, double x);
};
ToyCase gen_toy(std::uint64_t seed);

// Experiment splits. Loaders ingest the canonical CSV schema
//   task,x_0,...,x_{D-1},y
// produced by the conversion manifests under data/manifests/.
struct Split {
  MultiTaskDataset train;
  std::vector<TaskBlock> test;  // per-task held-out sets (may be empty)
};

enum class SplitName { jura, eeg, sarcos_a, sarcos_b, sarcos_c };
SplitName parse_split_name(const std::string& name);

Split load_split(SplitName name, const std::string& path);

// Canonical CSV ingestion used by both load_split and the CLI `train --data`.
MultiTaskDataset load_canonical_csv(const std::string& path);
void save_canonical_csv(const MultiTaskDataset& data, const std::string& path);

}  // namespace nsvlmc
