#pragma once

#include <functional>

#include "nsvlmc/common.hpp"

namespace nsvlmc {

// Truncated proper orthogonal decomposition of a snapshot matrix
// (rows = mesh nodes, columns = time): snapshots ~ modes * coeffs^T.
struct PodBasis {
  Mat modes;            // n_mesh x r, orthonormal columns
  Mat coeffs;           // n_time x r; coeffs(t, k) = <snapshot_t, mode_k>
  Vec singular_values;  // r, nonincreasing
};

// SVD-based; each mode's largest-magnitude entry is made positive (ties to
// the earliest index) so the decomposition is fully deterministic.
PodBasis pod_decompose(const Mat& snapshots, Index rank, bool center = false);

// Field for one time instant: sum_k coeffs_row[k] * mode_k.
Vec pod_reconstruct(const PodBasis& basis, const Vec& coeffs_row);
// All snapshots at once (n_mesh x n_time).
Mat pod_reconstruct_all(const PodBasis& basis);

// One-step-ahead supervised pairs from a scalar coefficient series:
// input row i = series[i .. i+window), target i = series[i+window].
struct ArData {
  Mat inputs;   // (t - window) x window
  Vec targets;  // t - window
};
ArData ar_windowing(const Vec& series, Index window = 10);

// Closed-loop forecast: seed with `window` true values, then feed predictions
// back. `step` maps the current window (oldest first) to the next value.
Vec rollout_closed_loop(const Vec& seed_window, Index steps,
                        const std::function<double(const Vec&)>& step);

// Teacher-forced diagnostics: predict series[i+window] from true history.
Vec rollout_open_loop(const Vec& series, Index window,
                      const std::function<double(const Vec&)>& step);

}  // namespace nsvlmc
