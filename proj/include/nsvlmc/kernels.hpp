#pragma once

#include "nsvlmc/common.hpp"

namespace nsvlmc {

// SE-ARD kernel hyperparameters: k(x,x') = sf2 * exp(-0.5 sum_d (dx_d/l_d)^2)
struct KernelParams {
  double output_scale_sq = 1.0;  // sigma_f^2
  Vec length_scales;             // one per input dimension, all > 0
};

double se_ard(const Vec& x, const Vec& x2, const KernelParams& p);

// Cross-kernel matrix: entry (i,j) = k(X.row(i), X2.row(j)).
Mat kernel_matrix(const Mat& X, const Mat& X2, const KernelParams& p);

// Gram matrix k(X, X); identical to kernel_matrix(X, X, p) but enforces
// exact symmetry.
Mat gram_matrix(const Mat& X, const KernelParams& p);

}  // namespace nsvlmc
