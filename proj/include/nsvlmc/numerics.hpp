#pragma once

#include <functional>

#include "nsvlmc/common.hpp"

namespace nsvlmc {

struct CholeskyFactor {
  Mat lower;           // lower triangular, strictly positive diagonal
  double jitter_used;  // absolute jitter added to the diagonal
};

// Cholesky factorization of a symmetric matrix with escalating jitter.
// base_jitter is relative to the mean diagonal; escalation is x10 per retry,
// at most `max_escalations` retries before NotPositiveDefinite.
CholeskyFactor cholesky_with_jitter(const Mat& m, double base_jitter = 1e-6,
                                    int max_escalations = 5);

// log N(y | mu, cov), exact via Cholesky (jitter applied only on failure).
double gaussian_logpdf(const Vec& y, const Vec& mu, const Mat& cov);

// mu + sqrt(var) .* eps
Vec reparam_sample(const Vec& mu, const Vec& var, const Vec& eps);

// Central finite differences, the verification oracle for every implemented
// gradient in this library.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                     double h = 1e-5);

}  // namespace nsvlmc
