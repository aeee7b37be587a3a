#include "nsvlmc/kernels.hpp"

#include <cmath>

namespace nsvlmc {

double se_ard(const Vec& x, const Vec& x2, const KernelParams& p) {
  if (x.size() != x2.size() || x.size() != p.length_scales.size())
    throw DimensionMismatch("se_ard: dimension mismatch");
  const double d2 =
      ((x - x2).array() / p.length_scales.array()).square().sum();
  return p.output_scale_sq * std::exp(-0.5 * d2);
}

Mat kernel_matrix(const Mat& X, const Mat& X2, const KernelParams& p) {
  if (X.cols() != X2.cols() || X.cols() != p.length_scales.size())
    throw DimensionMismatch("kernel_matrix: dimension mismatch");
  const Vec inv_l = p.length_scales.cwiseInverse();
  const Mat Xs = X * inv_l.asDiagonal();
  const Mat X2s = X2 * inv_l.asDiagonal();
  const Vec r = Xs.rowwise().squaredNorm();
  const Vec c = X2s.rowwise().squaredNorm();
  Mat d2 = -2.0 * (Xs * X2s.transpose());
  d2.colwise() += r;
  d2.rowwise() += c.transpose();
  return p.output_scale_sq * (-0.5 * d2.array().max(0.0)).exp();
}

Mat gram_matrix(const Mat& X, const KernelParams& p) {
  Mat K = kernel_matrix(X, X, p);
  K = 0.5 * (K + K.transpose()).eval();
  K.diagonal().setConstant(p.output_scale_sq);
  return K;
}

}  // namespace nsvlmc
