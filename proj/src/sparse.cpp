#include "nsvlmc/sparse.hpp"

#include <cmath>
#include <limits>

#include "nsvlmc/numerics.hpp"

namespace nsvlmc {

LatentMoments q_f_moments(const InducingBlock& block, const KernelParams& kernel,
                          const Mat& x) {
  if (x.cols() != block.z.cols())
    throw DimensionMismatch("q_f_moments: input dimension mismatch");
  const Mat k_zz = gram_matrix(block.z, kernel);
  const CholeskyFactor chol = cholesky_with_jitter(k_zz);
  const Mat k_xz = kernel_matrix(x, block.z, kernel);

  // alpha = K_Z^{-1} K_ZX via two triangular solves
  const Mat tmp = chol.lower.triangularView<Eigen::Lower>().solve(k_xz.transpose());
  const Mat alpha =
      chol.lower.transpose().triangularView<Eigen::Upper>().solve(tmp);

  LatentMoments out;
  out.mu = alpha.transpose() * block.m;
  // var_i = k(x_i,x_i) - ||L^{-1} k_zx_i||^2 + ||s_chol^T alpha_i||^2
  const Mat sa = block.s_chol.transpose() * alpha;
  out.var = Vec(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const double prior = kernel.output_scale_sq;
    const double nystrom = tmp.col(i).squaredNorm();
    const double svar = sa.col(i).squaredNorm();
    out.var[i] = std::max(0.0, prior - nystrom + svar);
  }
  return out;
}

double kl_u(const std::vector<InducingBlock>& blocks,
            const std::vector<KernelParams>& kernels) {
  if (blocks.size() != kernels.size())
    throw DimensionMismatch("kl_u: blocks/kernels length mismatch");
  double total = 0.0;
  for (size_t q = 0; q < blocks.size(); ++q) {
    const auto& b = blocks[q];
    const Index m = b.z.rows();
    const Mat k_zz = gram_matrix(b.z, kernels[q]);
    const CholeskyFactor chol = cholesky_with_jitter(k_zz);

    double logdet_k = 0.0, logdet_s = 0.0;
    for (Index i = 0; i < m; ++i) {
      logdet_k += 2.0 * std::log(chol.lower(i, i));
      logdet_s += 2.0 * std::log(b.s_chol(i, i));
    }
    // Tr(K^{-1} S) = ||L^{-1} s_chol||_F^2
    const Mat ls = chol.lower.triangularView<Eigen::Lower>().solve(b.s_chol);
    const double trace = ls.squaredNorm();
    const double maha =
        chol.lower.triangularView<Eigen::Lower>().solve(b.m).squaredNorm();
    total += 0.5 * (logdet_k - logdet_s - double(m) + trace + maha);
  }
  return total;
}

double kl_a(const MixtureA& qa) {
  const Vec nu = qa.log_nu.array().exp();
  if (!(nu.array() > 0.0).all()) throw NonPositiveVariance("kl_a: nu_a must be > 0");
  const double n = double(qa.mu.size());
  return 0.5 * (-qa.log_nu.sum() - n + nu.sum() + qa.mu.squaredNorm());
}

Mat kmeans_centroids(const Mat& x, Index k, RngStream& rng, int iters) {
  const Index n = x.rows();
  if (k < 1 || k > n) throw InvalidSpec("kmeans_centroids: k out of range");

  // seeded initialization: k distinct uniform row picks
  std::vector<Index> picks;
  std::vector<bool> used(size_t(n), false);
  while (Index(picks.size()) < k) {
    const Index i = rng.uniform_index(n);
    if (used[size_t(i)]) continue;
    used[size_t(i)] = true;
    picks.push_back(i);
  }
  Mat centroids(k, x.cols());
  for (Index j = 0; j < k; ++j) centroids.row(j) = x.row(picks[size_t(j)]);

  std::vector<Index> assign(size_t(n), 0);
  for (int it = 0; it < iters; ++it) {
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < k; ++j) {
        const double d = (x.row(i) - centroids.row(j)).squaredNorm();
        if (d < best) {
          best = d;
          assign[size_t(i)] = j;
        }
      }
    }
    Mat sums = Mat::Zero(k, x.cols());
    Vec counts = Vec::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(assign[size_t(i)]) += x.row(i);
      counts[assign[size_t(i)]] += 1.0;
    }
    for (Index j = 0; j < k; ++j)
      if (counts[j] > 0.0) centroids.row(j) = sums.row(j) / counts[j];
    // empty clusters keep their previous centroid
  }
  return centroids;
}

}  // namespace nsvlmc
