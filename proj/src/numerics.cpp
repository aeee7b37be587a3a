#include "nsvlmc/numerics.hpp"

#include <cmath>

namespace nsvlmc {

CholeskyFactor cholesky_with_jitter(const Mat& m, double base_jitter,
                                    int max_escalations) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("cholesky_with_jitter: matrix not square");
  const Index n = m.rows();
  const double mean_diag = n > 0 ? m.diagonal().cwiseAbs().mean() : 0.0;
  const double scale = mean_diag > 0 ? mean_diag : 1.0;

  double jitter = 0.0;
  for (int attempt = 0; attempt <= max_escalations + 1; ++attempt) {
    Mat work = m;
    if (jitter > 0) work.diagonal().array() += jitter;
    Eigen::LLT<Mat> llt(work);
    if (llt.info() == Eigen::Success) {
      Mat lower = llt.matrixL();
      if ((lower.diagonal().array() > 0).all())
        return {std::move(lower), jitter};
    }
    jitter = (jitter == 0.0) ? base_jitter * scale : jitter * 10.0;
    if (base_jitter <= 0.0 && jitter == 0.0) break;
  }
  throw NotPositiveDefinite(
      "cholesky_with_jitter: factorization failed after jitter cap");
}

double gaussian_logpdf(const Vec& y, const Vec& mu, const Mat& cov) {
  if (y.size() != mu.size() || cov.rows() != y.size() ||
      cov.cols() != y.size())
    throw DimensionMismatch("gaussian_logpdf: dimension mismatch");
  const Index n = y.size();
  // first attempt is jitterless; escalation only kicks in on LLT failure
  CholeskyFactor f = cholesky_with_jitter(cov);
  Vec alpha = f.lower.triangularView<Eigen::Lower>().solve(y - mu);
  double logdet = 2.0 * f.lower.diagonal().array().log().sum();
  return -0.5 * (double(n) * std::log(2.0 * M_PI) + logdet +
                 alpha.squaredNorm());
}

Vec reparam_sample(const Vec& mu, const Vec& var, const Vec& eps) {
  if (mu.size() != var.size() || mu.size() != eps.size())
    throw DimensionMismatch("reparam_sample: dimension mismatch");
  return mu.array() + var.array().max(0.0).sqrt() * eps.array();
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                     double h) {
  Vec g(x.size());
  Vec xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NonFiniteFunctionValue("finite_diff_grad: non-finite value");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace nsvlmc
