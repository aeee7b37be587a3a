#include "nsvlmc/gp_exact.hpp"

#include <cmath>

#include "nsvlmc/autodiff.hpp"
#include "nsvlmc/numerics.hpp"
#include "nsvlmc/training.hpp"

namespace nsvlmc {

double gp_log_marginal(const ExactGpModel& m) {
  if (m.noise_var <= 0.0) throw NonPositiveNoise("gp_log_marginal: noise_var <= 0");
  Mat cov = gram_matrix(m.x, m.kernel);
  cov.diagonal().array() += m.noise_var;
  return gaussian_logpdf(m.y, Vec::Zero(m.y.size()), cov);
}

GpPrediction gp_predict(const ExactGpModel& m, const Mat& x_star) {
  Mat cov = gram_matrix(m.x, m.kernel);
  cov.diagonal().array() += m.noise_var;
  const CholeskyFactor chol = cholesky_with_jitter(cov);
  const Mat k_star = kernel_matrix(m.x, x_star, m.kernel);  // N x n_star

  const Mat v = chol.lower.triangularView<Eigen::Lower>().solve(k_star);
  const Vec alpha_y = chol.lower.triangularView<Eigen::Lower>().solve(m.y);

  GpPrediction out;
  out.mean = v.transpose() * alpha_y;
  out.var = Vec(x_star.rows());
  for (Index i = 0; i < x_star.rows(); ++i)
    out.var[i] =
        std::max(0.0, m.kernel.output_scale_sq - v.col(i).squaredNorm()) +
        m.noise_var;
  return out;
}

double gp_train_hyperparams(ExactGpModel& m, int iters, double lr) {
  const Index d = m.x.cols();
  const Index n = m.x.rows();
  // flat layout: [log_sf2, log_ls (d), log_noise]
  Vec params(d + 2);
  params[0] = std::log(m.kernel.output_scale_sq);
  params.segment(1, d) = m.kernel.length_scales.array().log();
  params[d + 1] = std::log(m.noise_var);

  auto objective = [&](const Vec& p, Vec* grad) {
    ad::Tape t;
    ad::Var log_sf2 = t.leaf(p.head(1));
    ad::Var log_ls = t.leaf(p.segment(1, d));
    ad::Var log_noise = t.leaf(p.tail(1));

    ad::Var k = ad::se_ard_matrix(t, t.constant(m.x), t.constant(m.x), log_sf2, log_ls);
    ad::Var noise_full =
        ad::broadcast_scalar(t, ad::cwise_exp(t, log_noise), n, n);
    ad::Var noise_diag =
        ad::cwise_mul(t, noise_full, t.constant(Mat::Identity(n, n)));
    ad::Var cov = ad::add(t, k, noise_diag);
    ad::Var l = ad::cholesky(t, cov);
    ad::Var alpha = ad::trisolve_lower(t, l, t.constant(m.y));
    ad::Var quad = ad::dot(t, alpha, alpha);
    ad::Var logdet = ad::logdet_from_chol(t, l);
    ad::Var obj = ad::scale(t, ad::add(t, quad, logdet), -0.5);
    obj = ad::add_scalar(t, obj, -0.5 * double(n) * std::log(2.0 * M_PI));

    if (grad) {
      t.backward(obj);
      grad->resize(d + 2);
      (*grad)[0] = t.grad(log_sf2)(0, 0);
      grad->segment(1, d) = t.grad(log_ls);
      (*grad)[d + 1] = t.grad(log_noise)(0, 0);
    }
    return t.sval(obj);
  };

  AdamState adam;
  double value = 0.0;
  Vec grad;
  for (int it = 0; it < iters; ++it) {
    value = objective(params, &grad);
    adam_step(params, grad, adam, lr);
  }
  m.kernel.output_scale_sq = std::exp(params[0]);
  m.kernel.length_scales = params.segment(1, d).array().exp();
  m.noise_var = std::exp(params[d + 1]);
  return objective(params, nullptr);
}

namespace {

void check_lmc(const ExactLmcModel& m) {
  const Index c = m.data.num_tasks();
  if (m.a.rows() != c || Index(m.kernels.size()) != m.a.cols() ||
      m.noise_vars.size() != c)
    throw DimensionMismatch("lmc: inconsistent kernels/coreg/noise shapes");
  if (!(m.noise_vars.array() > 0.0).all())
    throw NonPositiveNoise("lmc: noise variances must be > 0");
  if (m.data.total_points() > m.max_points)
    throw InvalidSpec("lmc: total points exceed the exact-model size guard");
}

Vec stacked_targets(const ExactLmcModel& m) {
  Vec y(m.data.total_points());
  Index row = 0;
  for (const auto& t : m.data.tasks) {
    y.segment(row, t.y.size()) = t.y;
    row += t.y.size();
  }
  return y;
}

}  // namespace

Mat lmc_joint_cov(const ExactLmcModel& m) {
  check_lmc(m);
  const Index n = m.data.total_points();
  const Index c = m.data.num_tasks();
  const Index q_count = Index(m.kernels.size());

  Mat cov = Mat::Zero(n, n);
  Index row = 0;
  for (Index ci = 0; ci < c; ++ci) {
    const auto& ti = m.data.tasks[size_t(ci)];
    Index col = 0;
    for (Index cj = 0; cj < c; ++cj) {
      const auto& tj = m.data.tasks[size_t(cj)];
      for (Index q = 0; q < q_count; ++q)
        cov.block(row, col, ti.x.rows(), tj.x.rows()) +=
            m.a(ci, q) * m.a(cj, q) *
            kernel_matrix(ti.x, tj.x, m.kernels[size_t(q)]);
      col += tj.x.rows();
    }
    cov.block(row, row, ti.x.rows(), ti.x.rows()).diagonal().array() +=
        m.noise_vars[ci];
    row += ti.x.rows();
  }
  return cov;
}

double lmc_log_marginal(const ExactLmcModel& m) {
  const Mat cov = lmc_joint_cov(m);
  const Vec y = stacked_targets(m);
  return gaussian_logpdf(y, Vec::Zero(y.size()), cov);
}

LmcPrediction lmc_predict(const ExactLmcModel& m, const Mat& x_star) {
  const Mat cov = lmc_joint_cov(m);
  const Vec y = stacked_targets(m);
  const CholeskyFactor chol = cholesky_with_jitter(cov);
  const Vec alpha_y = chol.lower.triangularView<Eigen::Lower>().solve(y);

  const Index c = m.data.num_tasks();
  const Index q_count = Index(m.kernels.size());
  const Index n_star = x_star.rows();

  LmcPrediction out;
  out.mean = Mat(n_star, c);
  out.var = Mat(n_star, c);
  for (Index cs = 0; cs < c; ++cs) {
    // cross-covariance of task cs at x_star with all training blocks
    Mat cross(m.data.total_points(), n_star);
    Index row = 0;
    for (Index ci = 0; ci < c; ++ci) {
      const auto& ti = m.data.tasks[size_t(ci)];
      Mat blockv = Mat::Zero(ti.x.rows(), n_star);
      for (Index q = 0; q < q_count; ++q)
        blockv += m.a(ci, q) * m.a(cs, q) *
                  kernel_matrix(ti.x, x_star, m.kernels[size_t(q)]);
      cross.middleRows(row, ti.x.rows()) = blockv;
      row += ti.x.rows();
    }
    const Mat v = chol.lower.triangularView<Eigen::Lower>().solve(cross);
    out.mean.col(cs) = v.transpose() * alpha_y;
    double prior = 0.0;
    for (Index q = 0; q < q_count; ++q)
      prior += m.a(cs, q) * m.a(cs, q) * m.kernels[size_t(q)].output_scale_sq;
    for (Index i = 0; i < n_star; ++i)
      out.var(i, cs) =
          std::max(0.0, prior - v.col(i).squaredNorm()) + m.noise_vars[cs];
  }
  return out;
}

}  // namespace nsvlmc
