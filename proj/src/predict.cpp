#include "nsvlmc/predict.hpp"

#include <cmath>

#include "nsvlmc/sparse.hpp"

namespace nsvlmc {

namespace {

Mat apply_warp(const ModelState& state, const Mat& x) {
  if (state.spec.variant != Variant::svlmc_dkl) return x;
  return state.mlp().forward(x);
}

}  // namespace

std::vector<LatentMoments> predict_latent(const ModelState& state, const Mat& x_star) {
  const Mat xw = apply_warp(state, x_star);
  std::vector<LatentMoments> out;
  for (Index q = 0; q < state.spec.q; ++q) {
    InducingBlock block = state.inducing(q);
    if (state.spec.variant == Variant::svlmc_dkl) block.z = apply_warp(state, block.z);
    out.push_back(q_f_moments(block, state.kernel(q), xw));
  }
  return out;
}

PredictiveSummary predict_outputs(const ModelState& state, const NormStats& norm,
                                  const Mat& x_star_raw, int n_samples,
                                  RngStream& rng) {
  if (n_samples < 2) throw InvalidSpec("predict_outputs: n_samples must be >= 2");
  const Index n = x_star_raw.rows();
  const Index c = state.c;
  const Index q_count = state.spec.q;

  Mat x_star(n, x_star_raw.cols());
  for (Index i = 0; i < n; ++i)
    x_star.row(i) = normalize_input(norm, x_star_raw.row(i)).transpose();

  const std::vector<LatentMoments> latents = predict_latent(state, x_star);
  Mat mu_f(n, q_count), var_f(n, q_count);
  for (Index q = 0; q < q_count; ++q) {
    mu_f.col(q) = latents[size_t(q)].mu;
    var_f.col(q) = latents[size_t(q)].var;
  }
  const Vec noise = state.noise_vars();
  const Variant variant = state.spec.variant;

  // Mixture over draws of (A, B(x*)) — and f for the nonlinear variant.
  Mat sum_mean = Mat::Zero(n, c);
  Mat sum_sq = Mat::Zero(n, c);  // E[mean^2 + var]
  NeuralMixturePrior prior;
  MixtureA qa;
  if (variant == Variant::nsvlmc) {
    prior = state.neural_prior();
    qa = state.mixture_a();
  }
  Mat a_of_x;
  if (variant == Variant::ngprn) a_of_x = state.mlp().forward(x_star);

  for (int s = 0; s < n_samples; ++s) {
    Mat mean(n, c), var(n, c);
    switch (variant) {
      case Variant::svlmc:
      case Variant::svlmc_dkl: {
        const Mat a = state.coreg_a();
        mean = mu_f * a.transpose();
        var = var_f * a.cwiseProduct(a).transpose();
        break;
      }
      case Variant::ngprn: {
        for (Index i = 0; i < n; ++i)
          for (Index ci = 0; ci < c; ++ci) {
            double m = 0.0, v = 0.0;
            for (Index q = 0; q < q_count; ++q) {
              const double w = a_of_x(i, ci * q_count + q);
              m += w * mu_f(i, q);
              v += w * w * var_f(i, q);
            }
            mean(i, ci) = m;
            var(i, ci) = v;
          }
        break;
      }
      case Variant::nsvlmc: {
        const Mat a = sample_a(qa, rng.normal_vec(qa.c * qa.h));
        for (Index i = 0; i < n; ++i) {
          const Mat b =
              sample_b(prior, x_star.row(i), rng.normal_vec(prior.h * prior.q));
          const Mat w = a * b;  // c x q
          for (Index ci = 0; ci < c; ++ci) {
            double m = 0.0, v = 0.0;
            for (Index q = 0; q < q_count; ++q) {
              m += w(ci, q) * mu_f(i, q);
              v += w(ci, q) * w(ci, q) * var_f(i, q);
            }
            mean(i, ci) = m;
            var(i, ci) = v;
          }
        }
        break;
      }
      case Variant::nmogp: {
        const Mat a = state.coreg_a();
        const Mat b = state.coreg_b();
        const Mat eps = rng.normal_mat(n, q_count);
        const Mat f =
            mu_f + var_f.cwiseMax(0.0).cwiseSqrt().cwiseProduct(eps);
        Mat g = f * b.transpose();  // n x h
        g = state.spec.activation == Activation::tanh
                ? Mat(g.array().tanh())
                : Mat(g.cwiseMax(0.0));
        mean = g * a.transpose();
        var.setZero();  // f randomness carries the spread across draws
        break;
      }
    }
    for (Index ci = 0; ci < c; ++ci) var.col(ci).array() += noise[ci];
    sum_mean += mean;
    sum_sq += mean.cwiseProduct(mean) + var;
  }

  PredictiveSummary out;
  out.mean = Mat(n, c);
  out.var = Mat(n, c);
  const double ns = double(n_samples);
  for (Index ci = 0; ci < c; ++ci) {
    const Vec mix_mean = sum_mean.col(ci) / ns;
    const Vec mix_var =
        (sum_sq.col(ci) / ns - mix_mean.cwiseProduct(mix_mean)).cwiseMax(1e-12);
    for (Index i = 0; i < n; ++i) {
      out.mean(i, ci) = denormalize_output(norm, ci, mix_mean[i]);
      out.var(i, ci) = denormalize_variance(norm, ci, mix_var[i]);
    }
  }
  return out;
}

Metrics compute_metrics(const std::vector<Vec>& mean, const std::vector<Vec>& var,
                        const std::vector<TaskBlock>& test,
                        const MultiTaskDataset& train_raw) {
  Metrics out;
  double sum_abs = 0.0, sum_smse = 0.0, sum_nll = 0.0;
  Index total = 0;
  for (size_t c = 0; c < test.size(); ++c) {
    TaskMetrics tm;
    tm.n = test[c].y.size();
    if (tm.n == 0) {
      out.per_task.push_back(tm);
      continue;
    }
    const Vec& y = test[c].y;
    const Vec& mu = mean[c];
    const Vec& nu = var[c];
    if (mu.size() != tm.n || nu.size() != tm.n)
      throw DimensionMismatch("compute_metrics: prediction/test size mismatch");

    const Vec& ytr = train_raw.tasks[c].y;
    const double train_var =
        (ytr.array() - ytr.mean()).square().sum() / double(ytr.size());
    if (train_var <= 0.0) throw ZeroVariance("compute_metrics: constant training outputs");

    double abs_sum = 0.0, sq_sum = 0.0, nll_sum = 0.0;
    for (Index i = 0; i < tm.n; ++i) {
      const double e = mu[i] - y[i];
      abs_sum += std::abs(e);
      sq_sum += e * e / train_var;
      nll_sum += 0.5 * (e * e / nu[i] + std::log(2.0 * M_PI * nu[i]));
    }
    tm.mae = abs_sum / double(tm.n);
    tm.smse = sq_sum / double(tm.n);
    tm.nll = nll_sum / double(tm.n);
    out.per_task.push_back(tm);
    sum_abs += abs_sum;
    sum_smse += sq_sum;
    sum_nll += nll_sum;
    total += tm.n;
  }
  if (total == 0) throw EmptyTestSet("compute_metrics: no test points");
  out.overall.n = total;
  out.overall.mae = sum_abs / double(total);
  out.overall.smse = sum_smse / double(total);
  out.overall.nll = sum_nll / double(total);
  return out;
}

Metrics evaluate_model(const ModelState& state, const MultiTaskDataset& train_raw,
                       const NormStats& norm, const std::vector<TaskBlock>& test,
                       int n_samples, RngStream& rng) {
  std::vector<Vec> means(test.size()), vars(test.size());
  for (size_t c = 0; c < test.size(); ++c) {
    if (test[c].y.size() == 0) continue;
    const PredictiveSummary pred =
        predict_outputs(state, norm, test[c].x, n_samples, rng);
    means[c] = pred.mean.col(Index(c));
    vars[c] = pred.var.col(Index(c));
  }
  return compute_metrics(means, vars, test, train_raw);
}

}  // namespace nsvlmc
