#include "nsvlmc/neural.hpp"

#include <cmath>

namespace nsvlmc {

namespace {

Mat activate(const Mat& z, Activation act) {
  if (act == Activation::tanh) return z.array().tanh();
  return z.cwiseMax(0.0);
}

}  // namespace

Mat Mlp::forward(const Mat& x) const {
  if (weights.empty()) throw InvalidSpec("Mlp::forward: no layers");
  if (x.cols() != weights.front().rows())
    throw DimensionMismatch("Mlp::forward: input width mismatch");
  Mat h = x;
  for (size_t l = 0; l < weights.size(); ++l) {
    h = (h * weights[l]).rowwise() + biases[l].transpose();
    if (l + 1 < weights.size()) h = activate(h, act);
  }
  return h;
}

Mlp make_mlp(const std::vector<Index>& layer_sizes, Activation act, RngStream& rng) {
  if (layer_sizes.size() < 2) throw InvalidSpec("make_mlp: need at least in/out sizes");
  Mlp mlp;
  mlp.act = act;
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const Index fan_in = layer_sizes[l], fan_out = layer_sizes[l + 1];
    // Xavier-uniform: U[-a, a] with a = sqrt(6 / (fan_in + fan_out))
    const double a = std::sqrt(6.0 / double(fan_in + fan_out));
    Mat w(fan_in, fan_out);
    for (Index i = 0; i < fan_in; ++i)
      for (Index j = 0; j < fan_out; ++j) w(i, j) = a * (2.0 * rng.uniform() - 1.0);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Vec::Zero(fan_out));
  }
  return mlp;
}

NeuralMixturePrior make_neural_prior(Index d, Index h, Index q, RngStream& rng) {
  if (d < 1 || h < 1 || q < 1) throw InvalidSpec("make_neural_prior: bad dimensions");
  NeuralMixturePrior prior;
  prior.h = h;
  prior.q = q;
  const Index width = q * h;
  prior.trunk = make_mlp({d, width, width, width}, Activation::tanh, rng);
  const double a = std::sqrt(6.0 / double(width + h * q));
  auto xavier = [&](Index rows, Index cols) {
    Mat w(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) w(i, j) = a * (2.0 * rng.uniform() - 1.0);
    return w;
  };
  prior.w_mu = xavier(width, h * q);
  prior.b_mu = Vec::Zero(h * q);
  prior.w_nu = xavier(width, h * q);
  prior.b_nu = Vec::Zero(h * q);
  prior.log_nu0 = std::log(1e-4);
  return prior;
}

std::pair<Vec, Vec> prior_b_moments(const NeuralMixturePrior& prior, const Vec& x) {
  // trunk has hidden layers only; apply the final activation here so the
  // heads see activated features
  Mat t = prior.trunk.forward(x.transpose());
  t = t.array().tanh();
  const Vec feat = t.row(0);
  const Vec mu = prior.w_mu.transpose() * feat + prior.b_mu;
  const Vec pre = prior.w_nu.transpose() * feat + prior.b_nu;
  const double nu0 = std::exp(prior.log_nu0);
  const Vec nu = nu0 * (1.0 / (1.0 + (-pre.array()).exp()));
  return {mu, nu};
}

Mat sample_b(const NeuralMixturePrior& prior, const Vec& x, const Vec& eps) {
  if (eps.size() != prior.h * prior.q)
    throw DimensionMismatch("sample_b: eps length != h*q");
  auto [mu, nu] = prior_b_moments(prior, x);
  const Vec flat = mu + nu.cwiseMax(0.0).cwiseSqrt().cwiseProduct(eps);
  // row-major flattening: entry (h, q) at flat[h*Q + q]
  Mat b(prior.h, prior.q);
  for (Index i = 0; i < prior.h; ++i)
    for (Index j = 0; j < prior.q; ++j) b(i, j) = flat[i * prior.q + j];
  return b;
}

MixtureA make_mixture_a(Index c, Index h, RngStream& rng) {
  MixtureA qa;
  qa.c = c;
  qa.h = h;
  qa.mu = 0.1 * rng.normal_vec(c * h);  // N(0, 1e-2)
  qa.log_nu = Vec::Zero(c * h);
  return qa;
}

Mat sample_a(const MixtureA& qa, const Vec& eps) {
  if (eps.size() != qa.c * qa.h) throw DimensionMismatch("sample_a: eps length != c*h");
  const Vec flat =
      qa.mu + qa.log_nu.array().exp().sqrt().matrix().cwiseProduct(eps);
  Mat a(qa.c, qa.h);
  for (Index i = 0; i < qa.c; ++i)
    for (Index j = 0; j < qa.h; ++j) a(i, j) = flat[i * qa.h + j];
  return a;
}

}  // namespace nsvlmc
