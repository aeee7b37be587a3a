#pragma once

#include <utility>
#include <vector>

#include "nsvlmc/common.hpp"

namespace nsvlmc {

enum class Activation { tanh, relu };

// Dense feed-forward network. Weights are (in x out); forward computes
// act(X W + b) through the hidden layers and a linear output layer.
struct Mlp {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  Activation act = Activation::tanh;

  Mat forward(const Mat& x) const;  // rows are inputs
};

// Xavier-uniform weights, zero biases. layer_sizes = {in, hidden..., out}.
Mlp make_mlp(const std::vector<Index>& layer_sizes, Activation act, RngStream& rng);

// Gaussian prior over the mixing matrix B(x): an MLP trunk (three tanh hidden
// layers of q*h units) feeding a mean head and a sigmoid variance head scaled
// by a global nu0. B(x) is h x q, flattened row-major as (h*q).
struct NeuralMixturePrior {
  Mlp trunk;          // d -> q*h (three hidden layers)
  Mat w_mu;           // (q*h) x (h*q)
  Vec b_mu;           // h*q
  Mat w_nu;
  Vec b_nu;
  double log_nu0 = 0.0;
  Index h = 0, q = 0;
};

NeuralMixturePrior make_neural_prior(Index d, Index h, Index q, RngStream& rng);

// Per-entry mean / variance of vec(B(x)) for a single input (row vector x).
// Both outputs have length h*q; variances are strictly positive.
std::pair<Vec, Vec> prior_b_moments(const NeuralMixturePrior& prior, const Vec& x);

// Reparameterized draw B(x) = mu + sqrt(nu) .* eps, reshaped to h x q.
Mat sample_b(const NeuralMixturePrior& prior, const Vec& x, const Vec& eps);

// Mean-field Gaussian posterior over the task mixing matrix A (c x h),
// flattened row-major. Variances are kept in log space.
struct MixtureA {
  Vec mu;      // c*h
  Vec log_nu;  // c*h
  Index c = 0, h = 0;
};

MixtureA make_mixture_a(Index c, Index h, RngStream& rng);

Mat sample_a(const MixtureA& qa, const Vec& eps);  // c x h

}  // namespace nsvlmc
