#pragma once

#include <vector>

#include "nsvlmc/common.hpp"
#include "nsvlmc/kernels.hpp"
#include "nsvlmc/neural.hpp"

namespace nsvlmc {

// Inducing-point block for one latent process: locations z (m x d) and the
// variational posterior q(u) = N(m, S) with S = s_chol s_chol^T.
struct InducingBlock {
  Mat z;
  Vec m;
  Mat s_chol;  // lower triangular
};

// Diagonal marginals of q(f_q) at the given inputs.
struct LatentMoments {
  Vec mu;
  Vec var;
};

LatentMoments q_f_moments(const InducingBlock& block, const KernelParams& kernel,
                          const Mat& x);

// KL[q(u) || p(u)] summed over latent processes.
double kl_u(const std::vector<InducingBlock>& blocks,
            const std::vector<KernelParams>& kernels);

// KL between the mean-field q(A) and the standard-normal prior on vec(A).
double kl_a(const MixtureA& qa);

// Lloyd's algorithm with seeded uniform initialization; used to place
// inducing points when m is smaller than the pooled training set.
Mat kmeans_centroids(const Mat& x, Index k, RngStream& rng, int iters = 25);

}  // namespace nsvlmc
