#include "nsvlmc/elbo.hpp"

#include <cmath>
#include <numeric>

#include "nsvlmc/autodiff.hpp"
#include "nsvlmc/numerics.hpp"
#include "nsvlmc/sparse.hpp"

namespace nsvlmc {

ElboDraws make_elbo_draws(const ModelState& state, const MultiTaskDataset& data,
                         const ElboConfig& cfg, RngStream& rng) {
  if (cfg.s < 1) throw InvalidSpec("make_elbo_draws: s must be >= 1");
  ElboDraws draws;

  Index n_batch = 0;
  for (const auto& task : data.tasks) {
    const Index n = task.x.rows();
    std::vector<Index> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), Index(0));
    if (cfg.minibatch > 0 && cfg.minibatch < n) {
      // partial Fisher-Yates: uniform without replacement
      for (Index i = 0; i < cfg.minibatch; ++i) {
        const Index j = i + rng.uniform_index(n - i);
        std::swap(idx[size_t(i)], idx[size_t(j)]);
      }
      idx.resize(size_t(cfg.minibatch));
    }
    n_batch += Index(idx.size());
    draws.batch.push_back(std::move(idx));
  }

  const Variant v = state.spec.variant;
  if (v == Variant::nsvlmc) {
    draws.eps_a = rng.normal_vec(state.c * state.spec.h);
    for (int s = 0; s < cfg.s; ++s)
      draws.eps_b.push_back(rng.normal_mat(n_batch, state.spec.h * state.spec.q));
  } else if (v == Variant::nmogp) {
    for (int s = 0; s < cfg.s; ++s)
      draws.eps_f.push_back(rng.normal_mat(n_batch, state.spec.q));
  }
  return draws;
}

double expected_loglik_term(const Mat& w, const Mat& w_var_sq, const Mat& mu,
                            const Mat& var, const Vec& y, double noise_var,
                            double scale) {
  if (noise_var <= 0.0) throw NonPositiveNoise("expected_loglik_term: noise <= 0");
  const Index n = y.size();
  const Vec mean = (w.cwiseProduct(mu)).rowwise().sum();
  const double sumsq = (y - mean).squaredNorm();
  const double corr = (w_var_sq.cwiseProduct(var)).sum();
  return scale * (-0.5 * double(n) * std::log(2.0 * M_PI * noise_var) -
                  0.5 * (sumsq + corr) / noise_var);
}

namespace {

using ad::Tape;
using ad::Var;

struct GraphInputs {
  Mat x;                      // stacked batch inputs, task order
  std::vector<Vec> y;         // per-task batch targets
  std::vector<Index> offset;  // row offset of each task's segment
  std::vector<Index> count;   // rows per task
  std::vector<double> scale;  // N^c / |B^c|
};

GraphInputs gather_batch(const MultiTaskDataset& data, const ElboDraws& draws) {
  GraphInputs in;
  Index total = 0;
  for (size_t c = 0; c < data.tasks.size(); ++c) total += Index(draws.batch[c].size());
  in.x = Mat(total, data.input_dim());
  Index row = 0;
  for (size_t c = 0; c < data.tasks.size(); ++c) {
    const auto& t = data.tasks[c];
    const auto& idx = draws.batch[c];
    in.offset.push_back(row);
    in.count.push_back(Index(idx.size()));
    in.scale.push_back(double(t.x.rows()) / double(idx.size()));
    Vec yb(Index(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i) {
      in.x.row(row + Index(i)) = t.x.row(idx[i]);
      yb[Index(i)] = t.y[idx[i]];
    }
    row += Index(idx.size());
    in.y.push_back(std::move(yb));
  }
  return in;
}

// Forward an MLP whose parameters live on the tape; hidden layers activated,
// final layer linear.
Var mlp_graph(Tape& t, Var x, const std::vector<Var>& ws, const std::vector<Var>& bs,
              Activation act, bool activate_last) {
  Var h = x;
  for (size_t l = 0; l < ws.size(); ++l) {
    h = ad::add_rowvec(t, ad::matmul(t, h, ws[l]), ad::transpose(t, bs[l]));
    const bool apply = l + 1 < ws.size() || activate_last;
    if (apply) h = act == Activation::tanh ? ad::cwise_tanh(t, h) : ad::cwise_relu(t, h);
  }
  return h;
}

struct Graph {
  Tape tape;
  std::vector<Var> leaves;  // aligned with ParamStore entries
  Var objective{-1};
};

// Builds the full IWVI objective on a fresh tape. Every ParamStore entry
// becomes one leaf so gradients scatter back by entry order.
void build_graph(Graph& g, const ModelState& st, const MultiTaskDataset& data,
                 const ElboConfig& cfg, const ElboDraws& draws) {
  Tape& t = g.tape;
  const auto& ps = st.params;
  for (size_t i = 0; i < ps.entries().size(); ++i)
    g.leaves.push_back(t.leaf(ps.mat(int(i))));
  auto leaf = [&](int id) { return g.leaves[size_t(id)]; };

  const GraphInputs in = gather_batch(data, draws);
  const Index n = in.x.rows();
  const Index q_count = st.spec.q;
  const Variant variant = st.spec.variant;

  Var x_in = t.constant(in.x);
  // deep-kernel warp applies to both the data and the inducing inputs
  std::vector<Var> warp_w, warp_b;
  if (variant == Variant::svlmc_dkl) {
    for (size_t l = 0; l < st.id_mlp_w.size(); ++l) {
      warp_w.push_back(leaf(st.id_mlp_w[l]));
      warp_b.push_back(leaf(st.id_mlp_b[l]));
    }
    x_in = mlp_graph(t, x_in, warp_w, warp_b, Activation::tanh, false);
  }

  // per-latent moments at the batch, and the u-KL
  std::vector<Var> mu_cols, var_cols;
  Var kl_u_total = t.scalar_const(0.0);
  for (Index q = 0; q < q_count; ++q) {
    Var log_sf2 = leaf(st.id_log_sf2[size_t(q)]);
    Var log_ls = leaf(st.id_log_ls[size_t(q)]);
    Var z = leaf(st.id_z[size_t(q)]);
    if (variant == Variant::svlmc_dkl)
      z = mlp_graph(t, z, warp_w, warp_b, Activation::tanh, false);
    Var u_m = leaf(st.id_u_m[size_t(q)]);
    Var s_chol = ad::make_lower_chol(t, leaf(st.id_u_s[size_t(q)]));

    Var k_zz = ad::se_ard_matrix(t, z, z, log_sf2, log_ls);
    Var l_z = ad::cholesky(t, k_zz);
    Var k_xz = ad::se_ard_matrix(t, x_in, z, log_sf2, log_ls);

    Var v = ad::trisolve_lower(t, l_z, ad::transpose(t, k_xz));  // m x n
    Var w2 = ad::trisolve_lower_t(t, l_z, v);                    // K_Z^{-1} K_ZX
    Var alpha_m = ad::trisolve_lower_t(t, l_z, ad::trisolve_lower(t, l_z, u_m));
    Var mu_q = ad::matmul(t, k_xz, alpha_m);  // n x 1

    Var prior_diag = ad::broadcast_scalar(t, ad::cwise_exp(t, log_sf2), n, 1);
    Var nystrom = ad::transpose(t, ad::colwise_sum(t, ad::cwise_square(t, v)));
    Var sv = ad::matmul(t, ad::transpose(t, s_chol), w2);  // m x n
    Var svar = ad::transpose(t, ad::colwise_sum(t, ad::cwise_square(t, sv)));
    Var var_q = ad::add(t, ad::sub(t, prior_diag, nystrom), svar);

    mu_cols.push_back(mu_q);
    var_cols.push_back(var_q);

    // KL[q(u_q) || p(u_q)]
    Var logdet_k = ad::logdet_from_chol(t, l_z);
    Var logdet_s = ad::logdet_from_chol(t, s_chol);
    Var trace = ad::sum(t, ad::cwise_square(t, ad::trisolve_lower(t, l_z, s_chol)));
    Var maha = ad::sum(t, ad::cwise_square(t, ad::trisolve_lower(t, l_z, u_m)));
    Var kl_q = ad::scale(
        t, ad::add(t, ad::add(t, ad::sub(t, logdet_k, logdet_s), trace), maha), 0.5);
    kl_q = ad::add_scalar(t, kl_q, -0.5 * double(st.m));
    kl_u_total = ad::add(t, kl_u_total, kl_q);
  }
  Var mu_all = ad::hcat(t, mu_cols);    // n x q
  Var var_all = ad::hcat(t, var_cols);  // n x q

  Var log_noise = leaf(st.id_log_noise);  // c x 1

  // variant-specific mixing machinery
  Var a_sample{-1}, mu_b{-1}, nu_b{-1};
  Var kl_a_term = t.scalar_const(0.0);
  if (variant == Variant::nsvlmc) {
    std::vector<Var> tw, tb;
    for (size_t l = 0; l < st.id_mlp_w.size(); ++l) {
      tw.push_back(leaf(st.id_mlp_w[l]));
      tb.push_back(leaf(st.id_mlp_b[l]));
    }
    Var trunk = mlp_graph(t, t.constant(in.x), tw, tb, Activation::tanh, true);
    mu_b = ad::add_rowvec(t, ad::matmul(t, trunk, leaf(st.id_head_w_mu)),
                          ad::transpose(t, leaf(st.id_head_b_mu)));
    Var pre = ad::add_rowvec(t, ad::matmul(t, trunk, leaf(st.id_head_w_nu)),
                             ad::transpose(t, leaf(st.id_head_b_nu)));
    Var nu0 = ad::cwise_exp(t, leaf(st.id_log_nu0));
    nu_b = ad::cwise_mul(t, ad::broadcast_scalar(t, nu0, n, st.spec.h * q_count),
                         ad::cwise_sigmoid(t, pre));

    Var a_mu = leaf(st.id_a_mu);          // 1 x c*h
    Var a_log_nu = leaf(st.id_a_log_nu);  // 1 x c*h
    Var a_sd = ad::cwise_sqrt_clamp(t, ad::cwise_exp(t, a_log_nu));
    a_sample = ad::add(
        t, a_mu, ad::cwise_mul(t, a_sd, t.constant(draws.eps_a.transpose())));

    // KL[q(A) || N(0, I)]
    Var kl = ad::add(t, ad::sub(t, ad::sum(t, ad::cwise_exp(t, a_log_nu)),
                                ad::sum(t, a_log_nu)),
                     ad::sum(t, ad::cwise_square(t, a_mu)));
    kl_a_term = ad::add_scalar(t, ad::scale(t, kl, 0.5),
                               -0.5 * double(st.c * st.spec.h));
  }

  const int s_eff = (variant == Variant::nsvlmc || variant == Variant::nmogp)
                        ? cfg.s
                        : 1;  // deterministic mixing: identical importance terms

  // ngprn: deterministic input-dependent weights, shared across samples
  Var a_of_x{-1};
  if (variant == Variant::ngprn) {
    std::vector<Var> aw, ab;
    for (size_t l = 0; l < st.id_mlp_w.size(); ++l) {
      aw.push_back(leaf(st.id_mlp_w[l]));
      ab.push_back(leaf(st.id_mlp_b[l]));
    }
    a_of_x = mlp_graph(t, t.constant(in.x), aw, ab, Activation::tanh, false);
  }

  std::vector<Var> log_terms;
  double const_total = 0.0;
  for (int s = 0; s < s_eff; ++s) {
    Var b_s{-1}, f_s{-1}, act_f{-1};
    if (variant == Variant::nsvlmc) {
      b_s = ad::add(t, mu_b,
                    ad::cwise_mul(t, ad::cwise_sqrt_clamp(t, nu_b),
                                  t.constant(draws.eps_b[size_t(s)])));
    } else if (variant == Variant::nmogp) {
      f_s = ad::add(t, mu_all,
                    ad::cwise_mul(t, ad::cwise_sqrt_clamp(t, var_all),
                                  t.constant(draws.eps_f[size_t(s)])));
      Var bf = ad::matmul(t, f_s, ad::transpose(t, leaf(st.id_coreg_b)));
      act_f = st.spec.activation == Activation::tanh ? ad::cwise_tanh(t, bf)
                                                     : ad::cwise_relu(t, bf);
    }

    Var term = t.scalar_const(0.0);
    for (Index c = 0; c < st.c; ++c) {
      const Index r0 = in.offset[size_t(c)];
      const Index nc = in.count[size_t(c)];
      const double scale_c = in.scale[size_t(c)];
      Var y_c = t.constant(in.y[size_t(c)]);
      Var mu_seg = ad::block(t, mu_all, r0, 0, nc, q_count);
      Var var_seg = ad::block(t, var_all, r0, 0, nc, q_count);

      Var mean{-1}, corr{-1};
      switch (variant) {
        case Variant::nsvlmc: {
          Var a_row = ad::block(t, a_sample, 0, c * st.spec.h, 1, st.spec.h);
          Var b_seg = ad::block(t, b_s, r0, 0, nc, st.spec.h * q_count);
          Var w = ad::mix_contract(t, a_row, b_seg, q_count);
          mean = ad::rowwise_sum(t, ad::cwise_mul(t, w, mu_seg));
          if (st.spec.variance_mode == VarianceTermMode::exact_cross) {
            corr = ad::sum(t, ad::cwise_mul(t, ad::cwise_square(t, w), var_seg));
          } else {
            Var w2 = ad::mix_contract(t, ad::cwise_square(t, a_row),
                                      ad::cwise_square(t, b_seg), q_count);
            corr = ad::sum(t, ad::cwise_mul(t, w2, var_seg));
          }
          break;
        }
        case Variant::svlmc:
        case Variant::svlmc_dkl: {
          Var a_row = ad::block(t, leaf(st.id_coreg_a), c, 0, 1, q_count);
          Var w = ad::add_rowvec(t, t.constant(Mat::Zero(nc, q_count)), a_row);
          mean = ad::rowwise_sum(t, ad::cwise_mul(t, w, mu_seg));
          corr = ad::sum(t, ad::cwise_mul(t, ad::cwise_square(t, w), var_seg));
          break;
        }
        case Variant::ngprn: {
          Var w = ad::block(t, a_of_x, r0, c * q_count, nc, q_count);
          mean = ad::rowwise_sum(t, ad::cwise_mul(t, w, mu_seg));
          corr = ad::sum(t, ad::cwise_mul(t, ad::cwise_square(t, w), var_seg));
          break;
        }
        case Variant::nmogp: {
          Var g_seg = ad::block(t, act_f, r0, 0, nc, st.spec.h);
          Var a_row = ad::block(t, leaf(st.id_coreg_a), c, 0, 1, st.spec.h);
          mean = ad::matmul(t, g_seg, ad::transpose(t, a_row));
          corr = t.scalar_const(0.0);  // f variance handled by sampling f itself
          break;
        }
      }

      Var resid = ad::sub(t, y_c, mean);
      Var sumsq = ad::sum(t, ad::cwise_square(t, resid));
      Var ln_c = ad::block(t, log_noise, c, 0, 1, 1);
      Var inv_nu = ad::cwise_exp(t, ad::neg(t, ln_c));
      Var quad =
          ad::scale(t, ad::cwise_mul(t, ad::add(t, sumsq, corr), inv_nu),
                    -0.5 * scale_c);
      Var lin = ad::scale(t, ln_c, -0.5 * double(nc) * scale_c);
      term = ad::add(t, term, ad::add(t, quad, lin));
      if (s == 0)
        const_total += -0.5 * double(nc) * scale_c * std::log(2.0 * M_PI);
    }
    log_terms.push_back(term);
  }

  Var likelihood = log_terms.size() == 1 ? log_terms[0]
                                         : ad::logsumexp_mean(t, log_terms);
  Var obj = ad::sub(t, ad::sub(t, likelihood, kl_u_total), kl_a_term);
  g.objective = ad::add_scalar(t, obj, const_total);
}

}  // namespace

double elbo_value(const ModelState& state, const MultiTaskDataset& data,
                  const ElboConfig& cfg, const ElboDraws& draws) {
  Graph g;
  build_graph(g, state, data, cfg, draws);
  return g.tape.sval(g.objective);
}

ElboResult elbo_value_and_grad(const ModelState& state, const MultiTaskDataset& data,
                               const ElboConfig& cfg, const ElboDraws& draws) {
  Graph g;
  build_graph(g, state, data, cfg, draws);
  g.tape.backward(g.objective);

  ElboResult out;
  out.value = g.tape.sval(g.objective);
  out.grad = Vec::Zero(state.params.data().size());
  const auto& entries = state.params.entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    const Mat grad = g.tape.grad(g.leaves[i]);
    const auto& e = entries[i];
    // column-major layouts match the flat store
    out.grad.segment(e.offset, e.rows * e.cols) =
        Eigen::Map<const Vec>(grad.data(), grad.size());
  }
  return out;
}

double elbo_iwvi(const ModelState& state, const MultiTaskDataset& data, int s,
                 RngStream& rng, Index minibatch) {
  ElboConfig cfg;
  cfg.s = s;
  cfg.minibatch = minibatch;
  const ElboDraws draws = make_elbo_draws(state, data, cfg, rng);
  return elbo_value(state, data, cfg, draws);
}

double elbo_tight(const ModelState& state, const MultiTaskDataset& data,
                  RngStream& rng, Index minibatch) {
  return elbo_iwvi(state, data, 1, rng, minibatch);
}

}  // namespace nsvlmc
