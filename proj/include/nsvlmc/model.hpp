#pragma once

#include <string>
#include <vector>

#include "nsvlmc/common.hpp"
#include "nsvlmc/data.hpp"
#include "nsvlmc/gp_exact.hpp"
#include "nsvlmc/kernels.hpp"
#include "nsvlmc/neural.hpp"
#include "nsvlmc/sparse.hpp"

namespace nsvlmc {

enum class Variant { svlmc, nsvlmc, nmogp, ngprn, svlmc_dkl };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

enum class VarianceTermMode { exact_cross, paper_literal };

struct ModelSpec {
  Variant variant = Variant::nsvlmc;
  Index q = 2;                 // latent processes
  Index h = 20;                // mixture rank (ignored for svlmc/ngprn/svlmc_dkl)
  Index m_per_latent = 0;      // 0 = use all training inputs
  double length_scale_init = 0.1;
  double output_scale_init = 1.0;
  double noise_var_init = 1e-2;
  Activation activation = Activation::tanh;  // nmogp only
  VarianceTermMode variance_mode = VarianceTermMode::exact_cross;
};

// One named view into the flat parameter vector. Matrices are stored
// column-major at data[offset .. offset + rows*cols).
struct ParamEntry {
  std::string name;
  std::string group;  // "kernel" | "inducing" | "mlp" | "mixture_a" | "coreg" | "noise"
  Index offset = 0, rows = 0, cols = 0;
};

class ParamStore {
 public:
  int declare(std::string name, std::string group, Index rows, Index cols);
  void finalize();  // allocates the flat vector (zero-filled)

  Eigen::Map<Mat> mat(int id);
  Eigen::Map<const Mat> mat(int id) const;
  double& scalar(int id);

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }
  const ParamEntry& entry(int id) const { return entries_[size_t(id)]; }
  int find(const std::string& name) const;  // -1 if absent

 private:
  std::vector<ParamEntry> entries_;
  Vec data_;
  bool finalized_ = false;
};

// A model variant plus its trainable state. Parameter ids index into `params`;
// unused ids are -1 depending on the variant.
struct ModelState {
  ModelSpec spec;
  Index c = 0, d = 0, n_train = 0, m = 0;
  ParamStore params;

  // per latent process q
  std::vector<int> id_log_sf2, id_log_ls, id_z, id_u_m, id_u_s;
  int id_log_noise = -1;   // c x 1
  int id_coreg_a = -1;     // svlmc/svlmc_dkl: c x q; nmogp: c x h
  int id_coreg_b = -1;     // nmogp: h x q
  int id_a_mu = -1, id_a_log_nu = -1;                  // nsvlmc mixture posterior
  std::vector<int> id_mlp_w, id_mlp_b;                 // trunk/warp/ngprn layers
  int id_head_w_mu = -1, id_head_b_mu = -1;            // nsvlmc heads
  int id_head_w_nu = -1, id_head_b_nu = -1;
  int id_log_nu0 = -1;

  // Plain-struct accessors (copies of current values).
  KernelParams kernel(Index q) const;
  InducingBlock inducing(Index q) const;  // s_chol materialized from the raw block
  Vec noise_vars() const;
  MixtureA mixture_a() const;
  NeuralMixturePrior neural_prior() const;
  Mlp mlp() const;  // warp (svlmc_dkl) or A(x) network (ngprn)
  Mat coreg_a() const;
  Mat coreg_b() const;
};

// Lower-triangular factor from a raw m x m parameter block: strict lower
// copied, diagonal exponentiated.
Mat chol_from_raw(const Mat& raw);

// Declares the full parameter layout for the given dimensions without
// initializing values; used by build_model and checkpoint loading.
ModelState make_shell(const ModelSpec& spec, Index c, Index d, Index n_train, Index m);

ModelState build_model(const ModelSpec& spec, const MultiTaskDataset& data,
                       std::uint64_t seed);

}  // namespace nsvlmc
