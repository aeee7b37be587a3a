#include "nsvlmc/model.hpp"

#include <cmath>

#include "nsvlmc/numerics.hpp"

namespace nsvlmc {

Variant parse_variant(const std::string& name) {
  if (name == "svlmc") return Variant::svlmc;
  if (name == "nsvlmc") return Variant::nsvlmc;
  if (name == "nmogp") return Variant::nmogp;
  if (name == "ngprn") return Variant::ngprn;
  if (name == "svlmc-dkl" || name == "svlmc_dkl") return Variant::svlmc_dkl;
  throw InvalidSpec("unknown variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::svlmc: return "svlmc";
    case Variant::nsvlmc: return "nsvlmc";
    case Variant::nmogp: return "nmogp";
    case Variant::ngprn: return "ngprn";
    case Variant::svlmc_dkl: return "svlmc-dkl";
  }
  throw InvalidSpec("unknown variant enum");
}

int ParamStore::declare(std::string name, std::string group, Index rows, Index cols) {
  if (finalized_) throw InvalidSpec("ParamStore: declare after finalize");
  ParamEntry e;
  e.name = std::move(name);
  e.group = std::move(group);
  e.rows = rows;
  e.cols = cols;
  e.offset = entries_.empty()
                 ? 0
                 : entries_.back().offset + entries_.back().rows * entries_.back().cols;
  entries_.push_back(std::move(e));
  return int(entries_.size()) - 1;
}

void ParamStore::finalize() {
  const Index total = entries_.empty() ? 0
                                       : entries_.back().offset +
                                             entries_.back().rows * entries_.back().cols;
  data_ = Vec::Zero(total);
  finalized_ = true;
}

Eigen::Map<Mat> ParamStore::mat(int id) {
  const auto& e = entries_[size_t(id)];
  return {data_.data() + e.offset, e.rows, e.cols};
}

Eigen::Map<const Mat> ParamStore::mat(int id) const {
  const auto& e = entries_[size_t(id)];
  return {data_.data() + e.offset, e.rows, e.cols};
}

double& ParamStore::scalar(int id) { return data_[entries_[size_t(id)].offset]; }

int ParamStore::find(const std::string& name) const {
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return int(i);
  return -1;
}

Mat chol_from_raw(const Mat& raw) {
  Mat l = Mat::Zero(raw.rows(), raw.cols());
  l.triangularView<Eigen::StrictlyLower>() = raw;
  for (Index i = 0; i < raw.rows(); ++i) l(i, i) = std::exp(raw(i, i));
  return l;
}

KernelParams ModelState::kernel(Index q) const {
  KernelParams p;
  p.output_scale_sq = std::exp(params.mat(id_log_sf2[size_t(q)])(0, 0));
  p.length_scales = params.mat(id_log_ls[size_t(q)]).col(0).array().exp();
  return p;
}

InducingBlock ModelState::inducing(Index q) const {
  InducingBlock b;
  b.z = params.mat(id_z[size_t(q)]);
  b.m = params.mat(id_u_m[size_t(q)]).col(0);
  b.s_chol = chol_from_raw(params.mat(id_u_s[size_t(q)]));
  return b;
}

Vec ModelState::noise_vars() const {
  return params.mat(id_log_noise).col(0).array().exp();
}

MixtureA ModelState::mixture_a() const {
  MixtureA qa;
  qa.c = c;
  qa.h = spec.h;
  qa.mu = params.mat(id_a_mu).row(0);
  qa.log_nu = params.mat(id_a_log_nu).row(0);
  return qa;
}

NeuralMixturePrior ModelState::neural_prior() const {
  NeuralMixturePrior prior;
  prior.h = spec.h;
  prior.q = spec.q;
  prior.trunk.act = Activation::tanh;
  for (size_t l = 0; l < id_mlp_w.size(); ++l) {
    prior.trunk.weights.push_back(params.mat(id_mlp_w[l]));
    prior.trunk.biases.push_back(params.mat(id_mlp_b[l]).col(0));
  }
  prior.w_mu = params.mat(id_head_w_mu);
  prior.b_mu = params.mat(id_head_b_mu).col(0);
  prior.w_nu = params.mat(id_head_w_nu);
  prior.b_nu = params.mat(id_head_b_nu).col(0);
  prior.log_nu0 = params.mat(id_log_nu0)(0, 0);
  return prior;
}

Mlp ModelState::mlp() const {
  Mlp mlp;
  mlp.act = Activation::tanh;
  for (size_t l = 0; l < id_mlp_w.size(); ++l) {
    mlp.weights.push_back(params.mat(id_mlp_w[l]));
    mlp.biases.push_back(params.mat(id_mlp_b[l]).col(0));
  }
  return mlp;
}

Mat ModelState::coreg_a() const { return params.mat(id_coreg_a); }
Mat ModelState::coreg_b() const { return params.mat(id_coreg_b); }

namespace {

void init_xavier(Eigen::Map<Mat> w, RngStream& rng) {
  const double a = std::sqrt(6.0 / double(w.rows() + w.cols()));
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) w(i, j) = a * (2.0 * rng.uniform() - 1.0);
}

// Declare an MLP as consecutive (w, b) entries and Xavier-initialize after
// finalize via the returned ids.
void declare_mlp(ModelState& st, const std::vector<Index>& sizes,
                 const std::string& prefix) {
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    st.id_mlp_w.push_back(st.params.declare(prefix + "_w" + std::to_string(l), "mlp",
                                            sizes[l], sizes[l + 1]));
    st.id_mlp_b.push_back(st.params.declare(prefix + "_b" + std::to_string(l), "mlp",
                                            sizes[l + 1], 1));
  }
}

}  // namespace

ModelState make_shell(const ModelSpec& spec, Index c, Index d, Index n_train,
                      Index m) {
  if (spec.q < 1 || spec.m_per_latent < 0) throw InvalidSpec("make_shell: bad spec");
  const bool needs_h = spec.variant == Variant::nsvlmc || spec.variant == Variant::nmogp;
  if (needs_h && spec.h < 1) throw InvalidSpec("make_shell: h must be >= 1");

  ModelState st;
  st.spec = spec;
  st.c = c;
  st.d = d;
  st.n_train = n_train;
  st.m = m;

  auto& ps = st.params;
  for (Index q = 0; q < spec.q; ++q) {
    const std::string sq = std::to_string(q);
    st.id_log_sf2.push_back(ps.declare("log_sf2_" + sq, "kernel", 1, 1));
    st.id_log_ls.push_back(ps.declare("log_ls_" + sq, "kernel", st.d, 1));
    st.id_z.push_back(ps.declare("z_" + sq, "inducing", st.m, st.d));
    st.id_u_m.push_back(ps.declare("u_m_" + sq, "inducing", st.m, 1));
    st.id_u_s.push_back(ps.declare("u_s_" + sq, "inducing", st.m, st.m));
  }
  st.id_log_noise = ps.declare("log_noise", "noise", st.c, 1);

  switch (spec.variant) {
    case Variant::svlmc:
      st.id_coreg_a = ps.declare("coreg_a", "coreg", st.c, spec.q);
      break;
    case Variant::svlmc_dkl: {
      st.id_coreg_a = ps.declare("coreg_a", "coreg", st.c, spec.q);
      const Index mid = std::max<Index>(st.d, 8);
      declare_mlp(st, {st.d, mid, st.d}, "warp");
      break;
    }
    case Variant::nsvlmc: {
      const Index width = spec.q * spec.h;
      declare_mlp(st, {st.d, width, width, width}, "trunk");
      st.id_head_w_mu = ps.declare("head_w_mu", "mlp", width, spec.h * spec.q);
      st.id_head_b_mu = ps.declare("head_b_mu", "mlp", spec.h * spec.q, 1);
      st.id_head_w_nu = ps.declare("head_w_nu", "mlp", width, spec.h * spec.q);
      st.id_head_b_nu = ps.declare("head_b_nu", "mlp", spec.h * spec.q, 1);
      st.id_log_nu0 = ps.declare("log_nu0", "mlp", 1, 1);
      st.id_a_mu = ps.declare("a_mu", "mixture_a", 1, st.c * spec.h);
      st.id_a_log_nu = ps.declare("a_log_nu", "mixture_a", 1, st.c * spec.h);
      break;
    }
    case Variant::nmogp:
      st.id_coreg_a = ps.declare("coreg_a", "coreg", st.c, spec.h);
      st.id_coreg_b = ps.declare("coreg_b", "coreg", spec.h, spec.q);
      break;
    case Variant::ngprn: {
      const Index width = 32;  // deterministic trunk; h plays no role here
      declare_mlp(st, {st.d, width, width, width, st.c * spec.q}, "awx");
      break;
    }
  }
  ps.finalize();
  return st;
}

ModelState build_model(const ModelSpec& spec, const MultiTaskDataset& data,
                       std::uint64_t seed) {
  if (data.tasks.empty()) throw InvalidSpec("build_model: empty dataset");
  const Index n_train = data.total_points();
  const Index m = (spec.m_per_latent == 0 || spec.m_per_latent >= n_train)
                      ? n_train
                      : spec.m_per_latent;
  ModelState st =
      make_shell(spec, data.num_tasks(), data.input_dim(), n_train, m);
  auto& ps = st.params;

  RngStream rng(seed, 2);

  // inducing inputs: training copy when m covers the pool, else k-means
  const Mat pooled = data.pooled_inputs();
  Mat z0;
  if (st.m >= st.n_train) {
    z0 = pooled;
  } else {
    z0 = kmeans_centroids(pooled, st.m, rng);
  }

  for (Index q = 0; q < spec.q; ++q) {
    ps.mat(st.id_log_sf2[size_t(q)])(0, 0) = std::log(spec.output_scale_init);
    ps.mat(st.id_log_ls[size_t(q)]).col(0).setConstant(std::log(spec.length_scale_init));
    ps.mat(st.id_z[size_t(q)]) = z0;
    // u_m stays 0; S initialized to K_Z so the u-KL starts at ~0
    KernelParams kp = st.kernel(q);
    const CholeskyFactor chol = cholesky_with_jitter(gram_matrix(z0, kp));
    Mat raw = Mat::Zero(st.m, st.m);
    raw.triangularView<Eigen::StrictlyLower>() = chol.lower;
    for (Index i = 0; i < st.m; ++i) raw(i, i) = std::log(chol.lower(i, i));
    ps.mat(st.id_u_s[size_t(q)]) = raw;
  }
  ps.mat(st.id_log_noise).col(0).setConstant(std::log(spec.noise_var_init));

  switch (spec.variant) {
    case Variant::svlmc:
    case Variant::svlmc_dkl: {
      auto a = ps.mat(st.id_coreg_a);
      for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
      for (size_t l = 0; l < st.id_mlp_w.size(); ++l)
        init_xavier(ps.mat(st.id_mlp_w[l]), rng);  // biases stay 0
      break;
    }
    case Variant::nsvlmc: {
      for (size_t l = 0; l < st.id_mlp_w.size(); ++l)
        init_xavier(ps.mat(st.id_mlp_w[l]), rng);
      init_xavier(ps.mat(st.id_head_w_mu), rng);
      init_xavier(ps.mat(st.id_head_w_nu), rng);
      ps.mat(st.id_log_nu0)(0, 0) = std::log(1e-4);
      auto a_mu = ps.mat(st.id_a_mu);
      for (Index j = 0; j < a_mu.cols(); ++j) a_mu(0, j) = 0.1 * rng.normal();
      // a_log_nu stays 0 (prior-matched unit variance)
      break;
    }
    case Variant::nmogp: {
      auto a = ps.mat(st.id_coreg_a);
      for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
      auto b = ps.mat(st.id_coreg_b);
      for (Index i = 0; i < b.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j) b(i, j) = rng.normal();
      break;
    }
    case Variant::ngprn:
      for (size_t l = 0; l < st.id_mlp_w.size(); ++l)
        init_xavier(ps.mat(st.id_mlp_w[l]), rng);
      break;
  }
  return st;
}

}  // namespace nsvlmc
