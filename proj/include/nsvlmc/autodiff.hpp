#pragma once

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "nsvlmc/common.hpp"
#include "nsvlmc/numerics.hpp"

// Tape-based reverse-mode differentiation over dense Eigen matrices. The tape
// is rebuilt per objective evaluation (dynamic graph); ops append nodes and
// backward() walks them in reverse. Scalars are 1x1 matrices.
namespace nsvlmc::ad {

using nsvlmc::Mat;
using nsvlmc::Vec;

class Tape;

struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

class Tape {
 public:
  struct Node {
    Mat value;
    Mat grad;  // allocated lazily, same shape as value
    std::function<void()> backward;  // empty for leaves/constants
    bool requires_grad = false;
    bool grad_ready = false;
  };

  Var leaf(Mat v) { return push(std::move(v), true); }
  Var constant(Mat v) { return push(std::move(v), false); }
  Var scalar_const(double v) { return constant(Mat::Constant(1, 1, v)); }

  const Mat& val(Var x) const { return nodes_[x.idx].value; }
  double sval(Var x) const { return nodes_[x.idx].value(0, 0); }
  bool needs_grad(Var x) const { return nodes_[x.idx].requires_grad; }

  // Accumulated adjoint of x after backward(); zero matrix if untouched.
  Mat grad(Var x) const {
    const Node& n = nodes_[x.idx];
    if (!n.grad_ready) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  Mat& grad_ref(Var x) {
    Node& n = nodes_[x.idx];
    if (!n.grad_ready) {
      n.grad = Mat::Zero(n.value.rows(), n.value.cols());
      n.grad_ready = true;
    }
    return n.grad;
  }

  // Reverse sweep seeded with d(out)/d(out) = 1; out must be 1x1.
  void backward(Var out) {
    if (val(out).size() != 1)
      throw DimensionMismatch("Tape::backward: output not scalar");
    grad_ref(out)(0, 0) = 1.0;
    for (int i = out.idx; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.requires_grad && n.grad_ready && n.backward) n.backward();
    }
  }

  Var push(Mat v, bool req) {
    nodes_.push_back(Node{std::move(v), {}, {}, req, false});
    return Var{int(nodes_.size()) - 1};
  }

  Var push_op(Mat v, bool req, std::function<void()> back) {
    nodes_.push_back(Node{std::move(v), {}, std::move(back), req, false});
    return Var{int(nodes_.size()) - 1};
  }

  void set_backward(Var v, std::function<void()> back) {
    nodes_[v.idx].backward = std::move(back);
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
};

// --- elementwise and structural ops ---
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var neg(Tape& t, Var a);
Var scale(Tape& t, Var a, double s);
Var add_scalar(Tape& t, Var a, double s);  // a + s (cwise)
Var cwise_mul(Tape& t, Var a, Var b);
Var cwise_square(Tape& t, Var a);
Var cwise_exp(Tape& t, Var a);
Var cwise_log(Tape& t, Var a);
Var cwise_tanh(Tape& t, Var a);
Var cwise_sigmoid(Tape& t, Var a);
Var cwise_relu(Tape& t, Var a);
Var cwise_sqrt_clamp(Tape& t, Var a);  // sqrt(max(a,0)); zero grad on clamp
Var transpose(Tape& t, Var a);
Var sum(Tape& t, Var a);                       // 1x1
Var colwise_sum(Tape& t, Var a);               // 1 x cols
Var rowwise_sum(Tape& t, Var a);               // rows x 1
Var block(Tape& t, Var a, Eigen::Index r0, Eigen::Index c0, Eigen::Index nr,
          Eigen::Index nc);
Var hcat(Tape& t, const std::vector<Var>& xs);
Var add_rowvec(Tape& t, Var a, Var row);       // a + replicate(row)
Var broadcast_scalar(Tape& t, Var s, Eigen::Index r, Eigen::Index c);
Var dot(Tape& t, Var a, Var b);                // sum(a .* b), 1x1

// --- linear algebra ---
Var matmul(Tape& t, Var a, Var b);
// L = chol(a + jitter I); jitter escalation as in cholesky_with_jitter
Var cholesky(Tape& t, Var a, double base_jitter = 1e-6);
Var trisolve_lower(Tape& t, Var l, Var b);    // L^{-1} b
Var trisolve_lower_t(Tape& t, Var l, Var b);  // L^{-T} b
Var logdet_from_chol(Tape& t, Var l);         // 2 sum log diag(L), 1x1
// strict lower of p + diag(exp(diag(p))): Cholesky-factor parameterization
Var make_lower_chol(Tape& t, Var p);

// --- domain-specific ops ---
// SE-ARD kernel matrix between row sets X (n x d) and Z (m x d), with
// hyperparameters passed in log space (1x1 and d x 1 vars).
Var se_ard_matrix(Tape& t, Var X, Var Z, Var log_sf2, Var log_ls);
// w(i,q) = sum_h a(0,h) * b(i, h*Q+q); contraction of the H x Q mixture
// sampled per point against one task's row of A.
Var mix_contract(Tape& t, Var a_row, Var b, Eigen::Index q_dim);
// log(1/S sum_s exp(x_s)) over a list of scalars, max-shifted.
Var logsumexp_mean(Tape& t, const std::vector<Var>& xs);

}  // namespace nsvlmc::ad
