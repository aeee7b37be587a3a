#include "nsvlmc/autodiff.hpp"

#include <cmath>

namespace nsvlmc::ad {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch(std::string(op) + ": shape mismatch");
}

// Push a node and attach a backward closure that receives the node's own
// adjoint. `back(gout)` must accumulate into the parents' adjoints.
template <typename Back>
Var make_op(Tape& t, Mat value, bool req, Back back) {
  Var out = t.push(std::move(value), req);
  if (req)
    t.set_backward(out, [&t, out, back = std::move(back)]() {
      back(t.grad_ref(out));
    });
  return out;
}

bool any_grad(Tape& t, Var a, Var b) {
  return t.needs_grad(a) || t.needs_grad(b);
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  check_same_shape(t.val(a), t.val(b), "add");
  return make_op(t, t.val(a) + t.val(b), any_grad(t, a, b),
                 [&t, a, b](const Mat& g) {
                   if (t.needs_grad(a)) t.grad_ref(a) += g;
                   if (t.needs_grad(b)) t.grad_ref(b) += g;
                 });
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape(t.val(a), t.val(b), "sub");
  return make_op(t, t.val(a) - t.val(b), any_grad(t, a, b),
                 [&t, a, b](const Mat& g) {
                   if (t.needs_grad(a)) t.grad_ref(a) += g;
                   if (t.needs_grad(b)) t.grad_ref(b) -= g;
                 });
}

Var neg(Tape& t, Var a) { return scale(t, a, -1.0); }

Var scale(Tape& t, Var a, double s) {
  return make_op(t, s * t.val(a), t.needs_grad(a),
                 [&t, a, s](const Mat& g) { t.grad_ref(a) += s * g; });
}

Var add_scalar(Tape& t, Var a, double s) {
  return make_op(t, (t.val(a).array() + s).matrix(), t.needs_grad(a),
                 [&t, a](const Mat& g) { t.grad_ref(a) += g; });
}

Var cwise_mul(Tape& t, Var a, Var b) {
  check_same_shape(t.val(a), t.val(b), "cwise_mul");
  return make_op(t, t.val(a).cwiseProduct(t.val(b)), any_grad(t, a, b),
                 [&t, a, b](const Mat& g) {
                   if (t.needs_grad(a)) t.grad_ref(a) += g.cwiseProduct(t.val(b));
                   if (t.needs_grad(b)) t.grad_ref(b) += g.cwiseProduct(t.val(a));
                 });
}

Var cwise_square(Tape& t, Var a) {
  return make_op(t, t.val(a).array().square().matrix(), t.needs_grad(a),
                 [&t, a](const Mat& g) {
                   t.grad_ref(a) += 2.0 * g.cwiseProduct(t.val(a));
                 });
}

Var cwise_exp(Tape& t, Var a) {
  Var out = make_op(t, t.val(a).array().exp().matrix(), t.needs_grad(a),
                    [](const Mat&) {});
  if (t.needs_grad(a))
    t.set_backward(out, [&t, a, out]() {
      t.grad_ref(a) += t.grad_ref(out).cwiseProduct(t.val(out));
    });
  return out;
}

Var cwise_log(Tape& t, Var a) {
  return make_op(t, t.val(a).array().log().matrix(), t.needs_grad(a),
                 [&t, a](const Mat& g) {
                   t.grad_ref(a) += g.cwiseQuotient(t.val(a));
                 });
}

Var cwise_tanh(Tape& t, Var a) {
  Var out = make_op(t, t.val(a).array().tanh().matrix(), t.needs_grad(a),
                    [](const Mat&) {});
  if (t.needs_grad(a))
    t.set_backward(out, [&t, a, out]() {
      const Mat& y = t.val(out);
      t.grad_ref(a) += t.grad_ref(out)
                           .cwiseProduct((1.0 - y.array().square()).matrix());
    });
  return out;
}

Var cwise_sigmoid(Tape& t, Var a) {
  Mat y = (1.0 / (1.0 + (-t.val(a).array()).exp())).matrix();
  Var out = t.push(std::move(y), t.needs_grad(a));
  if (t.needs_grad(a))
    t.set_backward(out, [&t, a, out]() {
      const Mat& yv = t.val(out);
      t.grad_ref(a) += t.grad_ref(out).cwiseProduct(
          (yv.array() * (1.0 - yv.array())).matrix());
    });
  return out;
}

Var cwise_relu(Tape& t, Var a) {
  Var out = t.push(t.val(a).cwiseMax(0.0), t.needs_grad(a));
  if (t.needs_grad(a))
    t.set_backward(out, [&t, a, out]() {
      const Mat mask = (t.val(a).array() > 0.0).cast<double>().matrix();
      t.grad_ref(a) += t.grad_ref(out).cwiseProduct(mask);
    });
  return out;
}

Var cwise_sqrt_clamp(Tape& t, Var a) {
  Mat y = t.val(a).array().max(0.0).sqrt().matrix();
  Var out = t.push(y, t.needs_grad(a));
  if (t.needs_grad(a))
    t.set_backward(out, [&t, a, out]() {
      const Mat& yv = t.val(out);
      Mat d = (yv.array() > 0.0)
                  .select(0.5 / yv.array().max(1e-300), Mat::Zero(yv.rows(), yv.cols()).array());
      t.grad_ref(a) += t.grad_ref(out).cwiseProduct(d.matrix());
    });
  return out;
}

Var transpose(Tape& t, Var a) {
  return make_op(t, t.val(a).transpose(), t.needs_grad(a),
                 [&t, a](const Mat& g) { t.grad_ref(a) += g.transpose(); });
}

Var sum(Tape& t, Var a) {
  return make_op(t, Mat::Constant(1, 1, t.val(a).sum()), t.needs_grad(a),
                 [&t, a](const Mat& g) {
                   t.grad_ref(a).array() += g(0, 0);
                 });
}

Var colwise_sum(Tape& t, Var a) {
  return make_op(t, Mat(t.val(a).colwise().sum()), t.needs_grad(a),
                 [&t, a](const Mat& g) {
                   t.grad_ref(a).rowwise() += g.row(0);
                 });
}

Var rowwise_sum(Tape& t, Var a) {
  return make_op(t, Mat(t.val(a).rowwise().sum()), t.needs_grad(a),
                 [&t, a](const Mat& g) {
                   t.grad_ref(a).colwise() += g.col(0);
                 });
}

Var block(Tape& t, Var a, Eigen::Index r0, Eigen::Index c0, Eigen::Index nr,
          Eigen::Index nc) {
  return make_op(t, Mat(t.val(a).block(r0, c0, nr, nc)), t.needs_grad(a),
                 [&t, a, r0, c0, nr, nc](const Mat& g) {
                   t.grad_ref(a).block(r0, c0, nr, nc) += g;
                 });
}

Var hcat(Tape& t, const std::vector<Var>& xs) {
  Eigen::Index rows = t.val(xs.front()).rows();
  Eigen::Index cols = 0;
  bool req = false;
  for (Var x : xs) {
    cols += t.val(x).cols();
    req = req || t.needs_grad(x);
  }
  Mat v(rows, cols);
  Eigen::Index c = 0;
  for (Var x : xs) {
    v.middleCols(c, t.val(x).cols()) = t.val(x);
    c += t.val(x).cols();
  }
  return make_op(t, std::move(v), req, [&t, xs](const Mat& g) {
    Eigen::Index c = 0;
    for (Var x : xs) {
      Eigen::Index w = t.val(x).cols();
      if (t.needs_grad(x)) t.grad_ref(x) += g.middleCols(c, w);
      c += w;
    }
  });
}

Var add_rowvec(Tape& t, Var a, Var row) {
  if (t.val(row).rows() != 1 || t.val(row).cols() != t.val(a).cols())
    throw DimensionMismatch("add_rowvec: shape mismatch");
  Mat v = t.val(a);
  v.rowwise() += t.val(row).row(0);
  return make_op(t, std::move(v), any_grad(t, a, row),
                 [&t, a, row](const Mat& g) {
                   if (t.needs_grad(a)) t.grad_ref(a) += g;
                   if (t.needs_grad(row)) t.grad_ref(row) += g.colwise().sum();
                 });
}

Var broadcast_scalar(Tape& t, Var s, Eigen::Index r, Eigen::Index c) {
  return make_op(t, Mat::Constant(r, c, t.sval(s)), t.needs_grad(s),
                 [&t, s](const Mat& g) { t.grad_ref(s)(0, 0) += g.sum(); });
}

Var dot(Tape& t, Var a, Var b) { return sum(t, cwise_mul(t, a, b)); }

Var matmul(Tape& t, Var a, Var b) {
  if (t.val(a).cols() != t.val(b).rows())
    throw DimensionMismatch("matmul: inner dimensions differ");
  return make_op(t, t.val(a) * t.val(b), any_grad(t, a, b),
                 [&t, a, b](const Mat& g) {
                   if (t.needs_grad(a))
                     t.grad_ref(a).noalias() += g * t.val(b).transpose();
                   if (t.needs_grad(b))
                     t.grad_ref(b).noalias() += t.val(a).transpose() * g;
                 });
}

Var cholesky(Tape& t, Var a, double base_jitter) {
  CholeskyFactor f = cholesky_with_jitter(t.val(a), base_jitter);
  Var out = t.push(std::move(f.lower), t.needs_grad(a));
  if (t.needs_grad(a))
    t.set_backward(out, [&t, a, out]() {
      const Mat& L = t.val(out);
      const Mat& Lbar = t.grad_ref(out);
      // Murray-style Cholesky pullback: Abar = L^{-T} Phi(L^T Lbar) L^{-1}
      Mat Pfull = (L.transpose() * Lbar).eval();
      Mat P = Pfull.triangularView<Eigen::Lower>();
      P.diagonal() *= 0.5;
      Mat tmp = L.transpose()
                    .triangularView<Eigen::Upper>()
                    .solve(P);  // L^{-T} P
      Mat Abar = L.transpose()
                     .triangularView<Eigen::Upper>()
                     .solve(tmp.transpose())
                     .transpose();  // (L^{-T} tmp^T)^T = tmp L^{-1}
      t.grad_ref(a) += 0.5 * (Abar + Abar.transpose());
    });
  return out;
}

Var trisolve_lower(Tape& t, Var l, Var b) {
  Mat x = t.val(l).triangularView<Eigen::Lower>().solve(t.val(b));
  Var out = t.push(std::move(x), any_grad(t, l, b));
  if (any_grad(t, l, b))
    t.set_backward(out, [&t, l, b, out]() {
      const Mat& L = t.val(l);
      const Mat& X = t.val(out);
      Mat Bbar =
          L.transpose().triangularView<Eigen::Upper>().solve(t.grad_ref(out));
      if (t.needs_grad(b)) t.grad_ref(b) += Bbar;
      if (t.needs_grad(l)) {
        Mat Lbar = -(Bbar * X.transpose());
        t.grad_ref(l) += Mat(Lbar.triangularView<Eigen::Lower>());
      }
    });
  return out;
}

Var trisolve_lower_t(Tape& t, Var l, Var b) {
  Mat x = t.val(l).transpose().triangularView<Eigen::Upper>().solve(t.val(b));
  Var out = t.push(std::move(x), any_grad(t, l, b));
  if (any_grad(t, l, b))
    t.set_backward(out, [&t, l, b, out]() {
      const Mat& L = t.val(l);
      const Mat& X = t.val(out);
      Mat Bbar = L.triangularView<Eigen::Lower>().solve(t.grad_ref(out));
      if (t.needs_grad(b)) t.grad_ref(b) += Bbar;
      if (t.needs_grad(l)) {
        Mat Lbar = -(X * Bbar.transpose());
        t.grad_ref(l) += Mat(Lbar.triangularView<Eigen::Lower>());
      }
    });
  return out;
}

Var logdet_from_chol(Tape& t, Var l) {
  double v = 2.0 * t.val(l).diagonal().array().log().sum();
  return make_op(t, Mat::Constant(1, 1, v), t.needs_grad(l),
                 [&t, l](const Mat& g) {
                   t.grad_ref(l).diagonal().array() +=
                       2.0 * g(0, 0) / t.val(l).diagonal().array();
                 });
}

Var make_lower_chol(Tape& t, Var p) {
  const Mat& P = t.val(p);
  if (P.rows() != P.cols())
    throw DimensionMismatch("make_lower_chol: not square");
  Mat L = Mat::Zero(P.rows(), P.cols());
  L.triangularView<Eigen::StrictlyLower>() = P;
  L.diagonal() = P.diagonal().array().exp();
  Var out = t.push(std::move(L), t.needs_grad(p));
  if (t.needs_grad(p))
    t.set_backward(out, [&t, p, out]() {
      const Mat& g = t.grad_ref(out);
      Mat pb = Mat::Zero(g.rows(), g.cols());
      pb.triangularView<Eigen::StrictlyLower>() = g;
      pb.diagonal() =
          g.diagonal().cwiseProduct(t.val(out).diagonal());
      t.grad_ref(p) += pb;
    });
  return out;
}

Var se_ard_matrix(Tape& t, Var X, Var Z, Var log_sf2, Var log_ls) {
  const Mat& Xv = t.val(X);
  const Mat& Zv = t.val(Z);
  const double sf2 = std::exp(t.sval(log_sf2));
  const Vec ls = t.val(log_ls).array().exp();
  if (Xv.cols() != Zv.cols() || Xv.cols() != ls.size())
    throw DimensionMismatch("se_ard_matrix: dimension mismatch");
  const Vec inv_l = ls.cwiseInverse();
  Mat Xs = Xv * inv_l.asDiagonal();
  Mat Zs = Zv * inv_l.asDiagonal();
  Mat d2 = -2.0 * (Xs * Zs.transpose());
  d2.colwise() += Xs.rowwise().squaredNorm();
  d2.rowwise() += Zs.rowwise().squaredNorm().transpose();
  Mat K = sf2 * (-0.5 * d2.array().max(0.0)).exp();

  bool req = t.needs_grad(X) || t.needs_grad(Z) || t.needs_grad(log_sf2) ||
             t.needs_grad(log_ls);
  Var out = t.push(std::move(K), req);
  if (req)
    t.set_backward(out, [&t, X, Z, log_sf2, log_ls, out]() {
      const Mat& Xv = t.val(X);
      const Mat& Zv = t.val(Z);
      const Mat& Kv = t.val(out);
      const Vec ls = t.val(log_ls).array().exp();
      const Vec inv_l2 = ls.array().square().inverse();
      Mat W = t.grad_ref(out).cwiseProduct(Kv);  // Kbar .* K
      if (t.needs_grad(log_sf2)) t.grad_ref(log_sf2)(0, 0) += W.sum();
      const Vec wr = W.rowwise().sum();
      const Vec wc = W.colwise().sum();
      if (t.needs_grad(log_ls)) {
        // d k / d log l_d = k * (x_d - z_d)^2 / l_d^2
        Vec g(ls.size());
        for (Eigen::Index d = 0; d < ls.size(); ++d) {
          const double s = wr.dot(Xv.col(d).cwiseAbs2()) +
                           wc.dot(Zv.col(d).cwiseAbs2()) -
                           2.0 * Xv.col(d).dot(W * Zv.col(d));
          g[d] = s * inv_l2[d];
        }
        t.grad_ref(log_ls) += g;
      }
      if (t.needs_grad(X)) {
        Mat xb = -(wr.asDiagonal() * Xv - W * Zv) * inv_l2.asDiagonal();
        t.grad_ref(X) += xb;
      }
      if (t.needs_grad(Z)) {
        Mat zb =
            -(wc.asDiagonal() * Zv - W.transpose() * Xv) * inv_l2.asDiagonal();
        t.grad_ref(Z) += zb;
      }
    });
  return out;
}

Var mix_contract(Tape& t, Var a_row, Var b, Eigen::Index q_dim) {
  const Mat& av = t.val(a_row);  // 1 x H
  const Mat& bv = t.val(b);      // n x H*Q
  const Eigen::Index H = av.cols();
  const Eigen::Index n = bv.rows();
  if (bv.cols() != H * q_dim)
    throw DimensionMismatch("mix_contract: b columns != H*Q");
  Mat w = Mat::Zero(n, q_dim);
  for (Eigen::Index h = 0; h < H; ++h)
    w += av(0, h) * bv.middleCols(h * q_dim, q_dim);
  Var out = t.push(std::move(w), any_grad(t, a_row, b));
  if (any_grad(t, a_row, b))
    t.set_backward(out, [&t, a_row, b, out, q_dim, H]() {
      const Mat& g = t.grad_ref(out);
      const Mat& av = t.val(a_row);
      const Mat& bv = t.val(b);
      if (t.needs_grad(a_row)) {
        Mat& ab = t.grad_ref(a_row);
        for (Eigen::Index h = 0; h < H; ++h)
          ab(0, h) += g.cwiseProduct(bv.middleCols(h * q_dim, q_dim)).sum();
      }
      if (t.needs_grad(b)) {
        Mat& bb = t.grad_ref(b);
        for (Eigen::Index h = 0; h < H; ++h)
          bb.middleCols(h * q_dim, q_dim) += av(0, h) * g;
      }
    });
  return out;
}

Var logsumexp_mean(Tape& t, const std::vector<Var>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (Var x : xs) m = std::max(m, t.sval(x));
  double acc = 0.0;
  for (Var x : xs) acc += std::exp(t.sval(x) - m);
  const double v = m + std::log(acc / double(xs.size()));
  bool req = false;
  for (Var x : xs) req = req || t.needs_grad(x);
  Var out = t.push(Mat::Constant(1, 1, v), req);
  if (req)
    t.set_backward(out, [&t, xs, out, m, acc]() {
      const double g = t.grad_ref(out)(0, 0);
      for (Var x : xs) {
        if (!t.needs_grad(x)) continue;
        const double w = std::exp(t.sval(x) - m) / acc;
        t.grad_ref(x)(0, 0) += g * w;
      }
    });
  return out;
}

}  // namespace nsvlmc::ad
