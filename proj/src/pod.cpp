#include "nsvlmc/pod.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace nsvlmc {

PodBasis pod_decompose(const Mat& snapshots, Index rank, bool center) {
  const Index n_mesh = snapshots.rows();
  const Index n_time = snapshots.cols();
  if (rank < 1 || rank > std::min(n_mesh, n_time))
    throw RankTooLarge("pod_decompose: rank outside [1, min(n_mesh, n_time)]");

  Mat s = snapshots;
  if (center) s.colwise() -= Vec(snapshots.rowwise().mean());

  Eigen::JacobiSVD<Mat> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);

  PodBasis basis;
  basis.modes = svd.matrixU().leftCols(rank);
  basis.singular_values = svd.singularValues().head(rank);

  // sign convention: largest-magnitude entry of each mode positive
  for (Index k = 0; k < rank; ++k) {
    Index arg = 0;
    double best = 0.0;
    for (Index i = 0; i < n_mesh; ++i) {
      const double a = std::abs(basis.modes(i, k));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (basis.modes(arg, k) < 0.0) basis.modes.col(k) = -basis.modes.col(k);
  }

  basis.coeffs = s.transpose() * basis.modes;  // n_time x rank
  return basis;
}

Vec pod_reconstruct(const PodBasis& basis, const Vec& coeffs_row) {
  if (coeffs_row.size() != basis.modes.cols())
    throw DimensionMismatch("pod_reconstruct: coefficient length != rank");
  return basis.modes * coeffs_row;
}

Mat pod_reconstruct_all(const PodBasis& basis) {
  return basis.modes * basis.coeffs.transpose();
}

ArData ar_windowing(const Vec& series, Index window) {
  const Index t = series.size();
  if (window < 1 || t <= window)
    throw SeriesTooShort("ar_windowing: series length must exceed the window");
  ArData out;
  out.inputs = Mat(t - window, window);
  out.targets = Vec(t - window);
  for (Index i = 0; i < t - window; ++i) {
    out.inputs.row(i) = series.segment(i, window).transpose();
    out.targets[i] = series[i + window];
  }
  return out;
}

Vec rollout_closed_loop(const Vec& seed_window, Index steps,
                        const std::function<double(const Vec&)>& step) {
  const Index window = seed_window.size();
  Vec out(window + steps);
  out.head(window) = seed_window;
  for (Index i = 0; i < steps; ++i)
    out[window + i] = step(out.segment(i, window));
  return out;
}

Vec rollout_open_loop(const Vec& series, Index window,
                      const std::function<double(const Vec&)>& step) {
  if (series.size() <= window)
    throw SeriesTooShort("rollout_open_loop: series shorter than window");
  Vec out(series.size() - window);
  for (Index i = 0; i < out.size(); ++i)
    out[i] = step(series.segment(i, window));
  return out;
}

}  // namespace nsvlmc
