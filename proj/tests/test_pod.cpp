#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nsvlmc/pod.hpp"

using namespace nsvlmc;

TEST_CASE("pod_decompose: rank-1 synthetic recovered exactly") {
  RngStream rng(61, 0);
  Vec phi = rng.normal_vec(12);
  phi.normalize();
  const Vec a = rng.normal_vec(8);
  const Mat s = phi * a.transpose();

  const PodBasis basis = pod_decompose(s, 1);
  // recovered up to sign; our convention fixes the sign deterministically
  const double align = std::abs(basis.modes.col(0).dot(phi));
  CHECK(align == doctest::Approx(1.0).epsilon(1e-10));
  const Mat recon = pod_reconstruct_all(basis);
  CHECK((recon - s).norm() < 1e-10);
}

TEST_CASE("pod_decompose: full rank reconstructs exactly") {
  RngStream rng(62, 0);
  const Mat s = rng.normal_mat(20, 10);
  const PodBasis basis = pod_decompose(s, 10);
  CHECK((pod_reconstruct_all(basis) - s).norm() / s.norm() < 1e-8);
  // orthonormal modes
  const Mat g = basis.modes.transpose() * basis.modes;
  CHECK((g - Mat::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pod_decompose: reconstruction error equals tail singular values") {
  RngStream rng(63, 0);
  const Mat s = rng.normal_mat(20, 10);
  const PodBasis full = pod_decompose(s, 10);
  double prev_err = 1e300;
  for (Index r = 1; r <= 10; ++r) {
    const PodBasis basis = pod_decompose(s, r);
    const double err = (pod_reconstruct_all(basis) - s).norm();
    double tail = 0.0;
    for (Index k = r; k < 10; ++k)
      tail += full.singular_values[k] * full.singular_values[k];
    CHECK(err == doctest::Approx(std::sqrt(tail)).epsilon(1e-9).scale(1.0));
    CHECK(err <= prev_err + 1e-12);  // monotone in r
    prev_err = err;
  }
}

TEST_CASE("pod_decompose: sign convention and determinism") {
  RngStream rng(64, 0);
  const Mat s = rng.normal_mat(15, 6);
  const PodBasis b1 = pod_decompose(s, 4);
  const PodBasis b2 = pod_decompose(s, 4);
  CHECK((b1.modes - b2.modes).cwiseAbs().maxCoeff() == 0.0);
  for (Index k = 0; k < 4; ++k) {
    Index arg = 0;
    b1.modes.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(b1.modes(arg, k) > 0.0);
  }
  // singular values nonincreasing
  for (Index k = 1; k < 4; ++k)
    CHECK(b1.singular_values[k] <= b1.singular_values[k - 1] + 1e-14);
}

TEST_CASE("pod_decompose rejects invalid rank") {
  const Mat s = Mat::Random(5, 4);
  CHECK_THROWS_AS(pod_decompose(s, 0), RankTooLarge);
  CHECK_THROWS_AS(pod_decompose(s, 5), RankTooLarge);
}

TEST_CASE("pod_reconstruct: single snapshots and edge cases") {
  RngStream rng(65, 0);
  const Mat s = rng.normal_mat(10, 6);
  const PodBasis basis = pod_decompose(s, 3);
  CHECK(pod_reconstruct(basis, Vec::Zero(3)).norm() == 0.0);
  Vec e1 = Vec::Zero(3);
  e1[0] = 1.0;
  CHECK((pod_reconstruct(basis, e1) - basis.modes.col(0)).norm() < 1e-14);
  // training-snapshot coefficients reproduce the rank-r approximation
  const Mat recon = pod_reconstruct_all(basis);
  const Vec one = pod_reconstruct(basis, basis.coeffs.row(2));
  CHECK((one - recon.col(2)).norm() < 1e-12);
  CHECK_THROWS_AS(pod_reconstruct(basis, Vec::Zero(4)), DimensionMismatch);
}

TEST_CASE("ar_windowing: pair counts per the protocol") {
  const Vec series = Vec::LinSpaced(2000, 0.0, 1.0);
  const ArData ar = ar_windowing(series, 10);
  CHECK(ar.inputs.rows() == 1990);
  CHECK(ar.inputs.cols() == 10);
  CHECK(ar.targets.size() == 1990);

  const Vec short_series = Vec::LinSpaced(30, 0.0, 1.0);
  CHECK(ar_windowing(short_series, 10).targets.size() == 20);

  const Vec constant = Vec::Constant(50, 3.5);
  const ArData c = ar_windowing(constant, 10);
  CHECK((c.targets.array() == 3.5).all());

  CHECK_THROWS_AS(ar_windowing(Vec::Zero(10), 10), SeriesTooShort);
}

TEST_CASE("ar_windowing: one-step-ahead convention") {
  Vec series(6);
  series << 0, 1, 2, 3, 4, 5;
  const ArData ar = ar_windowing(series, 3);
  REQUIRE(ar.targets.size() == 3);
  CHECK(ar.inputs(0, 0) == 0.0);
  CHECK(ar.inputs(0, 2) == 2.0);
  CHECK(ar.targets[0] == 3.0);
  CHECK(ar.targets[2] == 5.0);
}

TEST_CASE("rollouts: closed loop feeds predictions back") {
  Vec seed(3);
  seed << 1, 2, 3;
  // step = sum of the window
  auto step = [](const Vec& w) { return w.sum(); };
  const Vec out = rollout_closed_loop(seed, 2, step);
  REQUIRE(out.size() == 5);
  CHECK(out[3] == 6.0);          // 1+2+3
  CHECK(out[4] == 11.0);         // 2+3+6

  Vec series(5);
  series << 1, 2, 3, 4, 5;
  const Vec open = rollout_open_loop(series, 3, step);
  REQUIRE(open.size() == 2);
  CHECK(open[0] == 6.0);
  CHECK(open[1] == 9.0);
}
