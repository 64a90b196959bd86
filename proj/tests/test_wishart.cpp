#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "hdspec/spectral.hpp"
#include "hdspec/wishart.hpp"

using namespace hdspec;

TEST_CASE("real wishart samples are symmetric PSD with the right scale") {
  const int d = 3;
  const long dof = 5;
  double trace_sum = 0.0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    const wishart::WishartSample w =
        wishart::sample_wishart(wishart::Flavor::real, d, dof, 500 + rep);
    CHECK(w.matrix.imag().cwiseAbs().maxCoeff() == 0.0);
    CHECK((w.matrix - w.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w.matrix);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    trace_sum += w.matrix.real().trace();
  }
  // E tr W = d * dof = 15, sd of the mean ~ sqrt(2 d dof / reps) ~ 0.27
  CHECK(trace_sum / reps == Catch::Approx(15.0).margin(1.2));
}

TEST_CASE("complex wishart has identity mean per degree of freedom") {
  const int d = 2;
  const long dof = 6;
  Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(d, d);
  const int reps = 600;
  for (int rep = 0; rep < reps; ++rep) {
    const wishart::WishartSample w =
        wishart::sample_wishart(wishart::Flavor::complex, d, dof, 900 + rep);
    CHECK((w.matrix - w.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    mean += w.matrix;
  }
  mean /= static_cast<double>(reps * dof);
  CHECK((mean - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() < 0.15);
}

TEST_CASE("wishart sampling is deterministic in the seed") {
  const wishart::WishartSample a =
      wishart::sample_wishart(wishart::Flavor::real, 3, 4, 7);
  const wishart::WishartSample b =
      wishart::sample_wishart(wishart::Flavor::real, 3, 4, 7);
  CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(wishart::sample_wishart(wishart::Flavor::real, 0, 4, 7),
                  std::invalid_argument);
}

TEST_CASE("smoothed gram matches the unnormalized window gram") {
  const Eigen::MatrixXd eta = wishart::gaussian_noise(3, 32, 11);
  const Eigen::MatrixXcd direct = wishart::smoothed_gram(eta, 0, 4);
  const Eigen::MatrixXcd scaled =
      spectral::selected_gram(spectral::dft_columns(eta), 0, 4) * 9.0;
  CHECK((direct - scaled).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("residual after removing the gaussian block has tiny rank") {
  for (long n : {64L, 65L}) {
    for (long r : {0L, n / 2}) {
      for (int rep = 0; rep < 10; ++rep) {
        const wishart::AlmostWishartResult res =
            wishart::almost_wishart_residual(n, 4, 7, r, 3000 + rep);
        INFO("n=" << n << " r=" << r << " rep=" << rep);
        CHECK(res.rank_estimate <= 3);
        CHECK(res.z.rows() == 4);
        CHECK(res.z.cols() == 15);
        CHECK((res.residual - res.residual.adjoint()).cwiseAbs().maxCoeff() <
              1e-10);
        const Eigen::MatrixXcd reconstruction =
            (res.z * res.z.transpose()).cast<std::complex<double>>() +
            res.residual;
        CHECK((res.gram - reconstruction).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
  }
}

TEST_CASE("residual construction covers the degenerate full window") {
  // n odd with 2m+1 = n: the window is the whole grid.
  const wishart::AlmostWishartResult res =
      wishart::almost_wishart_residual(11, 3, 5, 5, 77);
  CHECK(res.rank_estimate <= 3);
}

TEST_CASE("residual rejects off-axis window centers") {
  CHECK_THROWS_AS(wishart::almost_wishart_residual(64, 4, 7, 5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(wishart::almost_wishart_residual(64, 4, 40, 0, 1),
                  std::invalid_argument);
}

TEST_CASE("window gram tracks a complex wishart away from the real axis") {
  const wishart::CouplingReport report =
      wishart::wishart_coupling_check(256, 6, 8, 64, 42, 300);
  CHECK(report.reps == 300);
  CHECK(std::isfinite(report.z_trace));
  CHECK(std::isfinite(report.z_trace_sq));
  CHECK_FALSE(report.flag_trace);
  CHECK_FALSE(report.flag_trace_sq);
  CHECK(report.mean_trace_gram ==
        Catch::Approx(report.mean_trace_wishart).epsilon(0.1));
}

TEST_CASE("coupling check guards its preconditions") {
  CHECK_THROWS_AS(wishart::wishart_coupling_check(256, 6, 8, 4, 42, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(wishart::wishart_coupling_check(256, 6, 8, 126, 42, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(wishart::wishart_coupling_check(256, 6, 8, 64, 42, 1),
                  std::invalid_argument);
}

TEST_CASE("gaussian noise streams are independent across substreams") {
  const Eigen::MatrixXd a = wishart::gaussian_noise(2, 8, 5, 0);
  const Eigen::MatrixXd b = wishart::gaussian_noise(2, 8, 5, 1);
  const Eigen::MatrixXd c = wishart::gaussian_noise(2, 8, 5, 0);
  CHECK((a - c).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - b).cwiseAbs().maxCoeff() > 1e-9);
}
