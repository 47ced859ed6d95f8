#include <Eigen/Dense>

#include "alphacl/jacobi.hpp"
#include "alphacl/rng.hpp"
#include "doctest.h"

using namespace alphacl;

namespace {

Eigen::MatrixXd random_symmetric(Rng& rng, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = rng.normal();
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

}  // namespace

TEST_SUITE("jacobi") {

TEST_CASE("decomposition reconstructs the matrix") {
  Rng rng(41, 0);
  for (int n : {2, 5, 8, 12}) {
    const Eigen::MatrixXd a = random_symmetric(rng, n);
    auto dec = jacobi_eigen_symmetric(a);
    REQUIRE(dec.ok());
    const Eigen::MatrixXd& v = dec->vectors;
    const Eigen::MatrixXd recon =
        v * dec->values.asDiagonal() * v.transpose();
    CHECK((recon - a).cwiseAbs().maxCoeff() < 1e-10 * a.cwiseAbs().maxCoeff());
    CHECK((v.transpose() * v - Eigen::MatrixXd::Identity(n, n))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    for (int i = 0; i + 1 < n; ++i) CHECK(dec->values(i) >= dec->values(i + 1));
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd resid = a * v.col(i) - dec->values(i) * v.col(i);
      CHECK(resid.cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("eigenvalues match Eigen's solver") {
  Rng rng(42, 0);
  for (int draw = 0; draw < 10; ++draw) {
    Rng r = rng.child(static_cast<std::uint64_t>(draw));
    const Eigen::MatrixXd a = random_symmetric(r, 7);
    auto dec = jacobi_eigen_symmetric(a);
    REQUIRE(dec.ok());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd ref = es.eigenvalues().reverse();
    CHECK((dec->values - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("diagonal input is exact") {
  Eigen::MatrixXd d = Eigen::Vector3d(0.5, -1.0, 4.0).asDiagonal();
  auto dec = jacobi_eigen_symmetric(d);
  REQUIRE(dec.ok());
  CHECK(dec->values(0) == doctest::Approx(4.0));
  CHECK(dec->values(1) == doctest::Approx(0.5));
  CHECK(dec->values(2) == doctest::Approx(-1.0));
  CHECK(std::abs(dec->vectors.col(0)(2)) == doctest::Approx(1.0));
}

TEST_CASE("non-square and asymmetric inputs are rejected") {
  CHECK_FALSE(jacobi_eigen_symmetric(Eigen::MatrixXd::Random(3, 4)).ok());
  Eigen::MatrixXd a(2, 2);
  a << 1, 2,
       3, 4;
  auto r = jacobi_eigen_symmetric(a);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().code == Errc::kDomain);
}

}  // TEST_SUITE
