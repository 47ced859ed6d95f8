#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "alphacl/distances.hpp"
#include "alphacl/energy.hpp"
#include "alphacl/io.hpp"
#include "alphacl/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace alphacl;

namespace {

Eigen::MatrixXd random_alpha(Rng& rng, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = i == j ? 0.0 : rng.uniform(0.0, 1.0);
    }
  }
  return a;
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("covariance matches the quadruple-loop reference") {
  Rng rng(31, 0);
  for (int draw = 0; draw < 10; ++draw) {
    Rng r = rng.child(static_cast<std::uint64_t>(draw));
    const int n = 4 + static_cast<int>(r.below(4));
    PairImportance pi;
    pi.alpha = random_alpha(r, n);
    pi.beta = pi.alpha.rowwise().sum();
    Eigen::MatrixXd a, a_aug, b, b_aug;
    verify::random_embeddings(r, n, 3, a, a_aug);
    verify::random_embeddings(r, n, 2, b, b_aug);
    auto cov = contrastive_cov(pi, a, a_aug, b, b_aug);
    REQUIRE(cov.ok());
    const Eigen::MatrixXd ref =
        verify::brute_force_cov(pi.alpha, a, a_aug, b, b_aug);
    CHECK((*cov - ref).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("covariance ignores stale cached row sums") {
  Rng rng(32, 0);
  PairImportance pi;
  pi.alpha = random_alpha(rng, 5);
  pi.beta = Eigen::VectorXd::Constant(5, 123.0);  // deliberately wrong
  Eigen::MatrixXd a, a_aug;
  verify::random_embeddings(rng, 5, 3, a, a_aug);
  auto cov = contrastive_cov(pi, a, a_aug, a, a_aug);
  REQUIRE(cov.ok());
  const Eigen::MatrixXd ref =
      verify::brute_force_cov(pi.alpha, a, a_aug, a, a_aug);
  CHECK((*cov - ref).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("covariance is bilinear in its two signals") {
  Rng rng(33, 0);
  PairImportance pi;
  pi.alpha = random_alpha(rng, 6);
  pi.beta = pi.alpha.rowwise().sum();
  Eigen::MatrixXd a, a_aug, b1, b1_aug, b2, b2_aug;
  verify::random_embeddings(rng, 6, 3, a, a_aug);
  verify::random_embeddings(rng, 6, 4, b1, b1_aug);
  verify::random_embeddings(rng, 6, 4, b2, b2_aug);
  auto c1 = contrastive_cov(pi, a, a_aug, b1, b1_aug);
  auto c2 = contrastive_cov(pi, a, a_aug, b2, b2_aug);
  auto c12 = contrastive_cov(pi, a, a_aug, 2.0 * b1 + b2,
                             2.0 * b1_aug + b2_aug);
  REQUIRE(c1.ok());
  REQUIRE(c2.ok());
  REQUIRE(c12.ok());
  CHECK((*c12 - (2.0 * *c1 + *c2)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("both energy routes agree") {
  Rng rng(34, 0);
  for (int draw = 0; draw < 10; ++draw) {
    Rng r = rng.child(static_cast<std::uint64_t>(draw));
    PairImportance pi;
    pi.alpha = random_alpha(r, 7);
    pi.beta = pi.alpha.rowwise().sum();
    Eigen::MatrixXd z, z_aug;
    verify::random_embeddings(r, 7, 4, z, z_aug);
    auto e_cov = energy(pi, z, z_aug);
    auto d = pairwise_distances(z, z_aug);
    REQUIRE(d.ok());
    auto e_dist = energy_from_distances(pi, *d);
    REQUIRE(e_cov.ok());
    REQUIRE(e_dist.ok());
    CHECK(*e_cov == doctest::Approx(*e_dist).epsilon(1e-11));
  }
}

TEST_CASE("two-sample energy by hand") {
  PairImportance pi;
  pi.alpha.resize(2, 2);
  pi.alpha << 0.0, 0.3,
              0.7, 0.0;
  pi.beta = pi.alpha.rowwise().sum();
  Eigen::MatrixXd z(2, 1), z_aug(2, 1);
  z << 0.0, 2.0;
  z_aug << 1.0, 2.0;
  // cross(0,1) = 4/2 = 2; intra = (1/2, 0).
  // E = 0.3 * (2 - 0.5) + 0.7 * (2 - 0) = 0.45 + 1.4 = 1.85.
  auto e = energy(pi, z, z_aug);
  REQUIRE(e.ok());
  CHECK(*e == doctest::Approx(1.85).epsilon(1e-14));
}

TEST_CASE("shape mismatches are rejected") {
  PairImportance pi;
  pi.alpha = Eigen::MatrixXd::Zero(3, 4);
  pi.beta = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd z = Eigen::MatrixXd::Random(3, 2);
  CHECK_FALSE(energy(pi, z, z).ok());
  pi.alpha = Eigen::MatrixXd::Zero(4, 4);
  CHECK_FALSE(energy(pi, z, z).ok());
}

TEST_CASE("spectrum sidecar lists descending eigenvalues") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "alphacl_energy_test";
  fs::create_directories(dir);
  const std::string path = (dir / "sym.csv").string();

  Eigen::MatrixXd m(3, 3);
  m << 2, 1, 0,
       1, 3, 1,
       0, 1, 2;
  REQUIRE(write_symmetric_with_spectrum_csv(path, m).ok());
  auto main_file = read_file(path);
  auto eigs_file = read_file(path + ".eigs.csv");
  REQUIRE(main_file.ok());
  REQUIRE(eigs_file.ok());

  // Parse the one-column sidecar (skip header) and check the order.
  std::vector<double> eigs;
  std::istringstream in(*eigs_file);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty()) eigs.push_back(std::strtod(line.c_str(), nullptr));
  }
  REQUIRE(eigs.size() == 3);
  CHECK(eigs[0] >= eigs[1]);
  CHECK(eigs[1] >= eigs[2]);
  CHECK(eigs[0] + eigs[1] + eigs[2] == doctest::Approx(7.0));  // trace
  fs::remove(path);
  fs::remove(path + ".eigs.csv");
}

}  // TEST_SUITE
