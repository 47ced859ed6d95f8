#include <cmath>

#include "alphacl/deep_linear.hpp"
#include "alphacl/jacobi.hpp"
#include "alphacl/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace alphacl;

TEST_SUITE("deep_linear") {

TEST_CASE("input covariance equals the quadruple-loop reference") {
  Rng rng(61, 0);
  PairImportance pi;
  pi.alpha.setZero(5, 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i != j) pi.alpha(i, j) = rng.uniform(0.0, 1.0);
    }
  }
  pi.beta = pi.alpha.rowwise().sum();
  Eigen::MatrixXd x, x_aug;
  verify::random_embeddings(rng, 5, 4, x, x_aug);
  auto built = build_x_alpha(pi, x, x_aug);
  REQUIRE(built.ok());
  const Eigen::MatrixXd ref =
      verify::brute_force_cov(pi.alpha, x, x_aug, x, x_aug);
  CHECK((*built - ref).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((*built - built->transpose()).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("doubled energy is the end-to-end quadratic form") {
  DeepLinState state;
  state.weights.push_back((Eigen::MatrixXd(2, 2) << 1, 0, 1, 1).finished());
  state.weights.push_back((Eigen::MatrixXd(1, 2) << 2, -1).finished());
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 0.2,
       0.2, 0.5;
  // W = (2, -1) * ((1,0),(1,1)) = (1, -1); w X w^T = 1 - 0.4 + 0.5 = 1.1.
  auto e2 = flow_energy2(state, x);
  REQUIRE(e2.ok());
  CHECK(*e2 == doctest::Approx(1.1).epsilon(1e-14));
}

TEST_CASE("single constrained layer climbs to the top eigenvalue") {
  const Eigen::MatrixXd x =
      Eigen::Vector3d(2.0, 1.0, 0.5).asDiagonal().toDenseMatrix();
  DeepLinState init;
  init.weights.push_back(
      (Eigen::MatrixXd(1, 3) << 0.6, 0.64, 0.48).finished());
  FlowOptions opts;
  opts.tol = 1e-14;
  auto flow = run_flow(init, x, opts);
  REQUIRE(flow.ok());
  CHECK(flow->converged);
  CHECK(flow->final_energy2 == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::abs(flow->state.weights[0](0, 0)) ==
        doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("isotropic covariance is a fixed point of the projected step") {
  Rng rng(62, 0);
  auto init = random_flow_init(rng, {4, 4}, FlowNorm::kFrobenius);
  REQUIRE(init.ok());
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(4, 4);
  auto next = flow_step(*init, x, 1e-2, FlowNorm::kFrobenius);
  REQUIRE(next.ok());
  CHECK((next->weights[0] - init->weights[0]).cwiseAbs().maxCoeff() < 1e-12);
  auto e2 = flow_energy2(*init, x);
  CHECK(*e2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a start orthogonal to the top eigenvector stalls on the next one") {
  const Eigen::MatrixXd x =
      Eigen::Vector3d(3.0, 1.0, 0.25).asDiagonal().toDenseMatrix();
  DeepLinState init;
  init.weights.push_back((Eigen::MatrixXd(1, 3) << 0.0, 0.8, 0.6).finished());
  FlowOptions opts;
  opts.tol = 1e-14;
  auto flow = run_flow(init, x, opts);
  REQUIRE(flow.ok());
  // The first coordinate has velocity proportional to itself, so exact zero
  // is invariant; the flow can only find the second eigenpair.
  CHECK(flow->state.weights[0](0, 0) == 0.0);
  CHECK(flow->final_energy2 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("constrained energy never decreases along the run") {
  Rng rng(63, 0);
  const Eigen::MatrixXd x = verify::random_symmetric_with_gap(rng, 5, 0.1,
                                                              1.0, 2.0);
  auto init = random_flow_init(rng, {5, 5, 5}, FlowNorm::kFrobenius);
  REQUIRE(init.ok());
  FlowOptions opts;
  opts.max_steps = 2000;
  opts.tol = 0.0;
  auto flow = run_flow(*init, x, opts);
  REQUIRE(flow.ok());
  for (std::size_t t = 1; t < flow->trace.energy2.size(); ++t) {
    CHECK(flow->trace.energy2[t] >=
          flow->trace.energy2[t - 1] - 1e-12 * std::abs(flow->trace.energy2[t]));
  }
}

TEST_CASE("depth does not change the constrained optimum") {
  Rng rng(64, 0);
  const Eigen::MatrixXd x = verify::random_symmetric_with_gap(rng, 4, 0.2,
                                                              1.0, 1.5);
  double e_shallow = 0.0, e_deep = 0.0;
  {
    auto init = random_flow_init(rng, {4, 4}, FlowNorm::kFrobenius);
    FlowOptions opts;
    opts.tol = 1e-14;
    auto flow = run_flow(*init, x, opts);
    REQUIRE(flow.ok());
    e_shallow = flow->final_energy2;
  }
  {
    auto init = random_flow_init(rng, {4, 6, 5, 4}, FlowNorm::kFrobenius);
    FlowOptions opts;
    opts.tol = 1e-14;
    auto flow = run_flow(*init, x, opts);
    REQUIRE(flow.ok());
    e_deep = flow->final_energy2;
  }
  CHECK(e_shallow == doctest::Approx(e_deep).epsilon(1e-6));
}

TEST_CASE("per-filter projection fixes row norms below the head layer") {
  Rng rng(65, 0);
  auto init = random_flow_init(rng, {4, 6, 3}, FlowNorm::kPerFilter);
  REQUIRE(init.ok());
  for (int r = 0; r < 6; ++r) {
    CHECK(init->weights[0].row(r).norm() ==
          doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
  }
  CHECK(init->weights[1].norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unconstrained drift shrinks like the squared step size") {
  Rng rng(66, 0);
  Eigen::MatrixXd x = verify::random_symmetric_with_gap(rng, 4, 0.05, 0.5,
                                                        1.0);
  auto dec = jacobi_eigen_symmetric(x);
  REQUIRE(dec.ok());
  x *= 0.2 / dec->values(0);
  auto init = random_flow_init(rng, {4, 4, 4}, FlowNorm::kFrobenius);
  REQUIRE(init.ok());

  const auto drift_at = [&](double eta) {
    FlowOptions opts;
    opts.eta = eta;
    opts.max_steps = 400;
    opts.tol = 0.0;
    opts.norm = FlowNorm::kNone;
    opts.backtracking = false;
    opts.record_every = 400;
    auto flow = run_flow(*init, x, opts);
    REQUIRE(flow.ok());
    const auto resid = balancedness_residual(flow->state, *init);
    double dmax = 0.0;
    for (double d : resid) dmax = std::max(dmax, d);
    return dmax;
  };
  const double d1 = drift_at(1e-3);
  const double d2 = drift_at(5e-4);
  CHECK(d1 / d2 > 3.0);
  CHECK(d1 / d2 < 5.0);
}

TEST_CASE("alignment report on a converged deep run") {
  Rng rng(67, 0);
  const Eigen::MatrixXd x = verify::random_symmetric_with_gap(rng, 5, 0.3,
                                                              1.0, 1.5);
  auto dec = jacobi_eigen_symmetric(x);
  REQUIRE(dec.ok());
  auto init = random_flow_init(rng, {5, 5, 5}, FlowNorm::kFrobenius);
  FlowOptions opts;
  opts.tol = 1e-14;
  auto flow = run_flow(*init, x, opts);
  REQUIRE(flow.ok());
  auto rep = check_alignment(flow->state,
                             std::optional<Eigen::VectorXd>(
                                 dec->vectors.col(0)));
  REQUIRE(rep.ok());
  for (double r : rep->sigma_ratio) CHECK(r < 1e-3);
  CHECK(rep->product_sigma_ratio < 1e-3);
  CHECK(rep->cos_to_reference > 1.0 - 1e-4);
  CHECK(rep->top_hypothesis_ok);
}

TEST_CASE("invalid states and shapes are rejected") {
  DeepLinState empty;
  CHECK_FALSE(flow_energy2(empty, Eigen::MatrixXd::Identity(2, 2)).ok());

  DeepLinState broken;
  broken.weights.push_back(Eigen::MatrixXd::Random(3, 2));
  broken.weights.push_back(Eigen::MatrixXd::Random(2, 5));  // width mismatch
  CHECK_FALSE(flow_energy2(broken, Eigen::MatrixXd::Identity(2, 2)).ok());

  DeepLinState ok_state;
  ok_state.weights.push_back(Eigen::MatrixXd::Random(2, 3));
  CHECK_FALSE(flow_step(ok_state, Eigen::MatrixXd::Identity(4, 4), 1e-2,
                        FlowNorm::kFrobenius)
                  .ok());
}

}  // TEST_SUITE
