#include <cmath>

#include "alphacl/deep_linear.hpp"
#include "alphacl/relu2.hpp"
#include "alphacl/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace alphacl;

namespace {

PairImportance uniform_importance(Eigen::Index n) {
  PairImportance pi;
  pi.alpha = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n - 1));
  pi.alpha.diagonal().setZero();
  pi.beta = pi.alpha.rowwise().sum();
  return pi;
}

}  // namespace

TEST_SUITE("relu") {

TEST_CASE("mixture batches satisfy their contract") {
  Rng rng(71, 0);
  MixtureConfig cfg;
  cfg.modes = 4;
  cfg.samples = 13;
  auto batch = generate_mixture(cfg, rng);
  REQUIRE(batch.ok());
  const MixtureCheck chk = check_mixture(*batch);
  CHECK(chk.one_hot_nonneg);
  CHECK(chk.full_coverage);
  CHECK(chk.pairs_scaled);

  MixtureConfig bad = cfg;
  bad.samples = 3;  // cannot cover 4 modes
  CHECK_FALSE(generate_mixture(bad, rng).ok());

  // A dense batch is not a mixture.
  Batch dense;
  dense.inputs = Eigen::MatrixXd::Random(6, 4);
  dense.inputs_aug = Eigen::MatrixXd::Random(6, 4);
  CHECK_FALSE(check_mixture(dense).one_hot_nonneg);
}

TEST_CASE("relu forward is linear on mixture data with nonnegative w1") {
  Rng rng(72, 0);
  MixtureConfig cfg;
  cfg.modes = 3;
  cfg.samples = 9;
  auto batch = generate_mixture(cfg, rng);
  REQUIRE(batch.ok());
  Rng ir = rng.child(1);
  auto st = random_relu2_init(ir, 3, 5, 2);
  REQUIRE(st.ok());
  auto fwd = relu2_forward(*st, batch->inputs);
  REQUIRE(fwd.ok());
  const Eigen::MatrixXd linear_hidden = batch->inputs * st->w1.transpose();
  const Eigen::MatrixXd linear_out = linear_hidden * st->w2.transpose();
  CHECK((fwd->first - linear_hidden).cwiseAbs().maxCoeff() == 0.0);
  CHECK((fwd->second - linear_out).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("doubled energy matches an explicit trace") {
  Relu2State st;
  st.w1 = (Eigen::MatrixXd(2, 2) << 0.6, 0.0, 0.2, 0.7).finished();
  st.w2 = (Eigen::MatrixXd(1, 2) << 1.0, -0.5).finished();
  Eigen::MatrixXd x(2, 2);
  x << 0.9, -0.3,
       -0.3, 0.8;
  const Eigen::MatrixXd w = st.w2 * st.w1;
  double expected = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) expected += w(0, a) * x(a, b) * w(0, b);
  }
  auto e2 = relu2_energy2(st, x);
  REQUIRE(e2.ok());
  CHECK(*e2 == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("projection snaps tiny first-layer entries to exact zero") {
  Relu2State st;
  st.w1 = (Eigen::MatrixXd(1, 3) << 0.5, 1e-13, -0.2).finished();
  st.w2 = Eigen::MatrixXd::Ones(1, 1);
  auto proj = project_relu2(st);
  REQUIRE(proj.ok());
  CHECK(proj->w1(0, 1) == 0.0);
  CHECK(proj->w1(0, 2) == 0.0);  // negatives clamp too
  CHECK(proj->w1.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(proj->w2(0, 0) == 1.0);

  Relu2State dead;
  dead.w1 = Eigen::MatrixXd::Zero(1, 2);
  dead.w2 = Eigen::MatrixXd::Ones(1, 1);
  CHECK(project_relu2(dead).error().code == Errc::kSingular);
}

TEST_CASE("zeroed coordinates stay zero under the sticky step") {
  Rng rng(73, 0);
  MixtureConfig cfg;
  cfg.modes = 3;
  cfg.samples = 9;
  auto batch = generate_mixture(cfg, rng);
  REQUIRE(batch.ok());
  const PairImportance pi = uniform_importance(batch->inputs.rows());
  auto x = build_x_alpha(pi, batch->inputs, batch->inputs_aug);
  REQUIRE(x.ok());

  Relu2State st;
  st.w1 = (Eigen::MatrixXd(2, 3) << 0.8, 0.0, 0.3,
                                    0.0, 0.9, 0.0).finished();
  st.w2 = (Eigen::MatrixXd(2, 2) << 0.5, -0.3, 0.1, 0.7).finished();
  auto st0 = project_relu2(st);
  REQUIRE(st0.ok());
  Relu2State cur = *st0;
  for (int step = 0; step < 50; ++step) {
    auto next = sticky_step(cur, *x, 1e-2);
    REQUIRE(next.ok());
    cur = *next;
    CHECK(cur.w1(0, 1) == 0.0);
    CHECK(cur.w1(1, 0) == 0.0);
    CHECK(cur.w1(1, 2) == 0.0);
  }
}

TEST_CASE("sticky step equals the true relu gradient step on mixtures") {
  Rng rng(74, 0);
  for (int s = 0; s < 3; ++s) {
    Rng r = rng.child(static_cast<std::uint64_t>(s));
    MixtureConfig cfg;
    cfg.modes = 4;
    cfg.samples = 10;
    auto batch = generate_mixture(cfg, r);
    REQUIRE(batch.ok());
    const PairImportance pi = uniform_importance(batch->inputs.rows());
    auto x = build_x_alpha(pi, batch->inputs, batch->inputs_aug);
    REQUIRE(x.ok());
    Rng ir = r.child(1);
    auto st = random_relu2_init(ir, 4, 5, 3);
    REQUIRE(st.ok());
    Relu2State cur = *st;
    for (int step = 0; step < 50; ++step) {
      auto a = sticky_step(cur, *x, 1e-2);
      auto b = relu_gradient_step(cur, *batch, pi, 1e-2);
      REQUIRE(a.ok());
      REQUIRE(b.ok());
      CHECK((a->w1 - b->w1).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((a->w2 - b->w2).cwiseAbs().maxCoeff() < 1e-10);
      cur = *a;
    }
  }
}

TEST_CASE("a single hidden node settles on one mode") {
  Rng rng(75, 0);
  auto run = one_node_run(rng, 3, 9, 1e-2, 200000);
  REQUIRE(run.ok());
  CHECK(run->converged);
  CHECK(run->dist_to_basis < 1e-6);
  CHECK(run->winner_mode >= 0);
  CHECK(run->winner_mode < 3);
}

TEST_CASE("diversity classification on hand-built states") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(4, 4);

  Relu2State single;
  single.w1 = Eigen::MatrixXd::Zero(3, 4);
  single.w1(0, 2) = 0.9;
  single.w1(1, 2) = 0.3;
  single.w2 = Eigen::MatrixXd::Ones(2, 3);
  auto rep1 = diversity_classify(single, x);
  REQUIRE(rep1.ok());
  CHECK(rep1->branch == DiversityBranch::kRank1SingleMode);
  CHECK(rep1->mode == 2);
  CHECK_FALSE(rep1->violation);

  Relu2State multi;
  multi.w1 = Eigen::MatrixXd::Zero(3, 4);
  multi.w1(0, 0) = 0.8;
  multi.w1(1, 1) = 0.7;
  multi.w2 = Eigen::MatrixXd::Ones(2, 3);
  auto rep2 = diversity_classify(multi, x);
  REQUIRE(rep2.ok());
  CHECK(rep2->branch == DiversityBranch::kHigherRank);
  CHECK(rep2->rank >= 2);

  // Rank 1 but spread across two modes: the flagged contradiction.
  Relu2State spread;
  spread.w1 = Eigen::MatrixXd::Zero(3, 4);
  spread.w1.row(0) << 0.6, 0.6, 0.0, 0.0;
  spread.w1.row(1) << 0.3, 0.3, 0.0, 0.0;
  spread.w2 = Eigen::MatrixXd::Ones(2, 3);
  auto rep3 = diversity_classify(spread, x);
  REQUIRE(rep3.ok());
  CHECK(rep3->branch == DiversityBranch::kRank1SingleMode);
  CHECK(rep3->violation);

  // Non-positive energy refuses to classify.
  auto bad = diversity_classify(single, -x);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.error().code == Errc::kDomain);
}

TEST_CASE("mixture covariance has negative couplings and a mixed top mode") {
  Rng rng(76, 0);
  MixtureConfig cfg;
  cfg.modes = 4;
  cfg.samples = 12;
  auto batch = generate_mixture(cfg, rng);
  REQUIRE(batch.ok());
  PairImportance pi;
  const Eigen::Index n = batch->inputs.rows();
  pi.alpha.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) pi.alpha(i, j) = rng.uniform(0.2, 1.0);
    }
  }
  pi.beta = pi.alpha.rowwise().sum();
  auto rep = xalpha_structure_check(pi, *batch);
  REQUIRE(rep.ok());
  CHECK(rep->checked);
  CHECK(rep->offdiag_negative);
  CHECK(rep->eigvec_mixed_signs);

  // Hypothesis violations skip instead of failing.
  Batch dense;
  dense.inputs = Eigen::MatrixXd::Random(6, 4);
  dense.inputs_aug = Eigen::MatrixXd::Random(6, 4);
  PairImportance pd = uniform_importance(6);
  auto skipped = xalpha_structure_check(pd, dense);
  REQUIRE(skipped.ok());
  CHECK_FALSE(skipped->checked);
  CHECK_FALSE(skipped->skip_reason.empty());

  PairImportance zeros = uniform_importance(n);
  zeros.alpha(0, 1) = 0.0;
  auto skipped2 = xalpha_structure_check(zeros, *batch);
  REQUIRE(skipped2.ok());
  CHECK_FALSE(skipped2->checked);
}

TEST_CASE("balanced mixtures with a pinned head keep several modes alive") {
  // One sample per mode with equal amplitudes, uniform importance, and the
  // second layer pinned at a scaled orthogonal matrix: every hidden unit
  // sees the same gain, so rows that latch onto different modes grow at
  // identical rates and multi-mode fixed points survive.
  int higher_rank = 0;
  for (int s = 0; s < 3; ++s) {
    Rng rng(90 + s, 0);
    MixtureConfig cfg;
    cfg.modes = 4;
    cfg.samples = 4;
    cfg.amp_lo = cfg.amp_hi = 1.0;
    cfg.gamma_lo = cfg.gamma_hi = 1.5;
    auto batch = generate_mixture(cfg, rng);
    REQUIRE(batch.ok());
    PairImportance pi = uniform_importance(batch->inputs.rows());
    auto x = build_x_alpha(pi, batch->inputs, batch->inputs_aug);
    REQUIRE(x.ok());

    Relu2State st;
    st.w1.resize(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) st.w1(i, j) = std::abs(rng.normal());
    }
    Eigen::MatrixXd g(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    st.w2 = qr.householderQ();
    auto init = project_relu2(std::move(st));
    REQUIRE(init.ok());

    Relu2State cur = *init;
    const Eigen::MatrixXd head = cur.w2;
    bool converged = false;
    for (long k = 0; k < 50000; ++k) {
      auto next = sticky_step(cur, *x, 1e-2);
      REQUIRE(next.ok());
      next->w2 = head;
      const double change = (next->w1 - cur.w1).cwiseAbs().maxCoeff();
      cur = std::move(*next);
      if (change < 1e-14) {
        converged = true;
        break;
      }
    }
    REQUIRE(converged);

    // Every surviving row sits on exactly one mode.
    for (int h = 0; h < 4; ++h) {
      int live = 0;
      for (int m = 0; m < 4; ++m) live += cur.w1(h, m) > 0.0 ? 1 : 0;
      CHECK(live <= 1);
    }
    auto rep = diversity_classify(cur, *x);
    REQUIRE(rep.ok());
    CHECK_FALSE(rep->violation);
    if (rep->branch == DiversityBranch::kHigherRank) ++higher_rank;
  }
  CHECK(higher_rank >= 1);
}

}  // TEST_SUITE
