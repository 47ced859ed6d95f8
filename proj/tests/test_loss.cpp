#include <cmath>
#include <string>
#include <vector>

#include "alphacl/loss.hpp"
#include "alphacl/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace alphacl;
using verify::central_diff;
using verify::fd_close;

namespace {

LossSpec spec_for(LossKind kind) {
  LossSpec s;
  s.kind = kind;
  s.tau = 0.7;
  switch (kind) {
    case LossKind::kInfoNce: s.epsilon = 0.2; break;
    case LossKind::kTriplet: s.epsilon = 0.5; break;
    case LossKind::kSoftTriplet: s.epsilon = 0.3; break;
    case LossKind::kLiftedStructured: s.epsilon = 0.4; break;
    case LossKind::kModifiedTriplet: s.c = 2.0; break;
    default: break;
  }
  return s;
}

// Points inside each phi domain, away from kinks.
std::vector<double> phi_points(LossKind kind) {
  switch (kind) {
    case LossKind::kMine:
    case LossKind::kLiftedStructured:
      return {0.3, 0.5, 2.0, 7.5};
    case LossKind::kInfoNce:
      return {0.1, 0.5, 2.0, 7.5};  // eps + x > 0
    case LossKind::kSoftTriplet:
    case LossKind::kNPlusOneTuplet:
      return {-0.6, -0.3, 0.4, 3.0};  // 1 + x > 0
    default:
      return {-2.0, -0.3, 0.4, 3.0};
  }
}

std::vector<double> psi_points(LossKind kind) {
  if (kind == LossKind::kTriplet) return {-3.0, -1.0, 0.2, 1.5};  // kink at -0.5
  return {-2.0, -0.5, 0.3, 1.8};
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("phi and psi derivatives match central differences") {
  for (LossKind kind : kLossCatalog) {
    const LossSpec spec = spec_for(kind);
    for (double x : phi_points(kind)) {
      auto vg = eval_phi(spec, x);
      REQUIRE(vg.ok());
      const double num = central_diff(
          [&](double t) { return eval_phi(spec, t)->value; }, x);
      CHECK_MESSAGE(fd_close(vg->deriv, num),
                    loss_kind_name(kind) << " phi'(" << x << ") analytic "
                                         << vg->deriv << " vs fd " << num);
    }
    for (double x : psi_points(kind)) {
      auto vg = eval_psi(spec, x);
      REQUIRE(vg.ok());
      const double num = central_diff(
          [&](double t) { return eval_psi(spec, t)->value; }, x);
      CHECK_MESSAGE(fd_close(vg->deriv, num),
                    loss_kind_name(kind) << " psi'(" << x << ") analytic "
                                         << vg->deriv << " vs fd " << num);
    }
  }
}

TEST_CASE("hinge kink convention: derivative 0 exactly at the boundary") {
  LossSpec spec = spec_for(LossKind::kTriplet);  // psi = max(x + eps, 0)
  auto at_kink = eval_psi(spec, -spec.epsilon);
  REQUIRE(at_kink.ok());
  CHECK(at_kink->value == 0.0);
  CHECK(at_kink->deriv == 0.0);
  CHECK(eval_psi(spec, -spec.epsilon - 1e-12)->deriv == 0.0);
  CHECK(eval_psi(spec, -spec.epsilon + 1e-12)->deriv == 1.0);

  // Lifted clamp is C1: phi' = 0 on (0, 1].
  LossSpec lifted = spec_for(LossKind::kLiftedStructured);
  CHECK(eval_phi(lifted, 1.0)->deriv == 0.0);
  CHECK(eval_phi(lifted, 0.5)->deriv == 0.0);
  CHECK(eval_phi(lifted, 2.0)->deriv > 0.0);
}

TEST_CASE("domain and overflow guards") {
  LossSpec mine;
  mine.kind = LossKind::kMine;
  CHECK(eval_phi(mine, 0.0).error().code == Errc::kDomain);
  CHECK(eval_phi(mine, -1.0).error().code == Errc::kDomain);
  CHECK(eval_psi(mine, 1000.0).error().code == Errc::kOverflow);

  LossSpec lifted = spec_for(LossKind::kLiftedStructured);
  CHECK(eval_phi(lifted, -0.1).error().code == Errc::kDomain);

  LossSpec nce;
  nce.kind = LossKind::kInfoNce;
  nce.tau = 0.1;
  CHECK(eval_psi(nce, 100.0).error().code == Errc::kOverflow);

  LossSpec bad;
  bad.kind = LossKind::kInfoNce;
  bad.tau = -1.0;
  CHECK_FALSE(eval_phi(bad, 1.0).ok());
}

TEST_CASE("full loss agrees with the per-anchor softmax form") {
  Rng rng(11, 0);
  for (int draw = 0; draw < 20; ++draw) {
    Rng r = rng.child(static_cast<std::uint64_t>(draw));
    Eigen::MatrixXd z, z_aug;
    verify::random_embeddings(r, 8, 4, z, z_aug);
    auto d = pairwise_distances(z, z_aug);
    REQUIRE(d.ok());
    for (double eps : {0.0, 0.5}) {
      LossSpec spec{LossKind::kInfoNce, 0.5, eps, 1.0};
      auto ev = eval_loss(spec, *d);
      REQUIRE(ev.ok());
      const double oracle = verify::infonce_softmax_loss(0.5, eps, *d);
      CHECK(ev->loss == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("quadratic loss has the closed form sum of cost gaps") {
  Eigen::MatrixXd z(3, 2), z_aug(3, 2);
  z << 0, 0, 1, 0, 0, 2;
  z_aug << 0.5, 0, 1, 1, 1, 2;
  auto d = pairwise_distances(z, z_aug);
  REQUIRE(d.ok());
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (j != i) expected += d->intra(i) - d->cross(i, j);
    }
  }
  LossSpec spec{LossKind::kQuadratic, 1.0, 0.0, 1.0};
  auto ev = eval_loss(spec, *d);
  REQUIRE(ev.ok());
  CHECK(ev->loss == doctest::Approx(expected).epsilon(1e-14));

  LossSpec alias{LossKind::kTripletContrastive, 1.0, 0.0, 1.0};
  CHECK(eval_loss(alias, *d)->loss == doctest::Approx(ev->loss));
}

TEST_CASE("xi accumulates psi over negatives") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Random(4, 3);
  Eigen::MatrixXd z_aug = Eigen::MatrixXd::Random(4, 3);
  auto d = pairwise_distances(z, z_aug);
  REQUIRE(d.ok());
  LossSpec spec{LossKind::kMine, 1.0, 0.0, 1.0};
  auto ev = eval_loss(spec, *d);
  REQUIRE(ev.ok());
  for (int i = 0; i < 4; ++i) {
    double xi = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j != i) xi += std::exp(d->intra(i) - d->cross(i, j));
    }
    CHECK(ev->xi(i) == doctest::Approx(xi).epsilon(1e-12));
  }
}

TEST_CASE("spec text form round-trips") {
  for (LossKind kind : kLossCatalog) {
    const LossSpec spec = spec_for(kind);
    auto back = parse_loss_spec(format_loss_spec(spec));
    REQUIRE(back.ok());
    CHECK(back->kind == spec.kind);
    CHECK(back->tau == spec.tau);
    CHECK(back->epsilon == spec.epsilon);
    CHECK(back->c == spec.c);
  }
  CHECK_FALSE(parse_loss_spec("kind=frobnitz").ok());
  CHECK_FALSE(parse_loss_spec("tau=1.0").ok());           // kind missing
  CHECK_FALSE(parse_loss_spec("kind=mine zork=2").ok());  // unknown key
}

}  // TEST_SUITE
