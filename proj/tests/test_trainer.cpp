#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "alphacl/trainer.hpp"
#include "doctest.h"

using namespace alphacl;

namespace {

TaskConfig small_task() {
  TaskConfig t;
  t.classes = 3;
  t.per_class = 8;
  t.dim = 6;
  t.cluster_noise = 0.4;
  t.aug_noise = 0.2;
  return t;
}

TrainConfig small_train(VariantKind variant, std::uint64_t seed) {
  TrainConfig c;
  c.variant = variant;
  c.epochs = 2;
  c.batch_size = 8;
  c.hidden = {8};
  c.embed_dim = 3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("task generation is shaped, labeled, and reproducible") {
  TaskConfig cfg = small_task();
  cfg.nuisance_dims = 2;
  cfg.nuisance_scale = 1.0;
  Rng a(5, 0), b(5, 0);
  auto t1 = generate_task(cfg, a);
  auto t2 = generate_task(cfg, b);
  REQUIRE(t1.ok());
  REQUIRE(t2.ok());
  CHECK(t1->x.rows() == 24);
  CHECK(t1->x.cols() == 6);
  CHECK(t1->x_aug.rows() == 24);
  CHECK(t1->labels.size() == 24);
  CHECK(t1->labels.minCoeff() == 0);
  CHECK(t1->labels.maxCoeff() == 2);
  for (int cls = 0; cls < 3; ++cls) {
    CHECK((t1->labels.array() == cls).count() == 8);
  }
  CHECK((t1->x - t2->x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t1->x_aug - t2->x_aug).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t1->labels - t2->labels).cwiseAbs().maxCoeff() == 0);

  TaskConfig bad = cfg;
  bad.classes = 1;
  Rng r(5, 0);
  CHECK_FALSE(generate_task(bad, r).ok());
  bad = cfg;
  bad.nuisance_dims = 6;
  CHECK_FALSE(generate_task(bad, r).ok());
}

TEST_CASE("training is a pure function of task, config, and seed") {
  Rng rng(6, 0);
  auto task = generate_task(small_task(), rng);
  REQUIRE(task.ok());
  TrainConfig cfg = small_train(VariantKind::kInfoNce, 17);
  auto r1 = train(*task, cfg);
  auto r2 = train(*task, cfg);
  REQUIRE(r1.ok());
  REQUIRE(r2.ok());
  REQUIRE(r1->encoder.weights.size() == r2->encoder.weights.size());
  for (std::size_t l = 0; l < r1->encoder.weights.size(); ++l) {
    CHECK((r1->encoder.weights[l] - r2->encoder.weights[l])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(r1->steps == r2->steps);

  TrainConfig other = cfg;
  other.seed = 18;
  auto r3 = train(*task, other);
  REQUIRE(r3.ok());
  CHECK((r1->encoder.weights[0] - r3->encoder.weights[0])
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("every variant trains end to end") {
  Rng rng(7, 0);
  auto task = generate_task(small_task(), rng);
  REQUIRE(task.ok());
  const VariantKind variants[] = {
      VariantKind::kInfoNce, VariantKind::kQuadratic,
      VariantKind::kBackpropAlpha, VariantKind::kAlphaCl,
      VariantKind::kAlphaClDirect};
  for (VariantKind v : variants) {
    CAPTURE(static_cast<int>(v));
    TrainConfig cfg = small_train(v, 23);
    auto res = train(*task, cfg);
    REQUIRE(res.ok());
    CHECK(res->steps == 2 * 3);  // 2 epochs x 3 batches of 8 over 24 samples
    CHECK(res->log.size() == 2);
    for (const auto& e : res->log) CHECK(std::isfinite(e.mean_objective));
    auto acc = linear_probe(res->encoder, *task, 3);
    REQUIRE(acc.ok());
    CHECK(*acc >= 0.0);
    CHECK(*acc <= 1.0);
  }

  TrainConfig adam = small_train(VariantKind::kInfoNce, 23);
  adam.optimizer = OptimizerKind::kAdamLike;
  auto res = train(*task, adam);
  REQUIRE(res.ok());

  TrainConfig bad = small_train(VariantKind::kInfoNce, 23);
  bad.batch_size = 1;
  auto bad_res = train(*task, bad);
  REQUIRE_FALSE(bad_res.ok());
  CHECK(bad_res.error().code == Errc::kInvalidConfig);
}

TEST_CASE("raw probe separates a clean task and collapses on shuffled labels") {
  TaskConfig cfg;
  cfg.classes = 4;
  cfg.per_class = 32;
  cfg.dim = 8;
  cfg.center_scale = 3.0;
  cfg.cluster_noise = 0.3;
  Rng rng(8, 0);
  auto task = generate_task(cfg, rng);
  REQUIRE(task.ok());
  auto acc = raw_input_probe(*task, 4);
  REQUIRE(acc.ok());
  CHECK(*acc > 0.9);

  TaskData shuffled = *task;
  std::vector<int> labels(shuffled.labels.data(),
                          shuffled.labels.data() + shuffled.labels.size());
  std::mt19937 gen(99);
  std::shuffle(labels.begin(), labels.end(), gen);
  for (Eigen::Index i = 0; i < shuffled.labels.size(); ++i) {
    shuffled.labels[i] = labels[static_cast<std::size_t>(i)];
  }
  auto chance = raw_input_probe(shuffled, 4);
  REQUIRE(chance.ok());
  CHECK(*chance < 0.6);  // 4 classes, held-out split: near 0.25
}

TEST_CASE("loss descent and frozen-importance ascent walk the same path") {
  TaskConfig tcfg;
  tcfg.classes = 4;
  tcfg.per_class = 8;
  tcfg.dim = 6;
  Rng rng(9, 0);
  auto task = generate_task(tcfg, rng);
  REQUIRE(task.ok());

  TrainConfig down;
  down.variant = VariantKind::kInfoNce;
  down.loss = LossSpec{LossKind::kInfoNce, 0.5, 0.0, 1.0};
  down.epochs = 5;
  down.batch_size = 16;
  down.hidden = {8};
  down.embed_dim = 3;
  down.seed = 31;
  down.snapshot_every = 1;

  TrainConfig up = down;
  up.variant = VariantKind::kAlphaCl;
  up.reg = RegularizerSpec{RegKind::kEntropy, 0.5, 2.0, {}};

  auto a = train(*task, down);
  auto b = train(*task, up);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  REQUIRE(a->snapshots.size() == b->snapshots.size());
  REQUIRE(!a->snapshots.empty());
  double worst = 0.0;
  for (std::size_t s = 0; s < a->snapshots.size(); ++s) {
    for (std::size_t l = 0; l < a->snapshots[s].size(); ++l) {
      worst = std::max(worst, (a->snapshots[s][l] - b->snapshots[s][l])
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("snapshots land exactly on the configured cadence") {
  Rng rng(10, 0);
  auto task = generate_task(small_task(), rng);
  REQUIRE(task.ok());
  TrainConfig cfg = small_train(VariantKind::kQuadratic, 41);
  cfg.epochs = 3;  // 9 steps total
  cfg.snapshot_every = 2;
  auto res = train(*task, cfg);
  REQUIRE(res.ok());
  CHECK(res->steps == 9);
  CHECK(res->snapshots.size() == 4);  // steps 2, 4, 6, 8
  for (const auto& snap : res->snapshots) {
    CHECK(snap.size() == res->encoder.weights.size());
  }
  const auto& last = res->snapshots.back();
  double diff = 0.0;
  for (std::size_t l = 0; l < last.size(); ++l) {
    diff = std::max(diff,
                    (last[l] - res->encoder.weights[l]).cwiseAbs().maxCoeff());
  }
  CHECK(diff > 0.0);  // one more step ran after the final snapshot
}

}  // TEST_SUITE
