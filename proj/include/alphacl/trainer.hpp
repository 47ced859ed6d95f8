#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "alphacl/encoder.hpp"
#include "alphacl/importance.hpp"
#include "alphacl/result.hpp"
#include "alphacl/rng.hpp"

namespace alphacl {

// Synthetic clustered task: `classes` Gaussian clusters with centers on a
// sphere of radius center_scale. The trailing nuisance_dims carry
// class-independent variance (centers are zero there). Augmentations add
// isotropic noise and an optional per-sample positive scaling.
struct TaskConfig {
  int classes = 4;
  int per_class = 32;
  int dim = 8;
  double center_scale = 3.0;
  double cluster_noise = 0.5;
  double aug_noise = 0.1;
  double scale_lo = 1.0, scale_hi = 1.0;  // per-sample scaling s ~ U(lo, hi)
  int nuisance_dims = 0;
  double nuisance_scale = 0.0;
};

struct TaskData {
  Eigen::MatrixXd x, x_aug;  // N x dim
  Eigen::VectorXi labels;    // N
};

Result<TaskData> generate_task(const TaskConfig& cfg, Rng& rng);

enum class VariantKind {
  kInfoNce,        // descend the InfoNCE loss
  kQuadratic,      // descend the quadratic loss (fixed uniform importance)
  kBackpropAlpha,  // ascend the energy with gradients through alpha
  kAlphaCl,        // coordinate ascent, alpha from a regularized solver
  kAlphaClDirect,  // coordinate ascent, alpha assigned directly
};

enum class OptimizerKind { kSgd, kAdamLike };

struct TrainConfig {
  VariantKind variant = VariantKind::kInfoNce;
  LossSpec loss{LossKind::kInfoNce, 0.5, 0.0, 1.0};
  RegularizerSpec reg{RegKind::kEntropy, 0.5, 2.0, {}};
  DirectAlphaSpec direct{4.0, 0.5, true, DirectDistance::kEuclidean};

  OptimizerKind optimizer = OptimizerKind::kSgd;
  double lr = 0.05;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  int epochs = 30;
  int batch_size = 16;
  std::vector<int> hidden{16};
  int embed_dim = 4;
  Activation activation = Activation::kRelu;
  Head head = Head::kL2Normalize;

  std::uint64_t seed = 0;
  int snapshot_every = 0;  // record weight snapshots every k steps (0 = off)
};

struct EpochLog {
  int epoch = 0;
  double mean_objective = 0.0;  // loss for descent variants, energy otherwise
};

struct TrainResult {
  Encoder encoder;
  std::vector<EpochLog> log;
  long steps = 0;
  std::vector<std::vector<Eigen::MatrixXd>> snapshots;  // per snapshot, per layer
};

Result<TrainResult> train(const TaskData& task, const TrainConfig& cfg);

// Ridge regression on one-hot labels over the encoder embeddings, fit on a
// seed-stable 80% hash split and scored on the held-out 20%.
Result<double> linear_probe(const Encoder& enc, const TaskData& task,
                            int classes, double ridge = 1e-4,
                            std::uint64_t split_salt = 0x51e0);

// Same probe on the raw inputs: the reference any trained encoder is
// calibrated against.
Result<double> raw_input_probe(const TaskData& task, int classes,
                               double ridge = 1e-4,
                               std::uint64_t split_salt = 0x51e0);

}  // namespace alphacl
