#include "alphacl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alphacl/distances.hpp"
#include "alphacl/energy.hpp"

namespace alphacl {
namespace {

struct AdamState {
  std::vector<Eigen::MatrixXd> m, v;
  long t = 0;
};

bool all_finite(const std::vector<Eigen::MatrixXd>& ws) {
  for (const auto& w : ws) {
    if (!w.allFinite()) return false;
  }
  return true;
}

// Ascent-convention gradient at the embeddings plus the objective value for
// logging. Positive gradient means "move embeddings to increase the
// objective"; descent variants negate their loss gradient here.
struct BatchGrad {
  PairGrad g;
  double objective = 0.0;
};

Result<BatchGrad> batch_output_gradient(const TrainConfig& cfg,
                                        const Eigen::MatrixXd& z,
                                        const Eigen::MatrixXd& z_aug) {
  ALPHACL_TRY_ASSIGN(d, pairwise_distances(z, z_aug));
  BatchGrad out;
  switch (cfg.variant) {
    case VariantKind::kInfoNce:
    case VariantKind::kQuadratic: {
      LossSpec spec = cfg.loss;
      if (cfg.variant == VariantKind::kQuadratic) {
        spec.kind = LossKind::kQuadratic;
      }
      ALPHACL_TRY_ASSIGN(gl, grad_loss_wrt_outputs(spec, z, z_aug));
      out.g.g = -gl.g;
      out.g.g_aug = -gl.g_aug;
      ALPHACL_TRY_ASSIGN(ev, eval_loss(spec, d));
      out.objective = ev.loss;
      return out;
    }
    case VariantKind::kAlphaCl:
    case VariantKind::kAlphaClDirect: {
      AlphaSource source;
      if (cfg.variant == VariantKind::kAlphaCl) {
        source.kind = cfg.reg.kind == RegKind::kEntropy
                          ? AlphaSource::Kind::kEntropy
                      : cfg.reg.kind == RegKind::kInverse
                          ? AlphaSource::Kind::kInverse
                          : AlphaSource::Kind::kSquare;
        source.reg = cfg.reg;
      } else {
        source.kind = AlphaSource::Kind::kDirect;
        source.direct = cfg.direct;
      }
      ALPHACL_TRY_ASSIGN(pi, compute_alpha(source, d));
      ALPHACL_TRY_ASSIGN(ge, grad_energy_wrt_outputs(pi, z, z_aug));
      out.g = std::move(ge);
      ALPHACL_TRY_ASSIGN(e, energy_from_distances(pi, d));
      out.objective = e;
      return out;
    }
    case VariantKind::kBackpropAlpha:
      return Error{Errc::kUnsupported, "handled at the weight level"};
  }
  return Error{Errc::kInvalidConfig, "unknown variant"};
}

}  // namespace

Result<TaskData> generate_task(const TaskConfig& cfg, Rng& rng) {
  if (cfg.classes < 2 || cfg.per_class < 1) {
    return Error{Errc::kInvalidConfig, "need >= 2 classes, >= 1 per class"};
  }
  const int signal_dims = cfg.dim - cfg.nuisance_dims;
  if (signal_dims < 1 || cfg.nuisance_dims < 0) {
    return Error{Errc::kInvalidConfig, "nuisance_dims must leave >= 1 signal dim"};
  }
  if (!(cfg.scale_lo > 0.0 && cfg.scale_hi >= cfg.scale_lo)) {
    return Error{Errc::kInvalidConfig, "scale range must be positive"};
  }

  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(cfg.classes, cfg.dim);
  for (int c = 0; c < cfg.classes; ++c) {
    Eigen::VectorXd dir(signal_dims);
    for (int k = 0; k < signal_dims; ++k) dir(k) = rng.normal();
    const double nrm = dir.norm();
    if (nrm < 1e-12) dir.setOnes();
    centers.row(c).head(signal_dims) =
        (cfg.center_scale / dir.norm()) * dir.transpose();
  }

  const int n = cfg.classes * cfg.per_class;
  TaskData task;
  task.x.resize(n, cfg.dim);
  task.x_aug.resize(n, cfg.dim);
  task.labels.resize(n);
  int row = 0;
  for (int c = 0; c < cfg.classes; ++c) {
    for (int s = 0; s < cfg.per_class; ++s, ++row) {
      task.labels(row) = c;
      for (int k = 0; k < cfg.dim; ++k) {
        const double noise =
            k < signal_dims ? cfg.cluster_noise : cfg.nuisance_scale;
        task.x(row, k) = centers(c, k) + noise * rng.normal();
      }
      const double scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
      for (int k = 0; k < cfg.dim; ++k) {
        task.x_aug(row, k) =
            scale * (task.x(row, k) + cfg.aug_noise * rng.normal());
      }
    }
  }
  return task;
}

Result<TrainResult> train(const TaskData& task, const TrainConfig& cfg) {
  const int n = static_cast<int>(task.x.rows());
  if (n < 2 || task.x_aug.rows() != n || task.x_aug.cols() != task.x.cols()) {
    return Error{Errc::kShapeMismatch, "task data inconsistent"};
  }
  if (cfg.batch_size < 2) {
    return Error{Errc::kInvalidConfig, "batch_size must be >= 2"};
  }

  Rng rng(cfg.seed, 0xa1);
  std::vector<int> dims;
  dims.push_back(static_cast<int>(task.x.cols()));
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(cfg.embed_dim);
  Rng enc_rng = rng.child(0x10);
  TrainResult res;
  res.encoder = make_encoder(enc_rng, dims, cfg.activation, cfg.head);

  AdamState adam;
  if (cfg.optimizer == OptimizerKind::kAdamLike) {
    for (const auto& w : res.encoder.weights) {
      adam.m.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      adam.v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = rng.child(0x1000 + static_cast<std::uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(
          shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }

    double obj_sum = 0.0;
    int batches = 0;
    for (int start = 0; start + 2 <= n; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - start);
      if (count < 2) break;  // a trailing singleton has no pairs
      Batch batch;
      batch.inputs.resize(count, task.x.cols());
      batch.inputs_aug.resize(count, task.x.cols());
      for (int r = 0; r < count; ++r) {
        batch.inputs.row(r) = task.x.row(order[start + r]);
        batch.inputs_aug.row(r) = task.x_aug.row(order[start + r]);
      }

      std::vector<Eigen::MatrixXd> grads;
      double objective = 0.0;
      if (cfg.variant == VariantKind::kBackpropAlpha) {
        ALPHACL_TRY_ASSIGN(g, composite_energy_gradient(res.encoder, batch,
                                                        cfg.loss));
        grads = std::move(g);
        ALPHACL_TRY_ASSIGN(z, encode(res.encoder, batch.inputs));
        ALPHACL_TRY_ASSIGN(z_aug, encode(res.encoder, batch.inputs_aug));
        ALPHACL_TRY_ASSIGN(d, pairwise_distances(z, z_aug));
        RegularizerSpec reg{RegKind::kEntropy, cfg.loss.tau, 2.0, {}};
        ALPHACL_TRY_ASSIGN(pi, alpha_entropy(costs_from_distances(d), reg));
        ALPHACL_TRY_ASSIGN(e, energy_from_distances(pi, d));
        objective = e;
      } else {
        ALPHACL_TRY_ASSIGN(trace, encoder_forward_pair(res.encoder, batch));
        ALPHACL_TRY_ASSIGN(bg,
                           batch_output_gradient(cfg, trace.main.head_out,
                                                 trace.aug.head_out));
        ALPHACL_TRY_ASSIGN(g, encoder_backward_pair(res.encoder, trace,
                                                    bg.g.g, bg.g.g_aug));
        grads = std::move(g);
        objective = bg.objective;
      }

      if (cfg.optimizer == OptimizerKind::kSgd) {
        for (std::size_t l = 0; l < grads.size(); ++l) {
          res.encoder.weights[l] += cfg.lr * grads[l];
        }
      } else {
        ++adam.t;
        const double bc1 = 1.0 - std::pow(cfg.beta1, adam.t);
        const double bc2 = 1.0 - std::pow(cfg.beta2, adam.t);
        for (std::size_t l = 0; l < grads.size(); ++l) {
          adam.m[l] = cfg.beta1 * adam.m[l] + (1.0 - cfg.beta1) * grads[l];
          adam.v[l] = cfg.beta2 * adam.v[l] +
                      (1.0 - cfg.beta2) * grads[l].cwiseProduct(grads[l]);
          const Eigen::MatrixXd mhat = adam.m[l] / bc1;
          const Eigen::MatrixXd vhat = adam.v[l] / bc2;
          res.encoder.weights[l].array() +=
              cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.adam_eps);
        }
      }
      ++res.steps;
      obj_sum += objective;
      ++batches;

      if (!all_finite(res.encoder.weights)) {
        return Error{Errc::kNoConvergence,
                     "weights diverged at step " + std::to_string(res.steps)};
      }
      if (cfg.snapshot_every > 0 && res.steps % cfg.snapshot_every == 0) {
        res.snapshots.push_back(res.encoder.weights);
      }
    }
    res.log.push_back(EpochLog{epoch, batches > 0 ? obj_sum / batches : 0.0});
  }
  return res;
}

namespace {

Result<double> probe_on_features(const Eigen::MatrixXd& features,
                                 const Eigen::VectorXi& labels, int classes,
                                 double ridge, std::uint64_t split_salt) {
  const Eigen::Index n = features.rows();
  if (labels.size() != n || n < 2) {
    return Error{Errc::kShapeMismatch, "features/labels inconsistent"};
  }
  if (classes < 2) return Error{Errc::kInvalidConfig, "need >= 2 classes"};

  // Seed-stable 80/20 split by hashing the sample index.
  std::vector<bool> is_train(static_cast<std::size_t>(n));
  Eigen::Index n_train = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool t =
        Rng::mix(split_salt ^ static_cast<std::uint64_t>(i)) % 5 != 0;
    is_train[static_cast<std::size_t>(i)] = t;
    n_train += t ? 1 : 0;
  }
  if (n_train == 0 || n_train == n) {
    return Error{Errc::kInvalidConfig, "degenerate probe split"};
  }

  const Eigen::Index p = features.cols() + 1;  // + bias column
  Eigen::MatrixXd phi(n_train, p);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n_train, classes);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!is_train[static_cast<std::size_t>(i)]) continue;
    phi.row(r).head(features.cols()) = features.row(i);
    phi(r, p - 1) = 1.0;
    const int c = labels(i);
    if (c < 0 || c >= classes) {
      return Error{Errc::kInvalidConfig, "label out of range"};
    }
    y(r, c) = 1.0;
    ++r;
  }

  const Eigen::MatrixXd a =
      phi.transpose() * phi +
      ridge * Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd w = a.ldlt().solve(phi.transpose() * y);

  Eigen::Index correct = 0, total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (is_train[static_cast<std::size_t>(i)]) continue;
    Eigen::RowVectorXd f(p);
    f.head(features.cols()) = features.row(i);
    f(p - 1) = 1.0;
    Eigen::Index pred;
    (f * w).maxCoeff(&pred);
    correct += pred == labels(i) ? 1 : 0;
    ++total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

Result<double> linear_probe(const Encoder& enc, const TaskData& task,
                            int classes, double ridge,
                            std::uint64_t split_salt) {
  ALPHACL_TRY_ASSIGN(emb, encode(enc, task.x));
  return probe_on_features(emb, task.labels, classes, ridge, split_salt);
}

Result<double> raw_input_probe(const TaskData& task, int classes, double ridge,
                               std::uint64_t split_salt) {
  return probe_on_features(task.x, task.labels, classes, ridge, split_salt);
}

}  // namespace alphacl
