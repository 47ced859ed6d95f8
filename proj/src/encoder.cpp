#include "alphacl/encoder.hpp"

#include <cmath>

namespace alphacl {
namespace {

constexpr double kNormFloor = 1e-150;

Result<Unit> check_batch(const Batch& batch) {
  if (batch.inputs.rows() != batch.inputs_aug.rows() ||
      batch.inputs.cols() != batch.inputs_aug.cols()) {
    return Error{Errc::kShapeMismatch, "batch halves differ in shape"};
  }
  if (batch.inputs.rows() < 2) {
    return Error{Errc::kShapeMismatch, "need at least 2 samples"};
  }
  return Unit{};
}

}  // namespace

Result<Unit> validate_encoder(const Encoder& enc) {
  if (enc.weights.empty()) {
    return Error{Errc::kInvalidConfig, "encoder has no layers"};
  }
  if (enc.activations.size() != enc.weights.size()) {
    return Error{Errc::kInvalidConfig, "one activation per layer required"};
  }
  for (std::size_t l = 0; l + 1 < enc.weights.size(); ++l) {
    if (enc.weights[l + 1].cols() != enc.weights[l].rows()) {
      return Error{Errc::kShapeMismatch,
                   "layer " + std::to_string(l + 1) + " input width mismatch"};
    }
  }
  return Unit{};
}

Encoder make_encoder(Rng& rng, const std::vector<int>& dims,
                     Activation hidden_act, Head head) {
  Encoder enc;
  enc.head = head;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = scale * rng.normal();
      }
    }
    enc.weights.push_back(std::move(w));
    const bool last = l + 2 == dims.size();
    enc.activations.push_back(last ? Activation::kLinear : hidden_act);
  }
  return enc;
}

Result<ForwardTrace> encoder_forward(const Encoder& enc,
                                     const Eigen::MatrixXd& x) {
  ALPHACL_TRY_ASSIGN(unit, validate_encoder(enc));
  (void)unit;
  if (x.cols() != enc.weights.front().cols()) {
    return Error{Errc::kShapeMismatch, "input width != first layer width"};
  }

  ForwardTrace t;
  t.acts.reserve(enc.weights.size() + 1);
  t.gates.reserve(enc.weights.size());
  t.acts.push_back(x);
  for (std::size_t l = 0; l < enc.weights.size(); ++l) {
    Eigen::MatrixXd pre = t.acts.back() * enc.weights[l].transpose();
    Eigen::MatrixXd gate;
    if (enc.activations[l] == Activation::kLinear) {
      gate = Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    } else {
      // ReLU gate is strict: h'(0) = 0, so h(x) = h'(x) * x holds exactly.
      gate = (pre.array() > 0.0).cast<double>();
    }
    t.acts.push_back(gate.cwiseProduct(pre));
    t.gates.push_back(std::move(gate));
  }

  const Eigen::MatrixXd& z = t.acts.back();
  const Eigen::Index n = z.rows();
  t.head_norms = Eigen::VectorXd::Ones(n);
  switch (enc.head) {
    case Head::kNone:
      t.head_out = z;
      break;
    case Head::kL2Normalize: {
      t.head_out.resize(n, z.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        const double r = z.row(i).norm();
        if (r < kNormFloor) {
          return Error{Errc::kSingular,
                       "zero-norm input to l2 head at row " + std::to_string(i)};
        }
        t.head_norms(i) = r;
        t.head_out.row(i) = z.row(i) / r;
      }
      break;
    }
    case Head::kLayerNorm: {
      t.head_out.resize(n, z.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd centered =
            z.row(i).array() - z.row(i).mean();
        const double r = centered.norm();
        if (r < kNormFloor) {
          return Error{Errc::kSingular,
                       "constant input to layer-norm head at row " +
                           std::to_string(i)};
        }
        t.head_norms(i) = r;
        t.head_out.row(i) = centered / r;
      }
      break;
    }
  }
  return t;
}

Result<Eigen::MatrixXd> encode(const Encoder& enc, const Eigen::MatrixXd& x) {
  ALPHACL_TRY_ASSIGN(t, encoder_forward(enc, x));
  return std::move(t.head_out);
}

Result<Eigen::MatrixXd> head_pullback(const Encoder& enc,
                                      const ForwardTrace& trace,
                                      const Eigen::MatrixXd& g_head) {
  if (g_head.rows() != trace.head_out.rows() ||
      g_head.cols() != trace.head_out.cols()) {
    return Error{Errc::kShapeMismatch, "head gradient shape mismatch"};
  }
  if (enc.head == Head::kNone) return g_head;

  Eigen::MatrixXd g(g_head.rows(), g_head.cols());
  for (Eigen::Index i = 0; i < g_head.rows(); ++i) {
    const Eigen::RowVectorXd y = trace.head_out.row(i);
    const double r = trace.head_norms(i);
    Eigen::RowVectorXd gi = g_head.row(i);
    if (enc.head == Head::kLayerNorm) {
      gi.array() -= gi.mean();  // project out the constant direction
    }
    g.row(i) = (gi - y * (y.dot(g_head.row(i)))) / r;
  }
  return g;
}

Result<std::vector<Eigen::MatrixXd>> encoder_backward(
    const Encoder& enc, const ForwardTrace& trace,
    const Eigen::MatrixXd& g_head) {
  ALPHACL_TRY_ASSIGN(g_out, head_pullback(enc, trace, g_head));

  std::vector<Eigen::MatrixXd> grads(enc.weights.size());
  Eigen::MatrixXd g = std::move(g_out);
  for (std::size_t l = enc.weights.size(); l-- > 0;) {
    const Eigen::MatrixXd g_pre = g.cwiseProduct(trace.gates[l]);
    grads[l] = g_pre.transpose() * trace.acts[l];
    if (l > 0) g = g_pre * enc.weights[l];
  }
  return grads;
}

Result<PairTrace> encoder_forward_pair(const Encoder& enc,
                                       const Batch& batch) {
  ALPHACL_TRY_ASSIGN(unit, check_batch(batch));
  (void)unit;
  ALPHACL_TRY_ASSIGN(main, encoder_forward(enc, batch.inputs));
  ALPHACL_TRY_ASSIGN(aug, encoder_forward(enc, batch.inputs_aug));
  return PairTrace{std::move(main), std::move(aug)};
}

Result<std::vector<Eigen::MatrixXd>> encoder_backward_pair(
    const Encoder& enc, const PairTrace& trace, const Eigen::MatrixXd& g,
    const Eigen::MatrixXd& g_aug) {
  ALPHACL_TRY_ASSIGN(gm, encoder_backward(enc, trace.main, g));
  ALPHACL_TRY_ASSIGN(ga, encoder_backward(enc, trace.aug, g_aug));
  for (std::size_t l = 0; l < gm.size(); ++l) gm[l] += ga[l];
  return gm;
}

namespace {

Result<Unit> check_embeddings(const Eigen::MatrixXd& z,
                              const Eigen::MatrixXd& z_aug) {
  if (z.rows() != z_aug.rows() || z.cols() != z_aug.cols() || z.rows() < 2) {
    return Error{Errc::kShapeMismatch, "embedding halves inconsistent"};
  }
  return Unit{};
}

}  // namespace

Result<PairGrad> grad_loss_wrt_outputs(const LossSpec& spec,
                                       const Eigen::MatrixXd& z,
                                       const Eigen::MatrixXd& z_aug) {
  ALPHACL_TRY_ASSIGN(unit, check_embeddings(z, z_aug));
  (void)unit;
  ALPHACL_TRY_ASSIGN(d, pairwise_distances(z, z_aug));
  ALPHACL_TRY_ASSIGN(pi, alpha_from_gradient(spec, d));

  const Eigen::Index n = z.rows();
  PairGrad out;
  out.g.setZero(n, z.cols());
  out.g_aug.setZero(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      beta += pi.alpha(i, j);
      out.g.row(i) += pi.alpha(i, j) * (z.row(j) - z_aug.row(i));
      out.g.row(i) += pi.alpha(j, i) * (z.row(j) - z.row(i));
    }
    out.g_aug.row(i) = beta * (z_aug.row(i) - z.row(i));
  }
  return out;
}

Result<PairGrad> grad_energy_wrt_outputs(const PairImportance& pi,
                                         const Eigen::MatrixXd& z,
                                         const Eigen::MatrixXd& z_aug) {
  ALPHACL_TRY_ASSIGN(unit, check_embeddings(z, z_aug));
  (void)unit;
  const Eigen::Index n = z.rows();
  if (pi.alpha.rows() != n || pi.alpha.cols() != n) {
    return Error{Errc::kShapeMismatch, "alpha shape does not match batch"};
  }
  PairGrad out;
  out.g.setZero(n, z.cols());
  out.g_aug.setZero(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      beta += pi.alpha(i, j);
      out.g.row(i) +=
          (pi.alpha(i, j) + pi.alpha(j, i)) * (z.row(i) - z.row(j));
    }
    out.g.row(i) -= beta * (z.row(i) - z_aug.row(i));
    out.g_aug.row(i) = beta * (z.row(i) - z_aug.row(i));
  }
  return out;
}

Result<IdentityReport> verify_gradient_identity(const LossSpec& spec,
                                                const Eigen::MatrixXd& z,
                                                const Eigen::MatrixXd& z_aug,
                                                double kink_zone) {
  ALPHACL_TRY_ASSIGN(d, pairwise_distances(z, z_aug));
  ALPHACL_TRY_ASSIGN(pi, alpha_from_gradient(spec, d));
  ALPHACL_TRY_ASSIGN(gl, grad_loss_wrt_outputs(spec, z, z_aug));
  ALPHACL_TRY_ASSIGN(ge, grad_energy_wrt_outputs(pi, z, z_aug));

  IdentityReport rep;
  rep.residual = std::max((gl.g + ge.g).cwiseAbs().maxCoeff(),
                          (gl.g_aug + ge.g_aug).cwiseAbs().maxCoeff());
  if (spec.kind == LossKind::kTriplet) {
    const Eigen::Index n = z.rows();
    for (Eigen::Index i = 0; i < n && !rep.kink_flagged; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double arg = d.intra(i) - d.cross(i, j);
        if (std::abs(arg + spec.epsilon) <= kink_zone) {
          rep.kink_flagged = true;
          break;
        }
      }
    }
  }
  return rep;
}

Result<std::vector<Eigen::MatrixXd>> loss_gradient(const Encoder& enc,
                                                   const Batch& batch,
                                                   const LossSpec& spec) {
  ALPHACL_TRY_ASSIGN(trace, encoder_forward_pair(enc, batch));
  ALPHACL_TRY_ASSIGN(g, grad_loss_wrt_outputs(spec, trace.main.head_out,
                                              trace.aug.head_out));
  return encoder_backward_pair(enc, trace, g.g, g.g_aug);
}

Result<std::vector<Eigen::MatrixXd>> energy_ascent_gradient(
    const Encoder& enc, const Batch& batch, const AlphaSource& source) {
  ALPHACL_TRY_ASSIGN(trace, encoder_forward_pair(enc, batch));
  ALPHACL_TRY_ASSIGN(
      d, pairwise_distances(trace.main.head_out, trace.aug.head_out));
  ALPHACL_TRY_ASSIGN(pi, compute_alpha(source, d));
  ALPHACL_TRY_ASSIGN(g, grad_energy_wrt_outputs(pi, trace.main.head_out,
                                                trace.aug.head_out));
  return encoder_backward_pair(enc, trace, g.g, g.g_aug);
}

Result<Encoder> alpha_cl_step(const Encoder& enc, const Batch& batch,
                              const AlphaSource& source, double eta) {
  ALPHACL_TRY_ASSIGN(grads, energy_ascent_gradient(enc, batch, source));
  Encoder next = enc;
  for (std::size_t l = 0; l < next.weights.size(); ++l) {
    next.weights[l] += eta * grads[l];
  }
  return next;
}

Result<std::vector<Eigen::MatrixXd>> composite_energy_gradient(
    const Encoder& enc, const Batch& batch, const LossSpec& spec) {
  if (spec.kind != LossKind::kInfoNce || spec.epsilon != 0.0) {
    return Error{Errc::kUnsupported,
                 "backprop through alpha requires the eps=0 softmax form"};
  }
  ALPHACL_TRY_ASSIGN(trace, encoder_forward_pair(enc, batch));
  const Eigen::MatrixXd& z = trace.main.head_out;
  const Eigen::MatrixXd& z_aug = trace.aug.head_out;
  ALPHACL_TRY_ASSIGN(d, pairwise_distances(z, z_aug));

  RegularizerSpec reg;
  reg.kind = RegKind::kEntropy;
  reg.tau = spec.tau;
  const Eigen::MatrixXd costs = costs_from_distances(d);
  ALPHACL_TRY_ASSIGN(pi, alpha_entropy(costs, reg));
  ALPHACL_TRY_ASSIGN(ge, grad_energy_wrt_outputs(pi, z, z_aug));

  // alpha-path sensitivities g_il = alpha_il (s_i - c_il) / tau.
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd gpath(n, n);
  gpath.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) s += pi.alpha(i, j) * costs(i, j);
    }
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l != i) gpath(i, l) = pi.alpha(i, l) * (s - costs(i, l)) / spec.tau;
    }
  }
  PairGrad total = ge;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l == k) continue;
      total.g.row(k) +=
          (gpath(k, l) + gpath(l, k)) * (z.row(k) - z.row(l));
    }
  }
  return encoder_backward_pair(enc, trace, total.g, total.g_aug);
}

Result<Encoder> backprop_through_alpha_step(const Encoder& enc,
                                            const Batch& batch,
                                            const LossSpec& spec, double eta) {
  ALPHACL_TRY_ASSIGN(grads, composite_energy_gradient(enc, batch, spec));
  Encoder next = enc;
  for (std::size_t l = 0; l < next.weights.size(); ++l) {
    next.weights[l] += eta * grads[l];
  }
  return next;
}

}  // namespace alphacl
