#pragma once

#include <Eigen/Dense>
#include <vector>

#include "alphacl/distances.hpp"
#include "alphacl/importance.hpp"
#include "alphacl/result.hpp"
#include "alphacl/rng.hpp"

namespace alphacl {

// Dense feed-forward encoder. Activations are reversible in the sense
// h(x) = h'(x) * x (identity, ReLU with gate 0 at exactly 0), which makes the
// forward pass expressible as data-dependent diagonal gates times linear maps.
enum class Activation { kLinear, kRelu };

// Output head applied after the last layer, per sample.
enum class Head { kNone, kL2Normalize, kLayerNorm };

struct Encoder {
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: n_{l+1} x n_l
  std::vector<Activation> activations;   // one per layer
  Head head = Head::kNone;
};

Result<Unit> validate_encoder(const Encoder& enc);

// Gaussian init scaled by 1/sqrt(fan_in), deterministic under the generator.
Encoder make_encoder(Rng& rng, const std::vector<int>& dims,
                     Activation hidden_act, Head head);

// Everything the backward pass needs. acts[0] is the input batch; gates hold
// h'(pre) per layer; head_out rows are the final embeddings. For the
// normalizing heads, head_norms carries the per-sample normalizer r so the
// (symmetric) head Jacobian can be applied implicitly.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> acts;
  std::vector<Eigen::MatrixXd> gates;
  Eigen::MatrixXd head_out;
  Eigen::VectorXd head_norms;
};

Result<ForwardTrace> encoder_forward(const Encoder& enc,
                                     const Eigen::MatrixXd& x);

// head_out only.
Result<Eigen::MatrixXd> encode(const Encoder& enc, const Eigen::MatrixXd& x);

// Pull a gradient at the head output back to per-layer weight gradients.
Result<std::vector<Eigen::MatrixXd>> encoder_backward(
    const Encoder& enc, const ForwardTrace& trace,
    const Eigen::MatrixXd& g_head);

// Apply the head Jacobian (symmetric, annihilates the head input) to a batch
// of output-side gradients. Exposed for direct property tests.
Result<Eigen::MatrixXd> head_pullback(const Encoder& enc,
                                      const ForwardTrace& trace,
                                      const Eigen::MatrixXd& g_head);

struct PairTrace {
  ForwardTrace main;
  ForwardTrace aug;
};

Result<PairTrace> encoder_forward_pair(const Encoder& enc, const Batch& batch);

// Weight gradients summed over both batch halves.
Result<std::vector<Eigen::MatrixXd>> encoder_backward_pair(
    const Encoder& enc, const PairTrace& trace, const Eigen::MatrixXd& g,
    const Eigen::MatrixXd& g_aug);

// Gradients of the family loss / the frozen-alpha energy with respect to the
// embeddings (z, z'):
//   dL/dz_i  = sum_{j!=i} alpha_ij (z_j - z'_i) + sum_{j!=i} alpha_ji (z_j - z_i)
//   dL/dz'_i = beta_i (z'_i - z_i)
//   dE/dz_i  = sum_{j!=i} (alpha_ij + alpha_ji)(z_i - z_j) - beta_i (z_i - z'_i)
//   dE/dz'_i = beta_i (z_i - z'_i)
// With alpha = phi' * psi' these cancel exactly: dL/d(.) = -dE/d(.).
struct PairGrad {
  Eigen::MatrixXd g;      // N x k, gradient in z
  Eigen::MatrixXd g_aug;  // N x k, gradient in z'
};

Result<PairGrad> grad_loss_wrt_outputs(const LossSpec& spec,
                                       const Eigen::MatrixXd& z,
                                       const Eigen::MatrixXd& z_aug);

Result<PairGrad> grad_energy_wrt_outputs(const PairImportance& pi,
                                         const Eigen::MatrixXd& z,
                                         const Eigen::MatrixXd& z_aug);

// Max-norm residual of dL/dz + dE/dz over both halves, with alpha induced by
// the loss at the given embeddings. kink_flagged reports whether any psi
// argument fell inside the non-smooth exclusion zone (hinge losses).
struct IdentityReport {
  double residual = 0.0;
  bool kink_flagged = false;
};

Result<IdentityReport> verify_gradient_identity(const LossSpec& spec,
                                                const Eigen::MatrixXd& z,
                                                const Eigen::MatrixXd& z_aug,
                                                double kink_zone = 1e-4);

// Per-layer gradient of the loss L(encoder(x), encoder(x')) in the weights.
Result<std::vector<Eigen::MatrixXd>> loss_gradient(const Encoder& enc,
                                                   const Batch& batch,
                                                   const LossSpec& spec);

// Per-layer ascent gradient of the frozen-alpha energy, alpha produced by
// `source` from the current embeddings.
Result<std::vector<Eigen::MatrixXd>> energy_ascent_gradient(
    const Encoder& enc, const Batch& batch, const AlphaSource& source);

// One coordinate-ascent step: solve for alpha at the current embeddings,
// freeze it, take a gradient-ascent step on the energy.
Result<Encoder> alpha_cl_step(const Encoder& enc, const Batch& batch,
                              const AlphaSource& source, double eta);

// Full gradient of E_{alpha(theta)} where alpha is the InfoNCE softmax
// (eps = 0): the frozen-alpha term plus the alpha-path term
//   sum_{l!=k} (g_kl + g_lk)(z_k - z_l),
//   g_il = alpha_il (s_i - c_il) / tau,  s_i = sum_j alpha_ij c_ij.
// Other losses are rejected as unsupported.
Result<std::vector<Eigen::MatrixXd>> composite_energy_gradient(
    const Encoder& enc, const Batch& batch, const LossSpec& spec);

Result<Encoder> backprop_through_alpha_step(const Encoder& enc,
                                            const Batch& batch,
                                            const LossSpec& spec, double eta);

}  // namespace alphacl
