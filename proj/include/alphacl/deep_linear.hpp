#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "alphacl/importance.hpp"
#include "alphacl/result.hpp"
#include "alphacl/rng.hpp"

namespace alphacl {

// Constraint projection applied after each Euler step of the deep linear
// energy flow.
enum class FlowNorm {
  kNone,       // unconstrained (balancedness studies)
  kFrobenius,  // ||W_l||_F = 1 per layer
  kPerFilter,  // rows of W_1..W_{L-1} have norm 1/sqrt(n_l); W_L Frobenius
};

struct DeepLinState {
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: n_{l+1} x n_l
};

// Input-space contrastive covariance X_alpha = C_alpha[x, x].
Result<Eigen::MatrixXd> build_x_alpha(const PairImportance& pi,
                                      const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& x_aug);

// 2E = tr(W X W^T) for the end-to-end product W = W_L ... W_1.
Result<double> flow_energy2(const DeepLinState& state,
                            const Eigen::MatrixXd& x_alpha);

// One explicit Euler step of
//   dW_l/dt = (W_{>l})^T W_{>l} W_l (W_{<l} X W_{<l}^T),
// all layer velocities computed from the pre-step weights, followed by the
// constraint projection.
Result<DeepLinState> flow_step(const DeepLinState& state,
                               const Eigen::MatrixXd& x_alpha, double eta,
                               FlowNorm norm);

Result<DeepLinState> project_flow_state(DeepLinState state, FlowNorm norm);

struct FlowOptions {
  double eta = 1e-2;
  long max_steps = 50000;
  double tol = 1e-10;  // stop when |2E_t - 2E_{t-1}| < tol
  FlowNorm norm = FlowNorm::kFrobenius;
  bool backtracking = true;  // halve eta on any 2E decrease (constrained)
  int record_every = 1;
};

struct LayerSpectrum {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

struct FlowTrace {
  std::vector<long> steps;
  std::vector<double> energy2;
  std::vector<std::vector<LayerSpectrum>> spectra;  // per recorded step, per layer
  std::vector<double> balance_drift;  // max-layer drift vs initial state
};

struct FlowResult {
  DeepLinState state;
  FlowTrace trace;
  bool converged = false;
  long steps_taken = 0;
  double final_eta = 0.0;
  double final_energy2 = 0.0;
};

Result<FlowResult> run_flow(const DeepLinState& init,
                            const Eigen::MatrixXd& x_alpha,
                            const FlowOptions& opts);

// Per-interface drift ||(W_l W_l^T - W_{l+1}^T W_{l+1})(now) - (init)||_F;
// conserved by the unconstrained continuous flow.
std::vector<double> balancedness_residual(const DeepLinState& now,
                                          const DeepLinState& init);

// Rank-1 alignment diagnostics. reference_direction, when given, is the
// input-space direction the product should align with (top eigenvector of
// X_alpha from an independent eigensolver).
struct AlignmentReport {
  std::vector<double> sigma_ratio;  // sigma2/sigma1 per layer
  double product_sigma_ratio = 0.0;
  double cos_to_reference = 0.0;  // |cos| between top right SV of product and ref
  bool top_hypothesis_ok = false; // distinct top eigenvalue of (W_{>1})^T W_{>1}
  double per_filter_max_dev = 0.0;  // max | |row_norm| - 1/sqrt(n_l) |, l < L
};

Result<AlignmentReport> check_alignment(
    const DeepLinState& state,
    const std::optional<Eigen::VectorXd>& reference_direction);

// Gaussian init projected onto the constraint set. dims = {n_0, ..., n_L}.
Result<DeepLinState> random_flow_init(Rng& rng, const std::vector<int>& dims,
                                      FlowNorm norm);

}  // namespace alphacl
