#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "alphacl/distances.hpp"
#include "alphacl/importance.hpp"
#include "alphacl/result.hpp"
#include "alphacl/rng.hpp"

namespace alphacl {

// Orthogonal-mode mixture data: every sample is a positive multiple of a
// standard basis vector, x_i = a_i e_{m(i)}, and its pair is a positive
// rescaling x'_i = gamma_i x_i. Every mode must be covered.
struct MixtureConfig {
  int modes = 4;
  int samples = 16;
  double amp_lo = 0.5, amp_hi = 1.5;      // a_i
  double gamma_lo = 0.5, gamma_hi = 1.5;  // gamma_i
};

Result<Batch> generate_mixture(const MixtureConfig& cfg, Rng& rng);

struct MixtureCheck {
  bool one_hot_nonneg = false;  // every sample a nonneg multiple of a basis vector
  bool full_coverage = false;   // every coordinate hit by some sample
  bool pairs_scaled = false;    // x'_i = gamma_i x_i with gamma_i > 0
};

MixtureCheck check_mixture(const Batch& batch);

// Two-layer net: hidden = relu(W1 x), out = W2 hidden, with W1 >= 0 and both
// layers on unit Frobenius spheres.
struct Relu2State {
  Eigen::MatrixXd w1;  // hidden x modes, entrywise >= 0
  Eigen::MatrixXd w2;  // out x hidden
};

Result<Relu2State> random_relu2_init(Rng& rng, int modes, int hidden,
                                     int out);

// hidden activations and outputs for a batch (rows = samples).
Result<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> relu2_forward(
    const Relu2State& state, const Eigen::MatrixXd& x);

// Shared post-step projection: clamp W1 negatives to exact 0, snap entries
// <= sticky_eps to exact 0, then Frobenius-normalize both layers.
Result<Relu2State> project_relu2(Relu2State state, double sticky_eps = 1e-12);

// 2E of the equivalent linear net, tr(W2 W1 X W1^T W2^T); on the nonnegative
// orthant with mixture data this equals the ReLU network's energy.
Result<double> relu2_energy2(const Relu2State& state,
                             const Eigen::MatrixXd& x_alpha);

// Sticky linear step: velocities
//   V1 = (W2^T W2 W1 X) masked by [w1 > 0],  V2 = W2 (W1 X W1^T),
// Euler update, then the shared projection.
Result<Relu2State> sticky_step(const Relu2State& state,
                               const Eigen::MatrixXd& x_alpha, double eta,
                               double sticky_eps = 1e-12);

// True ReLU gradient step: frozen-alpha energy ascent through the actual
// ReLU network (gates from forward pre-activations), then the same
// projection. On mixture data this must match sticky_step entrywise.
Result<Relu2State> relu_gradient_step(const Relu2State& state,
                                      const Batch& batch,
                                      const PairImportance& pi, double eta,
                                      double sticky_eps = 1e-12);

// Single-hidden-node experiment: under the sticky dynamics a one-node first
// layer converges to a standard basis vector.
struct OneNodeResult {
  Eigen::VectorXd w;       // final first-layer row
  int winner_mode = -1;    // argmax coordinate
  double dist_to_basis = 0.0;
  bool converged = false;
  long steps = 0;
};

Result<OneNodeResult> one_node_run(Rng& rng, int modes, int samples,
                                   double eta, long max_steps);

// Converged-state classification: either W1 is rank-1 concentrated on a
// single mode, or it has rank >= 2. A rank-1 state spread over several modes
// contradicts the local-optimality structure and is flagged.
enum class DiversityBranch { kRank1SingleMode, kHigherRank };

struct DiversityReport {
  DiversityBranch branch = DiversityBranch::kRank1SingleMode;
  int mode = -1;            // concentrated mode for the rank-1 branch
  int rank = 0;             // numerical rank of W1
  double sigma_ratio = 0.0; // sigma2/sigma1 of W1
  double energy2 = 0.0;
  bool violation = false;   // rank-1 but multi-mode support
};

Result<DiversityReport> diversity_classify(const Relu2State& state,
                                           const Eigen::MatrixXd& x_alpha,
                                           double rank_tol = 1e-6,
                                           double support_tol = 1e-6);

// Structure of the input covariance on mixture data: strictly negative
// off-diagonal entries, and a top eigenvector of mixed signs. Hypothesis
// violations (non-mixture batch, non-positive alpha) produce a skipped
// report rather than a failure.
struct StructureReport {
  bool checked = false;
  std::string skip_reason;
  bool offdiag_negative = false;
  double max_offdiag = 0.0;
  bool eigvec_mixed_signs = false;
  double min_entry = 0.0, max_entry = 0.0;
};

Result<StructureReport> xalpha_structure_check(const PairImportance& pi,
                                               const Batch& batch);

}  // namespace alphacl
