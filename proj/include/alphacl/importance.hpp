#pragma once

#include <Eigen/Dense>
#include <string>

#include "alphacl/distances.hpp"
#include "alphacl/loss.hpp"
#include "alphacl/result.hpp"

namespace alphacl {

// Pairwise importance weights alpha(i, j) >= 0 over ordered pairs (i != j),
// zero diagonal. beta is the row sum, the total weight anchor i places on its
// positive pair.
struct PairImportance {
  Eigen::MatrixXd alpha;  // N x N
  Eigen::VectorXd beta;   // N
};

// Per-row cost c(i, j) = cross(i, j) - intra(i): how much farther negative j
// sits from anchor i than the positive does. Solvers minimize
// sum_j c_j * alpha_j - regularizer(alpha) subject to the row budget.
Eigen::MatrixXd costs_from_distances(const DistanceSet& d);

enum class RegKind { kEntropy, kInverse, kSquare };

struct RegularizerSpec {
  RegKind kind = RegKind::kEntropy;
  double tau = 1.0;    // regularizer strength, > 0
  double gamma = 2.0;  // inverse-power exponent, > 1 (kInverse only)
  // Per-row budgets; empty means all ones. Only the entropy solver accepts
  // budgets != 1 (the closed form scales); inverse/square are defined on the
  // probability simplex.
  Eigen::VectorXd row_budget;
};

// alpha induced by a loss: alpha(i, j) = phi'(xi_i) * psi'(d2_i - d2_ij).
Result<PairImportance> alpha_from_gradient(const LossSpec& spec,
                                           const DistanceSet& d);

// Entropy regularizer, closed form: alpha_i = budget_i * softmax(-c_i / tau).
Result<PairImportance> alpha_entropy(const Eigen::MatrixXd& costs,
                                     const RegularizerSpec& reg);

// Inverse-power regularizer (gamma > 1): alpha_j = (tau / (c_j + mu))^(1/gamma)
// with mu > -min_j c_j found by bisection on the budget constraint. Output is
// strictly positive.
Result<PairImportance> alpha_inverse(const Eigen::MatrixXd& costs,
                                     const RegularizerSpec& reg);

// Squared-norm regularizer: alpha_j = max(0, (mu - c_j) / tau), i.e. the
// Euclidean projection of -c / tau onto the simplex (sort-and-threshold).
Result<PairImportance> alpha_square(const Eigen::MatrixXd& costs,
                                    const RegularizerSpec& reg);

Result<PairImportance> solve_alpha(const Eigen::MatrixXd& costs,
                                   const RegularizerSpec& reg);

// Direct assignment: alpha(i, j) proportional to exp(-d_ij^p / tau) where
// d_ij is a distance derived from the half-square cross distances.
enum class DirectDistance {
  kEuclidean,       // d_ij = ||z_i - z_j||_2 = sqrt(2 * cross(i, j))
  kHalfSquareRoot,  // d_ij = sqrt(cross(i, j))
};

struct DirectAlphaSpec {
  double p = 4.0;
  double tau = 0.5;
  bool normalized = true;  // per-row softmax vs bare exponentials
  DirectDistance convention = DirectDistance::kEuclidean;
};

Result<PairImportance> alpha_direct(const DistanceSet& d,
                                    const DirectAlphaSpec& spec);

// One handle over every way of producing alpha, for step functions and the
// trainer.
struct AlphaSource {
  enum class Kind { kFromGradient, kEntropy, kInverse, kSquare, kDirect };
  Kind kind = Kind::kFromGradient;
  LossSpec loss;          // kFromGradient
  RegularizerSpec reg;    // kEntropy / kInverse / kSquare
  DirectAlphaSpec direct; // kDirect
};

Result<PairImportance> compute_alpha(const AlphaSource& source,
                                     const DistanceSet& d);

// Row sums vs the feasible budget tau_eff^{-1} * xi_i * phi'(xi_i) implied by
// an exponential psi. Defined for the exp-family catalog entries only.
struct FeasibilityReport {
  Eigen::VectorXd target;  // feasible budget per row
  Eigen::VectorXd beta;    // actual row sums
  double max_budget_residual = 0.0;
  double min_alpha = 0.0;
  bool nonnegative = false;
};

Result<FeasibilityReport> check_feasible(const PairImportance& pi,
                                         const LossSpec& spec,
                                         const Eigen::VectorXd& xi);

// alpha matrix as CSV (17 significant digits).
Status write_alpha_csv(const std::string& path, const PairImportance& pi);

}  // namespace alphacl
