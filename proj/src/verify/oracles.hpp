#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "alphacl/distances.hpp"
#include "alphacl/encoder.hpp"
#include "alphacl/importance.hpp"
#include "alphacl/rng.hpp"

// Reference implementations kept deliberately independent of the library
// paths they check: plain loops, no shared helpers, brute-force search.
namespace alphacl::verify {

// Central finite differences with h = 1e-6 * max(1, |x|).
double fd_step(double x);
double central_diff(const std::function<double(double)>& f, double x);

// Relative/absolute closeness used for all derivative comparisons.
bool fd_close(double analytic, double numeric, double rel = 1e-5,
              double abs_tol = 1e-7);

// Entrywise central differences of a scalar function of a matrix.
Eigen::MatrixXd fd_matrix_gradient(
    const Eigen::MatrixXd& x,
    const std::function<double(const Eigen::MatrixXd&)>& f);

// Entrywise central differences in one encoder layer's weights.
Eigen::MatrixXd fd_weight_gradient(
    const Encoder& enc, std::size_t layer,
    const std::function<double(const Encoder&)>& f);

// Contrastive covariance by plain quadruple loops over scalar entries.
Eigen::MatrixXd brute_force_cov(const Eigen::MatrixXd& alpha,
                                const Eigen::MatrixXd& a,
                                const Eigen::MatrixXd& a_aug,
                                const Eigen::MatrixXd& b,
                                const Eigen::MatrixXd& b_aug);

// InfoNCE in its per-anchor softmax form, evaluated with log-sum-exp:
//   L = -tau * sum_i log( exp(-intra_i/tau) /
//         (eps * exp(-intra_i/tau) + sum_{j!=i} exp(-cross_ij/tau)) ).
double infonce_softmax_loss(double tau, double eps, const DistanceSet& d);

// Row-softmax importance over cross distances (the closed form the entropy
// solver must reproduce at unit budget).
Eigen::MatrixXd softmax_alpha(const DistanceSet& d, double tau);

// Exhaustive minimization over the 2-simplex {a >= 0, sum a = 1} in R^3:
// coarse grid then local refinement around the best cell.
struct SimplexGridResult {
  Eigen::Vector3d alpha;
  double value;
};
SimplexGridResult grid_min_simplex3(
    const std::function<double(const Eigen::Vector3d&)>& f,
    double coarse_step = 1e-3, double refine_step = 1e-5);

// Penalized linear objectives the regularized solvers minimize.
double inverse_objective(const Eigen::Vector3d& costs, double tau,
                         double gamma, const Eigen::Vector3d& alpha);
double square_objective(const Eigen::Vector3d& costs, double tau,
                        const Eigen::Vector3d& alpha);

// Random symmetric matrix with top eigenvalue in [lmax_lo, lmax_hi] and a
// spectral gap of at least `gap` below it.
Eigen::MatrixXd random_symmetric_with_gap(Rng& rng, int n, double gap,
                                          double lmax_lo, double lmax_hi);

// Random batch halves with standard normal entries.
void random_embeddings(Rng& rng, int n, int k, Eigen::MatrixXd& z,
                       Eigen::MatrixXd& z_aug);

}  // namespace alphacl::verify
