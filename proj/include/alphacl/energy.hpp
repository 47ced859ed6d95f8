#pragma once

#include <Eigen/Dense>
#include <string>

#include "alphacl/distances.hpp"
#include "alphacl/importance.hpp"
#include "alphacl/result.hpp"

namespace alphacl {

// Contrastive covariance of two paired signals under importance weights:
//   C[a, b] = sum_i sum_{j != i} alpha(i,j) (a_i - a_j)(b_i - b_j)^T
//           - sum_i beta_i (a_i - a'_i)(b_i - b'_i)^T
// Row sums beta are recomputed from alpha here; any beta cached in the
// PairImportance is ignored.
Result<Eigen::MatrixXd> contrastive_cov(const PairImportance& pi,
                                        const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& a_aug,
                                        const Eigen::MatrixXd& b,
                                        const Eigen::MatrixXd& b_aug);

// Energy E = (1/2) tr C[z, z], computed through the covariance.
Result<double> energy(const PairImportance& pi, const Eigen::MatrixXd& z,
                      const Eigen::MatrixXd& z_aug);

// Same quantity straight from distances: sum_{i != j} alpha(i,j) *
// (cross(i,j) - intra(i)). The two routes must agree; tests pin that.
Result<double> energy_from_distances(const PairImportance& pi,
                                     const DistanceSet& d);

// Matrix to CSV plus an eigenvalue sidecar at <path>.eigs.csv (descending),
// for symmetric matrices such as the input-space covariance X_alpha.
Status write_symmetric_with_spectrum_csv(const std::string& path,
                                         const Eigen::MatrixXd& m);

}  // namespace alphacl
