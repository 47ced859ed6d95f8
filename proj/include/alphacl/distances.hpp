#pragma once

#include <Eigen/Dense>
#include <optional>

#include "alphacl/result.hpp"

namespace alphacl {

// A batch of N anchor/augmentation pairs, one sample per row. `outputs` holds
// embeddings when an encoder has been applied; raw-input consumers ignore it.
struct Batch {
  Eigen::MatrixXd inputs;      // N x d
  Eigen::MatrixXd inputs_aug;  // N x d
  std::optional<Eigen::MatrixXd> outputs;      // N x k
  std::optional<Eigen::MatrixXd> outputs_aug;  // N x k
};

// Half-square distances of a batch of embeddings:
//   cross(i, j) = ||z_i - z_j||^2 / 2   (symmetric, zero diagonal)
//   intra(i)    = ||z_i - z'_i||^2 / 2
// The factor 1/2 is part of the definition used throughout this library.
struct DistanceSet {
  Eigen::VectorXd intra;  // N
  Eigen::MatrixXd cross;  // N x N
};

Result<DistanceSet> pairwise_distances(const Eigen::MatrixXd& z,
                                       const Eigen::MatrixXd& z_aug);

// Convenience overload reading Batch::outputs (falling back to inputs when no
// encoder has run).
Result<DistanceSet> pairwise_distances(const Batch& batch);

}  // namespace alphacl
