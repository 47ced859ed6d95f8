#include "alphacl/distances.hpp"

namespace alphacl {

Result<DistanceSet> pairwise_distances(const Eigen::MatrixXd& z,
                                       const Eigen::MatrixXd& z_aug) {
  const Eigen::Index n = z.rows();
  if (z_aug.rows() != n || z_aug.cols() != z.cols()) {
    return Error{Errc::kShapeMismatch, "z and z_aug shapes differ"};
  }
  if (n < 2) return Error{Errc::kShapeMismatch, "need at least 2 samples"};

  DistanceSet d;
  d.intra.resize(n);
  d.cross.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.intra(i) = 0.5 * (z.row(i) - z_aug.row(i)).squaredNorm();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 0.5 * (z.row(i) - z.row(j)).squaredNorm();
      d.cross(i, j) = v;
      d.cross(j, i) = v;
    }
  }
  return d;
}

Result<DistanceSet> pairwise_distances(const Batch& batch) {
  if (batch.outputs && batch.outputs_aug) {
    return pairwise_distances(*batch.outputs, *batch.outputs_aug);
  }
  return pairwise_distances(batch.inputs, batch.inputs_aug);
}

}  // namespace alphacl
