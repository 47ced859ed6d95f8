#include "alphacl/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "alphacl/io.hpp"

namespace alphacl {
namespace {

Result<Unit> check_costs(const Eigen::MatrixXd& costs) {
  if (costs.rows() != costs.cols() || costs.rows() < 2) {
    return Error{Errc::kShapeMismatch, "costs must be square, N >= 2"};
  }
  return Unit{};
}

// Budget for row i: empty spec means 1.
Result<double> row_budget(const RegularizerSpec& reg, Eigen::Index n,
                          Eigen::Index i) {
  if (reg.row_budget.size() == 0) return 1.0;
  if (reg.row_budget.size() != n) {
    return Error{Errc::kShapeMismatch, "row_budget length != N"};
  }
  const double b = reg.row_budget(i);
  if (!(b >= 0.0)) return Error{Errc::kInvalidConfig, "row budget < 0"};
  return b;
}

Result<Unit> require_unit_budget(const RegularizerSpec& reg,
                                 const char* which) {
  if (reg.row_budget.size() == 0) return Unit{};
  for (Eigen::Index i = 0; i < reg.row_budget.size(); ++i) {
    if (reg.row_budget(i) != 1.0) {
      return Error{Errc::kInvalidConfig,
                   std::string(which) + " solver requires row budget 1"};
    }
  }
  return Unit{};
}

void fill_beta(PairImportance& pi) {
  pi.beta = pi.alpha.rowwise().sum();
}

}  // namespace

Eigen::MatrixXd costs_from_distances(const DistanceSet& d) {
  const Eigen::Index n = d.cross.rows();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(i, j) = i == j ? 0.0 : d.cross(i, j) - d.intra(i);
    }
  }
  return c;
}

Result<PairImportance> alpha_from_gradient(const LossSpec& spec,
                                           const DistanceSet& d) {
  ALPHACL_TRY_ASSIGN(ev, eval_loss(spec, d));
  const Eigen::Index n = d.cross.rows();
  PairImportance pi;
  pi.alpha.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ALPHACL_TRY_ASSIGN(f, eval_phi(spec, ev.xi(i)));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      ALPHACL_TRY_ASSIGN(p, eval_psi(spec, d.intra(i) - d.cross(i, j)));
      pi.alpha(i, j) = f.deriv * p.deriv;
    }
  }
  fill_beta(pi);
  return pi;
}

Result<PairImportance> alpha_entropy(const Eigen::MatrixXd& costs,
                                     const RegularizerSpec& reg) {
  ALPHACL_TRY_ASSIGN(unit, check_costs(costs));
  (void)unit;
  if (!(reg.tau > 0.0)) return Error{Errc::kInvalidConfig, "tau must be > 0"};
  const Eigen::Index n = costs.rows();
  PairImportance pi;
  pi.alpha.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ALPHACL_TRY_ASSIGN(budget, row_budget(reg, n, i));
    // softmax(-c / tau) over j != i with max subtraction.
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) m = std::max(m, -costs(i, j) / reg.tau);
    }
    double z = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = std::exp(-costs(i, j) / reg.tau - m);
      pi.alpha(i, j) = w;
      z += w;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) pi.alpha(i, j) *= budget / z;
    }
  }
  fill_beta(pi);
  return pi;
}

Result<PairImportance> alpha_inverse(const Eigen::MatrixXd& costs,
                                     const RegularizerSpec& reg) {
  ALPHACL_TRY_ASSIGN(unit, check_costs(costs));
  (void)unit;
  if (!(reg.tau > 0.0)) return Error{Errc::kInvalidConfig, "tau must be > 0"};
  if (!(reg.gamma > 1.0)) {
    return Error{Errc::kInvalidConfig, "gamma must be > 1"};
  }
  ALPHACL_TRY_ASSIGN(u2, require_unit_budget(reg, "inverse"));
  (void)u2;

  const Eigen::Index n = costs.rows();
  const double inv_gamma = 1.0 / reg.gamma;
  PairImportance pi;
  pi.alpha.setZero(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    double cmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) cmin = std::min(cmin, costs(i, j));
    }
    const auto sum_at = [&](double mu) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        s += std::pow(reg.tau / (costs(i, j) + mu), inv_gamma);
      }
      return s;
    };
    // sum_at is strictly decreasing on (-cmin, inf): bracket then bisect.
    double lo = -cmin + 1e-12;
    if (sum_at(lo) < 1.0) {
      return Error{Errc::kNoConvergence,
                   "inverse solver: budget unreachable at bracket edge"};
    }
    double off = std::max(1.0, std::abs(cmin));
    int doublings = 0;
    while (sum_at(lo + off) > 1.0) {
      off *= 2.0;
      if (++doublings > 200) {
        return Error{Errc::kNoConvergence,
                     "inverse solver: no upper bracket found"};
      }
    }
    double hi = lo + off;
    double mu = 0.5 * (lo + hi);
    bool done = false;
    for (int it = 0; it < 200; ++it) {
      mu = 0.5 * (lo + hi);
      const double s = sum_at(mu);
      if (std::abs(s - 1.0) <= 1e-12) {
        done = true;
        break;
      }
      if (s > 1.0) {
        lo = mu;
      } else {
        hi = mu;
      }
    }
    if (!done && std::abs(sum_at(mu) - 1.0) > 1e-12) {
      return Error{Errc::kNoConvergence,
                   "inverse solver: bisection did not reach tolerance"};
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) {
        pi.alpha(i, j) = std::pow(reg.tau / (costs(i, j) + mu), inv_gamma);
      }
    }
  }
  fill_beta(pi);
  return pi;
}

Result<PairImportance> alpha_square(const Eigen::MatrixXd& costs,
                                    const RegularizerSpec& reg) {
  ALPHACL_TRY_ASSIGN(unit, check_costs(costs));
  (void)unit;
  if (!(reg.tau > 0.0)) return Error{Errc::kInvalidConfig, "tau must be > 0"};
  ALPHACL_TRY_ASSIGN(u2, require_unit_budget(reg, "square"));
  (void)u2;

  const Eigen::Index n = costs.rows();
  PairImportance pi;
  pi.alpha.setZero(n, n);
  std::vector<double> y;
  std::vector<double> sorted;
  for (Eigen::Index i = 0; i < n; ++i) {
    y.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) y.push_back(-costs(i, j) / reg.tau);
    }
    // Euclidean projection of y onto the simplex: sort descending, find the
    // largest k keeping y_(k) above the running threshold.
    sorted = y;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double css = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      css += sorted[k];
      const double cand = (css - 1.0) / static_cast<double>(k + 1);
      if (sorted[k] - cand > 0.0) theta = cand;
    }
    std::size_t out = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      pi.alpha(i, j) = std::max(0.0, y[out++] - theta);
    }
  }
  fill_beta(pi);
  return pi;
}

Result<PairImportance> solve_alpha(const Eigen::MatrixXd& costs,
                                   const RegularizerSpec& reg) {
  switch (reg.kind) {
    case RegKind::kEntropy: return alpha_entropy(costs, reg);
    case RegKind::kInverse: return alpha_inverse(costs, reg);
    case RegKind::kSquare: return alpha_square(costs, reg);
  }
  return Error{Errc::kInvalidConfig, "unknown regularizer kind"};
}

Result<PairImportance> alpha_direct(const DistanceSet& d,
                                    const DirectAlphaSpec& spec) {
  const Eigen::Index n = d.cross.rows();
  if (d.cross.cols() != n || n < 2) {
    return Error{Errc::kShapeMismatch, "bad distance set"};
  }
  if (!(spec.tau > 0.0)) return Error{Errc::kInvalidConfig, "tau must be > 0"};
  if (!(spec.p > 0.0)) return Error{Errc::kInvalidConfig, "p must be > 0"};

  PairImportance pi;
  pi.alpha.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Scores s_j = -d_ij^p / tau are <= 0, so the unnormalized exponentials
    // are in (0, 1] and never overflow.
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double half_sq = std::max(0.0, d.cross(i, j));
      const double dist = spec.convention == DirectDistance::kEuclidean
                              ? std::sqrt(2.0 * half_sq)
                              : std::sqrt(half_sq);
      const double s = -std::pow(dist, spec.p) / spec.tau;
      pi.alpha(i, j) = s;
      m = std::max(m, s);
    }
    if (spec.normalized) {
      double z = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        pi.alpha(i, j) = std::exp(pi.alpha(i, j) - m);
        z += pi.alpha(i, j);
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) pi.alpha(i, j) /= z;
      }
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) pi.alpha(i, j) = std::exp(pi.alpha(i, j));
      }
    }
  }
  fill_beta(pi);
  return pi;
}

Result<PairImportance> compute_alpha(const AlphaSource& source,
                                     const DistanceSet& d) {
  switch (source.kind) {
    case AlphaSource::Kind::kFromGradient:
      return alpha_from_gradient(source.loss, d);
    case AlphaSource::Kind::kEntropy:
    case AlphaSource::Kind::kInverse:
    case AlphaSource::Kind::kSquare: {
      RegularizerSpec reg = source.reg;
      reg.kind = source.kind == AlphaSource::Kind::kEntropy ? RegKind::kEntropy
                 : source.kind == AlphaSource::Kind::kInverse
                     ? RegKind::kInverse
                     : RegKind::kSquare;
      return solve_alpha(costs_from_distances(d), reg);
    }
    case AlphaSource::Kind::kDirect:
      return alpha_direct(d, source.direct);
  }
  return Error{Errc::kInvalidConfig, "unknown alpha source"};
}

Result<FeasibilityReport> check_feasible(const PairImportance& pi,
                                         const LossSpec& spec,
                                         const Eigen::VectorXd& xi) {
  const Eigen::Index n = pi.alpha.rows();
  if (pi.alpha.cols() != n || xi.size() != n) {
    return Error{Errc::kShapeMismatch, "alpha/xi shapes inconsistent"};
  }
  double tau_eff = 1.0;
  switch (spec.kind) {
    case LossKind::kInfoNce:
    case LossKind::kSoftTriplet:
      tau_eff = spec.tau;
      break;
    case LossKind::kMine:
    case LossKind::kNPlusOneTuplet:
    case LossKind::kLiftedStructured:
      tau_eff = 1.0;
      break;
    default:
      return Error{Errc::kUnsupported,
                   "feasible budget defined for exponential psi only"};
  }
  FeasibilityReport rep;
  rep.target.resize(n);
  rep.beta = pi.alpha.rowwise().sum();
  rep.min_alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    ALPHACL_TRY_ASSIGN(f, eval_phi(spec, xi(i)));
    rep.target(i) = xi(i) * f.deriv / tau_eff;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) rep.min_alpha = std::min(rep.min_alpha, pi.alpha(i, j));
    }
  }
  rep.max_budget_residual = (rep.beta - rep.target).cwiseAbs().maxCoeff();
  rep.nonnegative = rep.min_alpha >= 0.0;
  return rep;
}

Status write_alpha_csv(const std::string& path, const PairImportance& pi) {
  return write_matrix_csv(path, pi.alpha);
}

}  // namespace alphacl
