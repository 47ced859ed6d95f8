#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

#include "alphacl/distances.hpp"
#include "alphacl/result.hpp"

namespace alphacl {

// The contrastive loss family
//   L(z) = sum_i phi( xi_i ),   xi_i = sum_{j != i} psi( d2_i - d2_ij ),
// with phi nondecreasing and psi nondecreasing. Each catalog entry fixes a
// (phi, psi) pair; tau/epsilon/c parameterize them.
enum class LossKind {
  kInfoNce,            // phi = tau*log(eps + x),        psi = exp(x/tau)
  kMine,               // phi = log(x),                  psi = exp(x)
  kTriplet,            // phi = x,                       psi = max(x + eps, 0)
  kSoftTriplet,        // phi = tau*log(1 + x),          psi = exp(x/tau + eps)
  kNPlusOneTuplet,     // phi = log(1 + x),              psi = exp(x)
  kLiftedStructured,   // phi = max(log x, 0)^2,         psi = exp(x + eps)
  kModifiedTriplet,    // phi = x,                       psi = sigmoid(c*x)
  kTripletContrastive, // phi = x, psi = x (alias of quadratic)
  kQuadratic,          // phi = x, psi = x
};

struct LossSpec {
  LossKind kind = LossKind::kInfoNce;
  double tau = 1.0;      // temperature, > 0 where used
  double epsilon = 0.0;  // additive offset, >= 0 where used
  double c = 1.0;        // sigmoid slope (modified triplet)
};

struct ValueGrad {
  double value = 0.0;
  double deriv = 0.0;
};

// phi and psi with one-sided kink convention: derivative 0 exactly at the
// clamp boundary (triplet at x = -eps; lifted-structured clamp is C1 anyway).
Result<ValueGrad> eval_phi(const LossSpec& spec, double x);
Result<ValueGrad> eval_psi(const LossSpec& spec, double x);

struct LossEval {
  double loss = 0.0;
  Eigen::VectorXd xi;  // per-anchor inner sums, N
};

// Evaluate L over a distance set. Reads cross-distance rows; the distance
// invariants (symmetry, zero diagonal) are the producer's responsibility.
Result<LossEval> eval_loss(const LossSpec& spec, const DistanceSet& d);

// Flat key=value text form, e.g. "kind=infonce tau=0.5 eps=0".
std::string format_loss_spec(const LossSpec& spec);
Result<LossSpec> parse_loss_spec(std::string_view text);

Result<LossKind> loss_kind_from_name(std::string_view name);
const char* loss_kind_name(LossKind kind);

// Every catalog entry, in a fixed order (useful for sweep tests and the CLI).
inline constexpr LossKind kLossCatalog[] = {
    LossKind::kInfoNce,          LossKind::kMine,
    LossKind::kTriplet,          LossKind::kSoftTriplet,
    LossKind::kNPlusOneTuplet,   LossKind::kLiftedStructured,
    LossKind::kModifiedTriplet,  LossKind::kTripletContrastive,
    LossKind::kQuadratic,
};

}  // namespace alphacl
