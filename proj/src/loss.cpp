#include "alphacl/loss.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace alphacl {
namespace {

// exp with an explicit overflow guard: no silent inf anywhere downstream.
Result<double> checked_exp(double arg) {
  if (arg > 700.0) {
    return Error{Errc::kOverflow,
                 "exp argument " + std::to_string(arg) + " would overflow"};
  }
  return std::exp(arg);
}

Result<Unit> require_positive_tau(const LossSpec& spec) {
  if (!(spec.tau > 0.0)) {
    return Error{Errc::kInvalidConfig, "tau must be > 0 for this loss"};
  }
  return Unit{};
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Result<ValueGrad> eval_phi(const LossSpec& spec, double x) {
  switch (spec.kind) {
    case LossKind::kInfoNce: {
      ALPHACL_TRY_ASSIGN(unit, require_positive_tau(spec));
      (void)unit;
      const double a = spec.epsilon + x;
      if (!(a > 0.0)) {
        return Error{Errc::kDomain, "log argument eps + x <= 0"};
      }
      return ValueGrad{spec.tau * std::log(a), spec.tau / a};
    }
    case LossKind::kMine: {
      if (!(x > 0.0)) return Error{Errc::kDomain, "log argument x <= 0"};
      return ValueGrad{std::log(x), 1.0 / x};
    }
    case LossKind::kTriplet:
    case LossKind::kModifiedTriplet:
    case LossKind::kTripletContrastive:
    case LossKind::kQuadratic:
      return ValueGrad{x, 1.0};
    case LossKind::kSoftTriplet: {
      ALPHACL_TRY_ASSIGN(unit, require_positive_tau(spec));
      (void)unit;
      const double a = 1.0 + x;
      if (!(a > 0.0)) return Error{Errc::kDomain, "log argument 1 + x <= 0"};
      return ValueGrad{spec.tau * std::log(a), spec.tau / a};
    }
    case LossKind::kNPlusOneTuplet: {
      const double a = 1.0 + x;
      if (!(a > 0.0)) return Error{Errc::kDomain, "log argument 1 + x <= 0"};
      return ValueGrad{std::log(a), 1.0 / a};
    }
    case LossKind::kLiftedStructured: {
      if (!(x > 0.0)) return Error{Errc::kDomain, "log argument x <= 0"};
      const double lx = std::log(x);
      if (lx <= 0.0) return ValueGrad{0.0, 0.0};
      return ValueGrad{lx * lx, 2.0 * lx / x};
    }
  }
  return Error{Errc::kInvalidConfig, "unknown loss kind"};
}

Result<ValueGrad> eval_psi(const LossSpec& spec, double x) {
  switch (spec.kind) {
    case LossKind::kInfoNce:
    case LossKind::kSoftTriplet: {
      ALPHACL_TRY_ASSIGN(unit, require_positive_tau(spec));
      (void)unit;
      const double shift = spec.kind == LossKind::kSoftTriplet ? spec.epsilon : 0.0;
      ALPHACL_TRY_ASSIGN(e, checked_exp(x / spec.tau + shift));
      return ValueGrad{e, e / spec.tau};
    }
    case LossKind::kMine:
    case LossKind::kNPlusOneTuplet: {
      ALPHACL_TRY_ASSIGN(e, checked_exp(x));
      return ValueGrad{e, e};
    }
    case LossKind::kTriplet: {
      // Hinge with the kink derivative set to 0 at x = -eps exactly.
      const double a = x + spec.epsilon;
      if (a > 0.0) return ValueGrad{a, 1.0};
      return ValueGrad{0.0, 0.0};
    }
    case LossKind::kLiftedStructured: {
      ALPHACL_TRY_ASSIGN(e, checked_exp(x + spec.epsilon));
      return ValueGrad{e, e};
    }
    case LossKind::kModifiedTriplet: {
      const double s = sigmoid(spec.c * x);
      return ValueGrad{s, spec.c * s * (1.0 - s)};
    }
    case LossKind::kTripletContrastive:
    case LossKind::kQuadratic:
      return ValueGrad{x, 1.0};
  }
  return Error{Errc::kInvalidConfig, "unknown loss kind"};
}

Result<LossEval> eval_loss(const LossSpec& spec, const DistanceSet& d) {
  const Eigen::Index n = d.cross.rows();
  if (d.cross.cols() != n || d.intra.size() != n) {
    return Error{Errc::kShapeMismatch, "distance set shapes inconsistent"};
  }
  if (n < 2) return Error{Errc::kShapeMismatch, "need at least 2 samples"};

  LossEval ev;
  ev.xi.resize(n);
  ev.loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double xi = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      ALPHACL_TRY_ASSIGN(p, eval_psi(spec, d.intra(i) - d.cross(i, j)));
      xi += p.value;
    }
    ev.xi(i) = xi;
    ALPHACL_TRY_ASSIGN(f, eval_phi(spec, xi));
    ev.loss += f.value;
  }
  return ev;
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kInfoNce: return "infonce";
    case LossKind::kMine: return "mine";
    case LossKind::kTriplet: return "triplet";
    case LossKind::kSoftTriplet: return "soft_triplet";
    case LossKind::kNPlusOneTuplet: return "n_plus_one_tuplet";
    case LossKind::kLiftedStructured: return "lifted_structured";
    case LossKind::kModifiedTriplet: return "modified_triplet";
    case LossKind::kTripletContrastive: return "triplet_contrastive";
    case LossKind::kQuadratic: return "quadratic";
  }
  return "unknown";
}

Result<LossKind> loss_kind_from_name(std::string_view name) {
  for (LossKind k : kLossCatalog) {
    if (name == loss_kind_name(k)) return k;
  }
  return Error{Errc::kInvalidConfig,
               "unknown loss kind: " + std::string(name)};
}

std::string format_loss_spec(const LossSpec& spec) {
  std::ostringstream out;
  out << "kind=" << loss_kind_name(spec.kind);
  char buf[64];
  std::snprintf(buf, sizeof(buf), " tau=%.17g eps=%.17g", spec.tau,
                spec.epsilon);
  out << buf;
  if (spec.kind == LossKind::kModifiedTriplet) {
    std::snprintf(buf, sizeof(buf), " c=%.17g", spec.c);
    out << buf;
  }
  return out.str();
}

Result<LossSpec> parse_loss_spec(std::string_view text) {
  LossSpec spec;
  bool saw_kind = false;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      return Error{Errc::kInvalidConfig, "expected key=value, got: " + token};
    }
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "kind") {
      ALPHACL_TRY_ASSIGN(k, loss_kind_from_name(val));
      spec.kind = k;
      saw_kind = true;
      continue;
    }
    char* end = nullptr;
    const double num = std::strtod(val.c_str(), &end);
    if (end == val.c_str() || *end != '\0') {
      return Error{Errc::kInvalidConfig, "bad number for " + key + ": " + val};
    }
    if (key == "tau") {
      spec.tau = num;
    } else if (key == "eps") {
      spec.epsilon = num;
    } else if (key == "c") {
      spec.c = num;
    } else {
      return Error{Errc::kInvalidConfig, "unknown key: " + key};
    }
  }
  if (!saw_kind) return Error{Errc::kInvalidConfig, "missing kind=..."};
  return spec;
}

}  // namespace alphacl
