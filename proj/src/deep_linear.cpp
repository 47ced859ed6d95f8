#include "alphacl/deep_linear.hpp"

#include <cmath>

#include "alphacl/energy.hpp"
#include "alphacl/jacobi.hpp"

namespace alphacl {
namespace {

Result<Unit> check_state(const DeepLinState& state) {
  if (state.weights.empty()) {
    return Error{Errc::kInvalidConfig, "empty layer stack"};
  }
  for (std::size_t l = 0; l + 1 < state.weights.size(); ++l) {
    if (state.weights[l + 1].cols() != state.weights[l].rows()) {
      return Error{Errc::kShapeMismatch, "layer width chain broken"};
    }
  }
  return Unit{};
}

Eigen::MatrixXd end_to_end(const DeepLinState& state) {
  Eigen::MatrixXd w = state.weights.front();
  for (std::size_t l = 1; l < state.weights.size(); ++l) {
    w = state.weights[l] * w;
  }
  return w;
}

LayerSpectrum top_two_singulars(const Eigen::MatrixXd& w) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
  LayerSpectrum s;
  s.sigma1 = svd.singularValues()(0);
  s.sigma2 = svd.singularValues().size() > 1 ? svd.singularValues()(1) : 0.0;
  return s;
}

}  // namespace

Result<Eigen::MatrixXd> build_x_alpha(const PairImportance& pi,
                                      const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& x_aug) {
  return contrastive_cov(pi, x, x_aug, x, x_aug);
}

Result<double> flow_energy2(const DeepLinState& state,
                            const Eigen::MatrixXd& x_alpha) {
  ALPHACL_TRY_ASSIGN(unit, check_state(state));
  (void)unit;
  if (x_alpha.rows() != state.weights.front().cols() ||
      x_alpha.cols() != x_alpha.rows()) {
    return Error{Errc::kShapeMismatch, "x_alpha does not match input width"};
  }
  const Eigen::MatrixXd w = end_to_end(state);
  return (w * x_alpha * w.transpose()).trace();
}

Result<DeepLinState> project_flow_state(DeepLinState state, FlowNorm norm) {
  if (norm == FlowNorm::kNone) return state;
  const std::size_t last = state.weights.size() - 1;
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    Eigen::MatrixXd& w = state.weights[l];
    if (norm == FlowNorm::kPerFilter && l != last) {
      const double target = 1.0 / std::sqrt(static_cast<double>(w.rows()));
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const double rn = w.row(r).norm();
        if (rn < 1e-300) {
          return Error{Errc::kSingular, "zero filter row during projection"};
        }
        w.row(r) *= target / rn;
      }
    } else {
      const double fn = w.norm();
      if (fn < 1e-300) {
        return Error{Errc::kSingular, "zero layer during projection"};
      }
      w /= fn;
    }
  }
  return state;
}

Result<DeepLinState> flow_step(const DeepLinState& state,
                               const Eigen::MatrixXd& x_alpha, double eta,
                               FlowNorm norm) {
  ALPHACL_TRY_ASSIGN(unit, check_state(state));
  (void)unit;
  const std::size_t layers = state.weights.size();
  if (x_alpha.rows() != state.weights.front().cols() ||
      x_alpha.cols() != x_alpha.rows()) {
    return Error{Errc::kShapeMismatch, "x_alpha does not match input width"};
  }

  // prefix[l] = W_l ... W_1 (prefix[0] = I), suffix[l] = W_L ... W_{l+1}.
  std::vector<Eigen::MatrixXd> prefix(layers + 1);
  std::vector<Eigen::MatrixXd> suffix(layers + 1);
  prefix[0] = Eigen::MatrixXd::Identity(x_alpha.rows(), x_alpha.rows());
  for (std::size_t l = 0; l < layers; ++l) {
    prefix[l + 1] = state.weights[l] * prefix[l];
  }
  const Eigen::Index out_dim = state.weights.back().rows();
  suffix[layers] = Eigen::MatrixXd::Identity(out_dim, out_dim);
  for (std::size_t l = layers; l-- > 0;) {
    suffix[l] = suffix[l + 1] * state.weights[l];
  }

  DeepLinState next = state;
  for (std::size_t l = 0; l < layers; ++l) {
    const Eigen::MatrixXd down = prefix[l] * x_alpha * prefix[l].transpose();
    const Eigen::MatrixXd up = suffix[l + 1].transpose() * suffix[l + 1];
    next.weights[l] += eta * up * state.weights[l] * down;
  }
  return project_flow_state(std::move(next), norm);
}

Result<FlowResult> run_flow(const DeepLinState& init,
                            const Eigen::MatrixXd& x_alpha,
                            const FlowOptions& opts) {
  ALPHACL_TRY_ASSIGN(state0, project_flow_state(init, opts.norm));
  FlowResult res;
  res.state = std::move(state0);
  res.final_eta = opts.eta;

  const auto record = [&](long step, double e2) {
    res.trace.steps.push_back(step);
    res.trace.energy2.push_back(e2);
    std::vector<LayerSpectrum> spec;
    spec.reserve(res.state.weights.size());
    for (const auto& w : res.state.weights) {
      spec.push_back(top_two_singulars(w));
    }
    res.trace.spectra.push_back(std::move(spec));
    const auto drift = balancedness_residual(res.state, init);
    double dmax = 0.0;
    for (double d : drift) dmax = std::max(dmax, d);
    res.trace.balance_drift.push_back(dmax);
  };

  ALPHACL_TRY_ASSIGN(e0, flow_energy2(res.state, x_alpha));
  double e = e0;
  record(0, e);

  double eta = opts.eta;
  const bool monotone = opts.backtracking && opts.norm != FlowNorm::kNone;
  for (long step = 1; step <= opts.max_steps; ++step) {
    ALPHACL_TRY_ASSIGN(cand, flow_step(res.state, x_alpha, eta, opts.norm));
    ALPHACL_TRY_ASSIGN(e_new0, flow_energy2(cand, x_alpha));
    double e_new = e_new0;
    if (monotone) {
      const double slack = 1e-14 * std::max(1.0, std::abs(e));
      int halvings = 0;
      while (e_new < e - slack && halvings < 60) {
        eta *= 0.5;
        ALPHACL_TRY_ASSIGN(c2, flow_step(res.state, x_alpha, eta, opts.norm));
        cand = std::move(c2);
        ALPHACL_TRY_ASSIGN(e2, flow_energy2(cand, x_alpha));
        e_new = e2;
        ++halvings;
      }
      if (e_new < e - slack) {
        return Error{Errc::kNoConvergence,
                     "energy decreases even at minimal step size"};
      }
    }
    res.state = std::move(cand);
    res.steps_taken = step;
    if (step % std::max(1, opts.record_every) == 0 ||
        step == opts.max_steps) {
      record(step, e_new);
    }
    const double diff = std::abs(e_new - e);
    e = e_new;
    if (opts.tol > 0.0 && diff < opts.tol) {
      res.converged = true;
      break;
    }
  }
  if (res.trace.steps.back() != res.steps_taken) {
    record(res.steps_taken, e);
  }
  res.final_eta = eta;
  res.final_energy2 = e;
  return res;
}

std::vector<double> balancedness_residual(const DeepLinState& now,
                                          const DeepLinState& init) {
  std::vector<double> out;
  for (std::size_t l = 0; l + 1 < now.weights.size(); ++l) {
    const Eigen::MatrixXd b_now =
        now.weights[l] * now.weights[l].transpose() -
        now.weights[l + 1].transpose() * now.weights[l + 1];
    const Eigen::MatrixXd b_init =
        init.weights[l] * init.weights[l].transpose() -
        init.weights[l + 1].transpose() * init.weights[l + 1];
    out.push_back((b_now - b_init).norm());
  }
  return out;
}

Result<AlignmentReport> check_alignment(
    const DeepLinState& state,
    const std::optional<Eigen::VectorXd>& reference_direction) {
  ALPHACL_TRY_ASSIGN(unit, check_state(state));
  (void)unit;
  AlignmentReport rep;
  for (const auto& w : state.weights) {
    const LayerSpectrum s = top_two_singulars(w);
    rep.sigma_ratio.push_back(s.sigma1 > 0.0 ? s.sigma2 / s.sigma1 : 0.0);
  }
  const Eigen::MatrixXd w = end_to_end(state);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinV);
  const LayerSpectrum ps = top_two_singulars(w);
  rep.product_sigma_ratio = ps.sigma1 > 0.0 ? ps.sigma2 / ps.sigma1 : 0.0;
  if (reference_direction) {
    const Eigen::VectorXd v0 = svd.matrixV().col(0);
    const double denom = reference_direction->norm();
    if (denom < 1e-300 || w.cols() != reference_direction->size()) {
      return Error{Errc::kShapeMismatch, "bad reference direction"};
    }
    rep.cos_to_reference =
        std::abs(v0.dot(*reference_direction)) / denom;
  }
  // Distinct-top-eigenvalue hypothesis on (W_{>1})^T W_{>1}, checked post hoc.
  if (state.weights.size() > 1) {
    Eigen::MatrixXd above = state.weights[1];
    for (std::size_t l = 2; l < state.weights.size(); ++l) {
      above = state.weights[l] * above;
    }
    const Eigen::MatrixXd gram = above.transpose() * above;
    ALPHACL_TRY_ASSIGN(dec, jacobi_eigen_symmetric(gram));
    const double l1 = dec.values(0);
    const double l2 = dec.values.size() > 1 ? dec.values(1) : 0.0;
    rep.top_hypothesis_ok = l1 > l2 + 1e-9 * std::max(1.0, std::abs(l1));
  } else {
    rep.top_hypothesis_ok = true;
  }
  const std::size_t last = state.weights.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    const Eigen::MatrixXd& wl = state.weights[l];
    const double target = 1.0 / std::sqrt(static_cast<double>(wl.rows()));
    for (Eigen::Index r = 0; r < wl.rows(); ++r) {
      rep.per_filter_max_dev = std::max(
          rep.per_filter_max_dev, std::abs(wl.row(r).norm() - target));
    }
  }
  return rep;
}

Result<DeepLinState> random_flow_init(Rng& rng, const std::vector<int>& dims,
                                      FlowNorm norm) {
  if (dims.size() < 2) {
    return Error{Errc::kInvalidConfig, "need at least one layer"};
  }
  DeepLinState state;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.normal();
    }
    state.weights.push_back(std::move(w));
  }
  return project_flow_state(std::move(state),
                            norm == FlowNorm::kNone ? FlowNorm::kFrobenius
                                                    : norm);
}

}  // namespace alphacl
