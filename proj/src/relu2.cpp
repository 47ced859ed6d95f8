#include "alphacl/relu2.hpp"

#include <cmath>
#include <limits>

#include "alphacl/deep_linear.hpp"
#include "alphacl/encoder.hpp"
#include "alphacl/jacobi.hpp"

namespace alphacl {

Result<Batch> generate_mixture(const MixtureConfig& cfg, Rng& rng) {
  if (cfg.modes < 1) return Error{Errc::kInvalidConfig, "modes must be >= 1"};
  if (cfg.samples < cfg.modes) {
    return Error{Errc::kInvalidConfig, "need samples >= modes for coverage"};
  }
  if (!(cfg.amp_lo > 0.0 && cfg.amp_hi >= cfg.amp_lo && cfg.gamma_lo > 0.0 &&
        cfg.gamma_hi >= cfg.gamma_lo)) {
    return Error{Errc::kInvalidConfig, "amplitude/scale ranges must be positive"};
  }
  Batch batch;
  batch.inputs.setZero(cfg.samples, cfg.modes);
  batch.inputs_aug.setZero(cfg.samples, cfg.modes);
  for (int i = 0; i < cfg.samples; ++i) {
    // First pass covers every mode once; the rest draw uniformly.
    const int mode = i < cfg.modes
                         ? i
                         : static_cast<int>(rng.below(
                               static_cast<std::uint64_t>(cfg.modes)));
    const double a = rng.uniform(cfg.amp_lo, cfg.amp_hi);
    const double gamma = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
    batch.inputs(i, mode) = a;
    batch.inputs_aug(i, mode) = gamma * a;
  }
  return batch;
}

MixtureCheck check_mixture(const Batch& batch) {
  MixtureCheck chk;
  const Eigen::Index n = batch.inputs.rows();
  const Eigen::Index m = batch.inputs.cols();
  if (n == 0 || m == 0 || batch.inputs_aug.rows() != n ||
      batch.inputs_aug.cols() != m) {
    return chk;
  }
  chk.one_hot_nonneg = true;
  chk.pairs_scaled = true;
  std::vector<bool> covered(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    int nonzero = 0;
    Eigen::Index mode = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = batch.inputs(i, j);
      if (v < 0.0) chk.one_hot_nonneg = false;
      if (v != 0.0) {
        ++nonzero;
        mode = j;
      }
    }
    if (nonzero != 1) {
      chk.one_hot_nonneg = false;
      continue;
    }
    covered[static_cast<std::size_t>(mode)] = true;
    // Pair must be a positive multiple of the same basis vector.
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = batch.inputs_aug(i, j);
      if (j == mode) {
        if (!(v > 0.0)) chk.pairs_scaled = false;
      } else if (v != 0.0) {
        chk.pairs_scaled = false;
      }
    }
  }
  chk.full_coverage = true;
  for (bool c : covered) chk.full_coverage = chk.full_coverage && c;
  return chk;
}

Result<Relu2State> random_relu2_init(Rng& rng, int modes, int hidden,
                                     int out) {
  if (modes < 1 || hidden < 1 || out < 1) {
    return Error{Errc::kInvalidConfig, "dimensions must be >= 1"};
  }
  Relu2State st;
  st.w1.resize(hidden, modes);
  st.w2.resize(out, hidden);
  for (Eigen::Index r = 0; r < st.w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < st.w1.cols(); ++c) {
      st.w1(r, c) = std::abs(rng.normal());
    }
  }
  for (Eigen::Index r = 0; r < st.w2.rows(); ++r) {
    for (Eigen::Index c = 0; c < st.w2.cols(); ++c) {
      st.w2(r, c) = rng.normal();
    }
  }
  return project_relu2(std::move(st));
}

Result<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> relu2_forward(
    const Relu2State& state, const Eigen::MatrixXd& x) {
  if (x.cols() != state.w1.cols()) {
    return Error{Errc::kShapeMismatch, "input width != w1 width"};
  }
  Eigen::MatrixXd hidden = (x * state.w1.transpose()).cwiseMax(0.0);
  Eigen::MatrixXd out = hidden * state.w2.transpose();
  return std::make_pair(std::move(hidden), std::move(out));
}

Result<Relu2State> project_relu2(Relu2State state, double sticky_eps) {
  for (Eigen::Index r = 0; r < state.w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < state.w1.cols(); ++c) {
      // Components at (or crossing) zero are written as exact 0.0 so the
      // sticky mask [w > 0] is unambiguous from here on.
      if (state.w1(r, c) <= sticky_eps) state.w1(r, c) = 0.0;
    }
  }
  const double n1 = state.w1.norm();
  const double n2 = state.w2.norm();
  if (n1 < 1e-300 || n2 < 1e-300) {
    return Error{Errc::kSingular, "layer collapsed to zero during projection"};
  }
  state.w1 /= n1;
  state.w2 /= n2;
  return state;
}

Result<double> relu2_energy2(const Relu2State& state,
                             const Eigen::MatrixXd& x_alpha) {
  if (x_alpha.rows() != state.w1.cols() || x_alpha.cols() != x_alpha.rows()) {
    return Error{Errc::kShapeMismatch, "x_alpha does not match w1 width"};
  }
  const Eigen::MatrixXd w = state.w2 * state.w1;
  return (w * x_alpha * w.transpose()).trace();
}

Result<Relu2State> sticky_step(const Relu2State& state,
                               const Eigen::MatrixXd& x_alpha, double eta,
                               double sticky_eps) {
  if (x_alpha.rows() != state.w1.cols() || x_alpha.cols() != x_alpha.rows()) {
    return Error{Errc::kShapeMismatch, "x_alpha does not match w1 width"};
  }
  const Eigen::MatrixXd mask =
      (state.w1.array() > 0.0).cast<double>().matrix();
  const Eigen::MatrixXd v1 =
      (state.w2.transpose() * state.w2 * state.w1 * x_alpha).cwiseProduct(mask);
  const Eigen::MatrixXd v2 =
      state.w2 * (state.w1 * x_alpha * state.w1.transpose());
  Relu2State next = state;
  next.w1 += eta * v1;
  next.w2 += eta * v2;
  return project_relu2(std::move(next), sticky_eps);
}

Result<Relu2State> relu_gradient_step(const Relu2State& state,
                                      const Batch& batch,
                                      const PairImportance& pi, double eta,
                                      double sticky_eps) {
  Encoder enc;
  enc.weights = {state.w1, state.w2};
  enc.activations = {Activation::kRelu, Activation::kLinear};
  enc.head = Head::kNone;
  ALPHACL_TRY_ASSIGN(trace, encoder_forward_pair(enc, batch));
  ALPHACL_TRY_ASSIGN(g, grad_energy_wrt_outputs(pi, trace.main.head_out,
                                                trace.aug.head_out));
  ALPHACL_TRY_ASSIGN(grads, encoder_backward_pair(enc, trace, g.g, g.g_aug));
  Relu2State next = state;
  next.w1 += eta * grads[0];
  next.w2 += eta * grads[1];
  return project_relu2(std::move(next), sticky_eps);
}

Result<OneNodeResult> one_node_run(Rng& rng, int modes, int samples,
                                   double eta, long max_steps) {
  MixtureConfig cfg;
  cfg.modes = modes;
  cfg.samples = samples;
  ALPHACL_TRY_ASSIGN(batch, generate_mixture(cfg, rng));
  const Eigen::Index n = batch.inputs.rows();
  PairImportance pi;
  pi.alpha = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n - 1));
  pi.alpha.diagonal().setZero();
  pi.beta = pi.alpha.rowwise().sum();
  ALPHACL_TRY_ASSIGN(x_alpha,
                     build_x_alpha(pi, batch.inputs, batch.inputs_aug));

  Relu2State st;
  st.w1.resize(1, modes);
  for (int j = 0; j < modes; ++j) st.w1(0, j) = std::abs(rng.normal());
  st.w2 = Eigen::MatrixXd::Ones(1, 1);
  ALPHACL_TRY_ASSIGN(st0, project_relu2(std::move(st)));
  Relu2State cur = std::move(st0);

  OneNodeResult res;
  int stall_window = 0;
  for (long step = 1; step <= max_steps; ++step) {
    ALPHACL_TRY_ASSIGN(next, sticky_step(cur, x_alpha, eta));
    const double change = (next.w1 - cur.w1).cwiseAbs().maxCoeff();
    cur = std::move(next);
    res.steps = step;
    int positive = 0;
    for (int j = 0; j < modes; ++j) positive += cur.w1(0, j) > 0.0 ? 1 : 0;
    if (positive == 1) {
      res.converged = true;
      break;
    }
    stall_window = change < 1e-15 ? stall_window + 1 : 0;
    if (stall_window >= 100) {
      res.converged = true;  // stationary but not one-hot; reported as-is
      break;
    }
  }
  res.w = cur.w1.row(0).transpose();
  Eigen::Index winner;
  res.w.maxCoeff(&winner);
  res.winner_mode = static_cast<int>(winner);
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(modes);
  basis(winner) = 1.0;
  res.dist_to_basis = (res.w - basis).norm();
  return res;
}

Result<DiversityReport> diversity_classify(const Relu2State& state,
                                           const Eigen::MatrixXd& x_alpha,
                                           double rank_tol,
                                           double support_tol) {
  ALPHACL_TRY_ASSIGN(e2, relu2_energy2(state, x_alpha));
  if (!(e2 > 0.0)) {
    return Error{Errc::kDomain,
                 "classification requires strictly positive energy"};
  }
  DiversityReport rep;
  rep.energy2 = e2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(state.w1);
  const auto& sv = svd.singularValues();
  const double s1 = sv(0);
  rep.sigma_ratio = sv.size() > 1 && s1 > 0.0 ? sv(1) / s1 : 0.0;
  rep.rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > rank_tol * s1) ++rep.rank;
  }
  Eigen::VectorXd col_norms(state.w1.cols());
  for (Eigen::Index c = 0; c < state.w1.cols(); ++c) {
    col_norms(c) = state.w1.col(c).norm();
  }
  Eigen::Index mode;
  const double cmax = col_norms.maxCoeff(&mode);
  bool single = true;
  for (Eigen::Index c = 0; c < col_norms.size(); ++c) {
    if (c != mode && col_norms(c) > support_tol * cmax) single = false;
  }
  if (rep.rank >= 2) {
    rep.branch = DiversityBranch::kHigherRank;
    rep.mode = -1;
  } else {
    rep.branch = DiversityBranch::kRank1SingleMode;
    rep.mode = static_cast<int>(mode);
    rep.violation = !single;
  }
  return rep;
}

Result<StructureReport> xalpha_structure_check(const PairImportance& pi,
                                               const Batch& batch) {
  StructureReport rep;
  const MixtureCheck chk = check_mixture(batch);
  if (!chk.one_hot_nonneg || !chk.pairs_scaled) {
    rep.skip_reason = "batch is not an orthogonal-mode mixture";
    return rep;
  }
  if (!chk.full_coverage) {
    rep.skip_reason = "some mode has no sample";
    return rep;
  }
  if (batch.inputs.cols() < 2) {
    rep.skip_reason = "need at least two modes";
    return rep;
  }
  const Eigen::Index n = batch.inputs.rows();
  if (pi.alpha.rows() != n || pi.alpha.cols() != n) {
    return Error{Errc::kShapeMismatch, "alpha shape does not match batch"};
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && !(pi.alpha(i, j) > 0.0)) {
        rep.skip_reason = "alpha has non-positive off-diagonal entries";
        return rep;
      }
    }
  }

  rep.checked = true;
  ALPHACL_TRY_ASSIGN(x_alpha,
                     build_x_alpha(pi, batch.inputs, batch.inputs_aug));
  rep.max_offdiag = -std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < x_alpha.rows(); ++a) {
    for (Eigen::Index b = 0; b < x_alpha.cols(); ++b) {
      if (a != b) rep.max_offdiag = std::max(rep.max_offdiag, x_alpha(a, b));
    }
  }
  rep.offdiag_negative = rep.max_offdiag < 0.0;
  ALPHACL_TRY_ASSIGN(dec, jacobi_eigen_symmetric(x_alpha));
  const Eigen::VectorXd u = dec.vectors.col(0);
  rep.min_entry = u.minCoeff();
  rep.max_entry = u.maxCoeff();
  rep.eigvec_mixed_signs = rep.min_entry < 0.0 && rep.max_entry > 0.0;
  return rep;
}

}  // namespace alphacl
