// alphacl: command-line laboratory for contrastive learning as coordinate
// ascent on importance-weighted energies.
//
// Subcommands: grad-check, alpha-solve, flow, relu, train, verify-all.
// Exit codes: 0 all checks passed, 1 check failure (JSON failure report),
// 2 usage error. Every run writes run_manifest.json into --out; re-running a
// subcommand with --from-manifest <file> replays the recorded config.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "alphacl/deep_linear.hpp"
#include "alphacl/encoder.hpp"
#include "alphacl/energy.hpp"
#include "alphacl/importance.hpp"
#include "alphacl/io.hpp"
#include "alphacl/jacobi.hpp"
#include "alphacl/loss.hpp"
#include "alphacl/relu2.hpp"
#include "alphacl/rng.hpp"
#include "alphacl/trainer.hpp"
#include "criteria.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace {

using nlohmann::json;
using namespace alphacl;

constexpr const char* kVersion = "0.1.0";

std::string iso_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Accumulates the facts the manifest needs; written before every exit path
// that follows a successful parse.
struct RunContext {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string outdir;
  std::string config_text;
  std::vector<std::string> outputs;
  std::string started;
};

std::string output_path(RunContext& ctx, const std::string& name) {
  ctx.outputs.push_back(name);
  return ctx.outdir + "/" + name;
}

void write_manifest(const RunContext& ctx) {
  json j;
  j["tool"] = "alphacl";
  j["version"] = kVersion;
  j["subcommand"] = ctx.subcommand;
  j["seed"] = ctx.seed;
  j["config"] = ctx.config_text;
  j["outputs"] = ctx.outputs;
  j["started"] = ctx.started;
  j["finished"] = iso_utc(std::chrono::system_clock::now());
  const auto st =
      write_file_atomic(ctx.outdir + "/run_manifest.json", j.dump(2) + "\n");
  if (!st.ok()) {
    std::fprintf(stderr, "manifest write failed: %s\n",
                 st.error().message.c_str());
  }
}

// Check failures end the run with a machine-readable report (exit 1).
int fail_run(RunContext& ctx, const std::vector<std::string>& failures) {
  json j;
  j["subcommand"] = ctx.subcommand;
  j["seed"] = ctx.seed;
  j["failures"] = failures;
  const std::string text = j.dump(2) + "\n";
  const auto st = write_file_atomic(output_path(ctx, "failure_report.json"),
                                    text);
  if (!st.ok()) {
    std::fprintf(stderr, "failure report write failed: %s\n",
                 st.error().message.c_str());
  }
  std::fputs(text.c_str(), stdout);
  return 1;
}

int fail_run(RunContext& ctx, const std::string& failure) {
  return fail_run(ctx, std::vector<std::string>{failure});
}

bool emit(std::vector<std::string>& failures,
          const std::string& name, const Status& st) {
  if (!st.ok()) {
    failures.push_back("writing " + name + ": " + st.error().message);
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// grad-check: the gradient identity between loss descent and frozen-alpha
// energy ascent, at the embedding level and through encoder weights.

struct GradCheckOpts {
  std::string loss = "infonce";
  double tau = 0.5, eps = 0.0, c = 1.0;
  int n = 16, dim = 8, draws = 50;
  double tol = 1e-8;
};

int run_grad_check(const GradCheckOpts& o, RunContext& ctx) {
  const auto kind = loss_kind_from_name(o.loss);
  if (!kind.ok()) return fail_run(ctx, kind.error().message);
  const LossSpec spec{*kind, o.tau, o.eps, o.c};

  Rng rng(ctx.seed, 0x6c);
  double out_res = 0.0, weight_res = 0.0;
  int kinks = 0;
  for (int d = 0; d < o.draws; ++d) {
    Eigen::MatrixXd z, z_aug;
    verify::random_embeddings(rng, o.n, o.dim, z, z_aug);
    auto rep = verify_gradient_identity(spec, z, z_aug);
    if (!rep.ok()) return fail_run(ctx, rep.error().message);
    out_res = std::max(out_res, rep->residual);
    kinks += rep->kink_flagged ? 1 : 0;

    Rng er = rng.child(0x10 + static_cast<std::uint64_t>(d));
    Encoder enc = make_encoder(er, {o.dim, o.dim, o.dim}, Activation::kRelu,
                               Head::kNone);
    Batch batch;
    batch.inputs = z;
    batch.inputs_aug = z_aug;
    auto gl = loss_gradient(enc, batch, spec);
    if (!gl.ok()) return fail_run(ctx, gl.error().message);
    AlphaSource src;
    src.kind = AlphaSource::Kind::kFromGradient;
    src.loss = spec;
    auto ge = energy_ascent_gradient(enc, batch, src);
    if (!ge.ok()) return fail_run(ctx, ge.error().message);
    for (std::size_t l = 0; l < gl->size(); ++l) {
      weight_res = std::max(
          weight_res, ((*gl)[l] + (*ge)[l]).cwiseAbs().maxCoeff());
    }
  }

  const bool pass = out_res <= o.tol && weight_res <= o.tol;
  json j;
  j["loss"] = format_loss_spec(spec);
  j["draws"] = o.draws;
  j["n"] = o.n;
  j["dim"] = o.dim;
  j["output_residual_max"] = out_res;
  j["weight_residual_max"] = weight_res;
  j["kink_flagged_draws"] = kinks;
  j["tol"] = o.tol;
  j["pass"] = pass;
  std::vector<std::string> failures;
  emit(failures, "grad_check.json",
       write_file_atomic(output_path(ctx, "grad_check.json"),
                         j.dump(2) + "\n"));
  std::printf("grad-check %s: output residual %.3g, weight residual %.3g "
              "(tol %.3g, %d/%d kink-flagged)\n",
              o.loss.c_str(), out_res, weight_res, o.tol, kinks, o.draws);
  if (!pass) {
    failures.push_back("gradient identity residual above tolerance");
  }
  if (!failures.empty()) return fail_run(ctx, failures);
  return 0;
}

// ---------------------------------------------------------------------------
// alpha-solve: run every importance solver on one random batch and
// cross-check feasibility plus the entropy/softmax closed form.

struct AlphaSolveOpts {
  int n = 8, dim = 4;
  double tau_entropy = 0.5;
  double tau_inverse = 0.5, gamma = 2.0;
  double tau_square = 5.0;
  double p = 4.0, tau_direct = 0.5;
  bool normalized = true;
  std::string distance = "euclidean";
};

int run_alpha_solve(const AlphaSolveOpts& o, RunContext& ctx) {
  Rng rng(ctx.seed, 0xa5);
  Eigen::MatrixXd z, z_aug;
  verify::random_embeddings(rng, o.n, o.dim, z, z_aug);
  auto d = pairwise_distances(z, z_aug);
  if (!d.ok()) return fail_run(ctx, d.error().message);
  const Eigen::MatrixXd costs = costs_from_distances(*d);

  struct Solved {
    std::string name;
    PairImportance pi;
    bool row_stochastic = true;
  };
  std::vector<Solved> solved;

  RegularizerSpec ent{RegKind::kEntropy, o.tau_entropy, 2.0, {}};
  auto a_ent = alpha_entropy(costs, ent);
  if (!a_ent.ok()) return fail_run(ctx, a_ent.error().message);
  solved.push_back({"entropy", *a_ent, true});

  RegularizerSpec inv{RegKind::kInverse, o.tau_inverse, o.gamma, {}};
  auto a_inv = alpha_inverse(costs, inv);
  if (!a_inv.ok()) return fail_run(ctx, a_inv.error().message);
  solved.push_back({"inverse", *a_inv, true});

  RegularizerSpec sq{RegKind::kSquare, o.tau_square, 2.0, {}};
  auto a_sq = alpha_square(costs, sq);
  if (!a_sq.ok()) return fail_run(ctx, a_sq.error().message);
  solved.push_back({"square", *a_sq, true});

  DirectAlphaSpec dir{o.p, o.tau_direct, o.normalized,
                      o.distance == "euclidean"
                          ? DirectDistance::kEuclidean
                          : DirectDistance::kHalfSquareRoot};
  auto a_dir = alpha_direct(*d, dir);
  if (!a_dir.ok()) return fail_run(ctx, a_dir.error().message);
  solved.push_back({"direct", *a_dir, o.normalized});

  std::vector<std::string> failures;
  json j;
  j["n"] = o.n;
  j["dim"] = o.dim;
  for (const auto& s : solved) {
    const std::string file = "alpha_" + s.name + ".csv";
    emit(failures, file, write_alpha_csv(output_path(ctx, file), s.pi));
    const double min_alpha = s.pi.alpha.minCoeff();
    double row_residual = 0.0;
    if (s.row_stochastic) {
      row_residual =
          (s.pi.alpha.rowwise().sum().array() - 1.0).abs().maxCoeff();
      if (row_residual > 1e-8) {
        failures.push_back(s.name + ": row sums off the unit budget by " +
                           format_double(row_residual));
      }
    }
    if (min_alpha < 0.0) {
      failures.push_back(s.name + ": negative importance weight");
    }
    j["solvers"][s.name]["min_alpha"] = min_alpha;
    j["solvers"][s.name]["row_sum_residual"] = row_residual;
  }

  const Eigen::MatrixXd soft = verify::softmax_alpha(*d, o.tau_entropy);
  const double ent_vs_soft =
      (solved[0].pi.alpha - soft).cwiseAbs().maxCoeff();
  j["entropy_vs_softmax"] = ent_vs_soft;
  if (ent_vs_soft > 1e-10) {
    failures.push_back("entropy solution disagrees with the softmax form");
  }
  for (std::size_t a = 0; a < solved.size(); ++a) {
    for (std::size_t b = a + 1; b < solved.size(); ++b) {
      j["pairwise_max_diff"][solved[a].name + "_vs_" + solved[b].name] =
          (solved[a].pi.alpha - solved[b].pi.alpha).cwiseAbs().maxCoeff();
    }
  }
  j["pass"] = failures.empty();
  emit(failures, "alpha_solve.json",
       write_file_atomic(output_path(ctx, "alpha_solve.json"),
                         j.dump(2) + "\n"));
  std::printf("alpha-solve: entropy vs softmax %.3g, %zu solver(s) written\n",
              ent_vs_soft, solved.size());
  if (!failures.empty()) return fail_run(ctx, failures);
  return 0;
}

// ---------------------------------------------------------------------------
// flow: deep linear energy flow on a random gapped covariance; traces
// energy and per-layer spectra, checks convergence to the top eigenpair.

struct FlowOpts {
  int layers = 5, dim = 8, width = 8;
  double eta = 1e-2, tol = 1e-13, gap = 0.1;
  long steps = 50000;
  int record_every = 10;
  std::string constraint = "frobenius";
  bool gnuplot = false;
};

Result<FlowNorm> parse_norm(const std::string& s) {
  if (s == "frobenius") return FlowNorm::kFrobenius;
  if (s == "per_filter") return FlowNorm::kPerFilter;
  if (s == "none") return FlowNorm::kNone;
  return Error{Errc::kInvalidConfig, "unknown constraint: " + s};
}

int run_flow_cmd(const FlowOpts& o, RunContext& ctx) {
  auto norm = parse_norm(o.constraint);
  if (!norm.ok()) return fail_run(ctx, norm.error().message);

  Rng rng(ctx.seed, 0xf1);
  const Eigen::MatrixXd x =
      verify::random_symmetric_with_gap(rng, o.dim, o.gap, 1.0, 2.0);
  auto eig = jacobi_eigen_symmetric(x);
  if (!eig.ok()) return fail_run(ctx, eig.error().message);
  const double lambda_max = eig->values(0);

  std::vector<int> dims(static_cast<std::size_t>(o.layers) + 1, o.width);
  dims[0] = o.dim;
  Rng ir = rng.child(1);
  auto init = random_flow_init(ir, dims, *norm);
  if (!init.ok()) return fail_run(ctx, init.error().message);

  FlowOptions opts;
  opts.eta = o.eta;
  opts.max_steps = o.steps;
  opts.tol = *norm == FlowNorm::kNone ? 0.0 : o.tol;
  opts.norm = *norm;
  opts.record_every = o.record_every;
  auto run = run_flow(*init, x, opts);
  if (!run.ok()) return fail_run(ctx, run.error().message);

  std::vector<std::string> header{"step", "energy2", "gap_to_top"};
  for (int l = 0; l < o.layers; ++l) {
    header.push_back("sigma1_" + std::to_string(l));
    header.push_back("sigma2_" + std::to_string(l));
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(run->trace.steps.size());
  for (std::size_t i = 0; i < run->trace.steps.size(); ++i) {
    std::vector<double> row{static_cast<double>(run->trace.steps[i]),
                            run->trace.energy2[i],
                            std::abs(run->trace.energy2[i] - lambda_max)};
    for (const auto& sp : run->trace.spectra[i]) {
      row.push_back(sp.sigma1);
      row.push_back(sp.sigma2);
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> failures;
  emit(failures, "flow_trace.csv",
       write_rows_csv(output_path(ctx, "flow_trace.csv"), header, rows));

  const double residual = std::abs(run->final_energy2 - lambda_max);
  json j;
  j["constraint"] = o.constraint;
  j["layers"] = o.layers;
  j["dim"] = o.dim;
  j["lambda_max"] = lambda_max;
  j["final_energy2"] = run->final_energy2;
  j["residual"] = residual;
  j["converged"] = run->converged;
  j["steps_taken"] = run->steps_taken;
  j["final_eta"] = run->final_eta;

  bool pass = true;
  if (*norm == FlowNorm::kNone) {
    const auto drift = balancedness_residual(run->state, *init);
    j["max_balance_drift"] = *std::max_element(drift.begin(), drift.end());
  } else {
    const Eigen::VectorXd ref = eig->vectors.col(0);
    auto align = check_alignment(run->state, ref);
    if (!align.ok()) return fail_run(ctx, align.error().message);
    j["alignment"]["product_sigma_ratio"] = align->product_sigma_ratio;
    j["alignment"]["max_layer_sigma_ratio"] =
        *std::max_element(align->sigma_ratio.begin(),
                          align->sigma_ratio.end());
    j["alignment"]["cos_to_top_eigvec"] = align->cos_to_reference;
    j["alignment"]["top_hypothesis_ok"] = align->top_hypothesis_ok;
    if (!run->converged) {
      failures.push_back("flow did not converge within the step budget");
      pass = false;
    }
    if (residual > 1e-4) {
      failures.push_back("final 2E misses lambda_max by " +
                         format_double(residual));
      pass = false;
    }
    if (align->product_sigma_ratio > 1e-3 ||
        std::abs(align->cos_to_reference) < 0.999) {
      failures.push_back("end-to-end product not aligned with the top "
                         "eigenvector");
      pass = false;
    }
  }
  j["pass"] = pass && failures.empty();
  emit(failures, "flow_summary.json",
       write_file_atomic(output_path(ctx, "flow_summary.json"),
                         j.dump(2) + "\n"));
  if (o.gnuplot) {
    std::string gp =
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'step'\n"
        "set ylabel '2E'\n"
        "plot 'flow_trace.csv' using 1:2 with lines, " +
        format_double(lambda_max) + " title 'lambda_max' with lines dt 2\n";
    emit(failures, "flow_plot.gp",
         write_file_atomic(output_path(ctx, "flow_plot.gp"), gp));
  }
  std::printf("flow: %ld steps, 2E = %.12g (lambda_max %.12g, residual "
              "%.3g)\n",
              run->steps_taken, run->final_energy2, lambda_max, residual);
  if (!failures.empty()) return fail_run(ctx, failures);
  return 0;
}

// ---------------------------------------------------------------------------
// relu: sticky dynamics experiments on orthogonal-mode mixtures — input
// covariance structure, one-node mode selection, multi-node diversity.

struct ReluOpts {
  int modes = 4, samples = 16, hidden = 4, out_dim = 4;
  double eta = 1e-2;
  long steps = 200000;
  int runs = 20;
  bool gnuplot = false;
};

Result<Relu2State> sticky_fixed_point(Relu2State st, const Eigen::MatrixXd& x,
                                      double eta, long max_steps,
                                      bool pin_head = false) {
  int quiet = 0;
  for (long s = 0; s < max_steps; ++s) {
    ALPHACL_TRY_ASSIGN(next, sticky_step(st, x, eta));
    if (pin_head) next.w2 = st.w2;
    const double change =
        std::max((next.w1 - st.w1).cwiseAbs().maxCoeff(),
                 (next.w2 - st.w2).cwiseAbs().maxCoeff());
    st = std::move(next);
    quiet = change < 1e-14 ? quiet + 1 : 0;
    if (quiet >= 10) return st;
  }
  return Error{Errc::kNoConvergence, "no sticky fixed point reached"};
}

PairImportance random_positive_alpha(Rng& rng, Eigen::Index n) {
  PairImportance pi;
  pi.alpha.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index jj = 0; jj < n; ++jj) {
      if (i != jj) pi.alpha(i, jj) = rng.uniform(0.1, 1.0);
    }
  }
  pi.beta = pi.alpha.rowwise().sum();
  return pi;
}

int run_relu_cmd(const ReluOpts& o, RunContext& ctx) {
  Rng rng(ctx.seed, 0xe1);
  std::vector<std::string> failures;
  json j;

  MixtureConfig mix;
  mix.modes = o.modes;
  mix.samples = o.samples;

  {  // input covariance structure
    Rng r = rng.child(1);
    auto batch = generate_mixture(mix, r);
    if (!batch.ok()) return fail_run(ctx, batch.error().message);
    PairImportance pi = random_positive_alpha(r, batch->inputs.rows());
    auto rep = xalpha_structure_check(pi, *batch);
    if (!rep.ok()) return fail_run(ctx, rep.error().message);
    j["structure"]["checked"] = rep->checked;
    j["structure"]["offdiag_negative"] = rep->offdiag_negative;
    j["structure"]["max_offdiag"] = rep->max_offdiag;
    j["structure"]["eigvec_mixed_signs"] = rep->eigvec_mixed_signs;
    if (!rep->checked || !rep->offdiag_negative || !rep->eigvec_mixed_signs) {
      failures.push_back("input covariance lacks the mixture structure");
    }
    auto x = build_x_alpha(pi, batch->inputs, batch->inputs_aug);
    if (!x.ok()) return fail_run(ctx, x.error().message);
    emit(failures, "x_alpha.csv",
         write_symmetric_with_spectrum_csv(output_path(ctx, "x_alpha.csv"),
                                           *x));
    ctx.outputs.push_back("x_alpha.csv.eigs.csv");
  }

  {  // one-node mode selection
    int converged = 0;
    double worst_dist = 0.0;
    std::vector<int> winners(static_cast<std::size_t>(o.modes), 0);
    for (int r = 0; r < o.runs; ++r) {
      Rng rr = rng.child(0x100 + static_cast<std::uint64_t>(r));
      auto res = one_node_run(rr, o.modes, o.samples, o.eta, o.steps);
      if (!res.ok()) return fail_run(ctx, res.error().message);
      converged += res->converged ? 1 : 0;
      worst_dist = std::max(worst_dist, res->dist_to_basis);
      if (res->winner_mode >= 0 && res->winner_mode < o.modes) {
        ++winners[static_cast<std::size_t>(res->winner_mode)];
      }
    }
    j["one_node"]["runs"] = o.runs;
    j["one_node"]["converged"] = converged;
    j["one_node"]["worst_dist_to_basis"] = worst_dist;
    j["one_node"]["winner_histogram"] = winners;
    if (converged != o.runs || worst_dist > 1e-6) {
      failures.push_back("a one-node run failed to select a single mode");
    }
  }

  {  // multi-node diversity at sticky fixed points
    // Balanced regime: one sample per mode with equal amplitudes and fixed
    // augmentation scale, uniform importance, and the second layer pinned at
    // a scaled orthogonal matrix. Equal per-node gains let rows latch onto
    // different modes and stay there, instead of one winner draining the
    // rest of the Frobenius budget.
    if (o.out_dim < o.hidden) {
      return fail_run(ctx, "diversity runs need out-dim >= hidden");
    }
    int higher_rank = 0, single_mode = 0, violations = 0;
    Relu2State last;
    MixtureConfig bal = mix;
    bal.samples = bal.modes;
    bal.amp_lo = bal.amp_hi = 1.0;
    bal.gamma_lo = bal.gamma_hi = 1.5;
    for (int r = 0; r < o.runs; ++r) {
      Rng rr = rng.child(0x200 + static_cast<std::uint64_t>(r));
      auto batch = generate_mixture(bal, rr);
      if (!batch.ok()) return fail_run(ctx, batch.error().message);
      const Eigen::Index n = batch->inputs.rows();
      PairImportance pi;
      pi.alpha =
          Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n - 1));
      pi.alpha.diagonal().setZero();
      pi.beta = pi.alpha.rowwise().sum();
      auto x = build_x_alpha(pi, batch->inputs, batch->inputs_aug);
      if (!x.ok()) return fail_run(ctx, x.error().message);
      Rng sr = rr.child(1);
      Relu2State st;
      st.w1.resize(o.hidden, o.modes);
      for (int i = 0; i < o.hidden; ++i) {
        for (int jj = 0; jj < o.modes; ++jj) {
          st.w1(i, jj) = std::abs(sr.normal());
        }
      }
      Eigen::MatrixXd g(o.out_dim, o.hidden);
      for (int i = 0; i < o.out_dim; ++i) {
        for (int jj = 0; jj < o.hidden; ++jj) g(i, jj) = sr.normal();
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      st.w2 = qr.householderQ() *
              Eigen::MatrixXd::Identity(o.out_dim, o.hidden);
      auto proj = project_relu2(std::move(st));
      if (!proj.ok()) return fail_run(ctx, proj.error().message);
      auto fixed =
          sticky_fixed_point(*proj, *x, o.eta, o.steps, /*pin_head=*/true);
      if (!fixed.ok()) return fail_run(ctx, fixed.error().message);
      auto rep = diversity_classify(*fixed, *x);
      if (!rep.ok()) return fail_run(ctx, rep.error().message);
      if (rep->branch == DiversityBranch::kHigherRank) ++higher_rank;
      if (rep->branch == DiversityBranch::kRank1SingleMode) ++single_mode;
      violations += rep->violation ? 1 : 0;
      last = *fixed;
    }
    j["diversity"]["runs"] = o.runs;
    j["diversity"]["higher_rank"] = higher_rank;
    j["diversity"]["rank1_single_mode"] = single_mode;
    j["diversity"]["violations"] = violations;
    if (violations != 0) {
      failures.push_back("rank-1 fixed point spread across several modes");
    }
    emit(failures, "relu_w1.csv",
         write_matrix_csv(output_path(ctx, "relu_w1.csv"), last.w1));
  }

  j["pass"] = failures.empty();
  emit(failures, "relu_summary.json",
       write_file_atomic(output_path(ctx, "relu_summary.json"),
                         j.dump(2) + "\n"));
  if (o.gnuplot) {
    const std::string gp =
        "set datafile separator ','\n"
        "set view map\n"
        "splot 'relu_w1.csv' matrix every ::0::0:1 with image\n";
    emit(failures, "relu_plot.gp",
         write_file_atomic(output_path(ctx, "relu_plot.gp"), gp));
  }
  std::printf("relu: structure %s, one-node %d/%d converged, diversity "
              "higher-rank %lld/%d\n",
              j["structure"]["checked"].get<bool>() ? "ok" : "skipped",
              j["one_node"]["converged"].get<int>(), o.runs,
              j["diversity"]["higher_rank"].get<long long>(), o.runs);
  if (!failures.empty()) return fail_run(ctx, failures);
  return 0;
}

// ---------------------------------------------------------------------------
// train: toy comparison of descent and coordinate-ascent variants with a
// linear probe readout.

struct TrainOpts {
  std::string variant = "infonce";
  int epochs = 30, batch = 16, embed = 4;
  std::vector<int> hidden{16};
  double lr = 0.05;
  std::string optimizer = "sgd";
  double loss_tau = 0.5, loss_eps = 0.0;
  std::string reg = "entropy";
  double reg_tau = 0.5, gamma = 2.0;
  double p = 4.0, direct_tau = 0.5;
  bool normalized = true;
  std::string distance = "euclidean";
  int classes = 4, per_class = 32, dim = 8;
  double center_scale = 3.0, cluster_noise = 0.5, aug_noise = 0.1;
  int nuisance_dims = 0;
  double nuisance_scale = 0.0;
};

Result<VariantKind> parse_variant(const std::string& s) {
  if (s == "infonce") return VariantKind::kInfoNce;
  if (s == "quadratic") return VariantKind::kQuadratic;
  if (s == "backprop_alpha") return VariantKind::kBackpropAlpha;
  if (s == "alpha_cl") return VariantKind::kAlphaCl;
  if (s == "alpha_cl_direct") return VariantKind::kAlphaClDirect;
  return Error{Errc::kInvalidConfig, "unknown variant: " + s};
}

Result<RegKind> parse_reg(const std::string& s) {
  if (s == "entropy") return RegKind::kEntropy;
  if (s == "inverse") return RegKind::kInverse;
  if (s == "square") return RegKind::kSquare;
  return Error{Errc::kInvalidConfig, "unknown regularizer: " + s};
}

int run_train_cmd(const TrainOpts& o, RunContext& ctx) {
  auto variant = parse_variant(o.variant);
  if (!variant.ok()) return fail_run(ctx, variant.error().message);
  auto reg_kind = parse_reg(o.reg);
  if (!reg_kind.ok()) return fail_run(ctx, reg_kind.error().message);

  TaskConfig task_cfg;
  task_cfg.classes = o.classes;
  task_cfg.per_class = o.per_class;
  task_cfg.dim = o.dim;
  task_cfg.center_scale = o.center_scale;
  task_cfg.cluster_noise = o.cluster_noise;
  task_cfg.aug_noise = o.aug_noise;
  task_cfg.nuisance_dims = o.nuisance_dims;
  task_cfg.nuisance_scale = o.nuisance_scale;
  Rng task_rng(ctx.seed, 0x7a);
  auto task = generate_task(task_cfg, task_rng);
  if (!task.ok()) return fail_run(ctx, task.error().message);

  TrainConfig cfg;
  cfg.variant = *variant;
  cfg.loss = LossSpec{LossKind::kInfoNce, o.loss_tau, o.loss_eps, 1.0};
  cfg.reg = RegularizerSpec{*reg_kind, o.reg_tau, o.gamma, {}};
  cfg.direct = DirectAlphaSpec{o.p, o.direct_tau, o.normalized,
                               o.distance == "euclidean"
                                   ? DirectDistance::kEuclidean
                                   : DirectDistance::kHalfSquareRoot};
  cfg.optimizer = o.optimizer == "adam" ? OptimizerKind::kAdamLike
                                        : OptimizerKind::kSgd;
  cfg.lr = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.hidden = o.hidden;
  cfg.embed_dim = o.embed;
  cfg.seed = ctx.seed;
  auto res = train(*task, cfg);
  if (!res.ok()) return fail_run(ctx, res.error().message);

  auto probe = linear_probe(res->encoder, *task, o.classes);
  if (!probe.ok()) return fail_run(ctx, probe.error().message);
  auto raw = raw_input_probe(*task, o.classes);
  if (!raw.ok()) return fail_run(ctx, raw.error().message);

  std::vector<std::string> failures;
  std::vector<std::vector<double>> rows;
  rows.reserve(res->log.size());
  for (const auto& e : res->log) {
    rows.push_back({static_cast<double>(e.epoch), e.mean_objective});
  }
  emit(failures, "train_log.csv",
       write_rows_csv(output_path(ctx, "train_log.csv"),
                      {"epoch", "mean_objective"}, rows));
  json j;
  j["variant"] = o.variant;
  j["steps"] = res->steps;
  j["final_mean_objective"] =
      res->log.empty() ? 0.0 : res->log.back().mean_objective;
  j["probe_accuracy"] = *probe;
  j["raw_input_probe_accuracy"] = *raw;
  if (!std::isfinite(*probe) ||
      (!res->log.empty() && !std::isfinite(res->log.back().mean_objective))) {
    failures.push_back("training diverged to non-finite values");
  }
  j["pass"] = failures.empty();
  emit(failures, "train_summary.json",
       write_file_atomic(output_path(ctx, "train_summary.json"),
                         j.dump(2) + "\n"));
  std::printf("train %s: %ld steps, probe %.4f (raw-input probe %.4f)\n",
              o.variant.c_str(), res->steps, *probe, *raw);
  if (!failures.empty()) return fail_run(ctx, failures);
  return 0;
}

// ---------------------------------------------------------------------------
// verify-all: the complete behavioral criteria suite.

struct VerifyOpts {
  int jobs = 0;  // 0 = hardware concurrency
};

int run_verify_all(const VerifyOpts& o, RunContext& ctx) {
  int jobs = o.jobs;
  if (jobs <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    jobs = hw == 0 ? 1 : static_cast<int>(
                             std::min<unsigned>(hw, verify::kCriterionCount));
  }
  const auto results = verify::run_all_criteria(ctx.seed, ctx.outdir, jobs);
  json list = json::array();
  int failed = 0;
  std::vector<std::string> failures;
  for (const auto& r : results) {
    std::printf("[%s] %2d %-40s %s (%.1fs)\n", r.pass ? "PASS" : "FAIL",
                r.id, r.name.c_str(), r.details.c_str(), r.seconds);
    const std::string prefix = ctx.outdir + "/";
    std::vector<std::string> rel;
    for (const auto& f : r.outputs) {
      rel.push_back(f.rfind(prefix, 0) == 0 ? f.substr(prefix.size()) : f);
      ctx.outputs.push_back(rel.back());
    }
    json e;
    e["id"] = r.id;
    e["name"] = r.name;
    e["pass"] = r.pass;
    e["details"] = r.details;
    e["outputs"] = rel;
    list.push_back(e);
    if (!r.pass) {
      ++failed;
      failures.push_back(r.name + ": " + r.details);
    }
  }
  json j;
  j["criteria"] = list;
  j["passed"] = static_cast<int>(results.size()) - failed;
  j["total"] = static_cast<int>(results.size());
  emit(failures, "verify_all.json",
       write_file_atomic(output_path(ctx, "verify_all.json"),
                         j.dump(2) + "\n"));
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(results.size()) - failed, results.size());
  if (!failures.empty()) return fail_run(ctx, failures);
  return 0;
}

// ---------------------------------------------------------------------------

struct CommonOpts {
  std::uint64_t seed = 1;
  std::string out = ".";
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--seed", c.seed, "base seed for all randomness")
      ->capture_default_str();
  sub->add_option("--out", c.out, "output directory")
      ->envname("ALPHACL_OUT")
      ->capture_default_str();
  sub->set_config("--config", "", "flat key=value config file");
}

// --from-manifest <file> is handled before CLI11 sees the arguments: the
// manifest's recorded config is replayed through the ordinary config-file
// path, so precedence stays defaults < config < flags.
int expand_from_manifest(std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] != "--from-manifest") continue;
    if (i + 1 >= args.size()) {
      std::fprintf(stderr, "--from-manifest needs a file argument\n");
      return 2;
    }
    auto text = read_file(args[i + 1]);
    if (!text.ok()) {
      std::fprintf(stderr, "cannot read manifest %s: %s\n",
                   args[i + 1].c_str(), text.error().message.c_str());
      return 2;
    }
    const json m = json::parse(*text, nullptr, false);
    if (m.is_discarded() || !m.contains("subcommand") ||
        !m.contains("config")) {
      std::fprintf(stderr, "%s is not a run manifest\n", args[i + 1].c_str());
      return 2;
    }
    if (args.empty() || args[0] != m["subcommand"].get<std::string>()) {
      std::fprintf(stderr,
                   "manifest records subcommand '%s'; invoke that one\n",
                   m["subcommand"].get<std::string>().c_str());
      return 2;
    }
    const auto stamp =
        std::chrono::steady_clock::now().time_since_epoch().count();
    const std::string cfg_path =
        (std::filesystem::temp_directory_path() /
         ("alphacl_replay_" + std::to_string(stamp) + ".cfg"))
            .string();
    const auto st =
        write_file_atomic(cfg_path, m["config"].get<std::string>());
    if (!st.ok()) {
      std::fprintf(stderr, "cannot stage replay config: %s\n",
                   st.error().message.c_str());
      return 2;
    }
    args[i] = "--config";
    args[i + 1] = cfg_path;
    return 0;
  }
  return 0;
}

// CLI11 only processes config files on the root app, so a subcommand's
// --config is parsed but never applied. Apply it here after the parse;
// flags given on the command line keep precedence over file values.
int apply_subcommand_config(CLI::App* sub) {
  CLI::Option* cfg = sub->get_config_ptr();
  if (cfg == nullptr || cfg->count() == 0) return 0;
  const std::string path = cfg->as<std::string>();
  try {
    const auto items = sub->get_config_formatter()->from_file(path);
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;
      CLI::Option* op = item.parents.empty()
                            ? sub->get_option_no_throw("--" + item.name)
                            : nullptr;
      if (op == nullptr && item.parents.empty() && item.name.size() == 1) {
        op = sub->get_option_no_throw("-" + item.name);
      }
      if (op == nullptr) {
        std::fprintf(stderr, "config %s: unknown key '%s'\n", path.c_str(),
                     item.fullname().c_str());
        return 2;
      }
      if (op == cfg || !op->empty()) continue;
      if (op->get_expected_min() == 0 && item.inputs.size() <= 1) {
        const std::string raw = sub->get_config_formatter()->to_flag(item);
        op->add_result(op->get_flag_value(item.name, raw));
      } else {
        op->add_result(item.inputs);
      }
      op->run_callback();
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "config %s: %s\n", path.c_str(), e.what());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (const int rc = expand_from_manifest(args); rc != 0) return rc;
  std::vector<char*> cargv{argv[0]};
  for (auto& a : args) cargv.push_back(a.data());

  CLI::App app{"numerical laboratory for contrastive learning as "
               "importance-weighted coordinate ascent"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GradCheckOpts gc;
  CommonOpts gc_common;
  CLI::App* gc_cmd = app.add_subcommand(
      "grad-check",
      "verify that loss descent equals frozen-importance energy ascent");
  add_common(gc_cmd, gc_common);
  gc_cmd->add_option("--loss", gc.loss, "loss family member")
      ->check(CLI::IsMember({"infonce", "mine", "triplet", "soft_triplet",
                             "n_plus_one_tuplet", "lifted_structured",
                             "modified_triplet", "triplet_contrastive",
                             "quadratic"}))
      ->capture_default_str();
  gc_cmd->add_option("--tau", gc.tau, "temperature")->capture_default_str();
  gc_cmd->add_option("--eps", gc.eps, "loss offset")->capture_default_str();
  gc_cmd->add_option("--c", gc.c, "sigmoid slope (modified_triplet)")
      ->capture_default_str();
  gc_cmd->add_option("--n", gc.n, "batch size")->capture_default_str();
  gc_cmd->add_option("--dim", gc.dim, "embedding dimension")
      ->capture_default_str();
  gc_cmd->add_option("--draws", gc.draws, "random batches to test")
      ->capture_default_str();
  gc_cmd->add_option("--tol", gc.tol, "max residual accepted")
      ->capture_default_str();

  AlphaSolveOpts as;
  CommonOpts as_common;
  CLI::App* as_cmd = app.add_subcommand(
      "alpha-solve", "run and cross-check every importance solver");
  add_common(as_cmd, as_common);
  as_cmd->add_option("--n", as.n, "batch size")->capture_default_str();
  as_cmd->add_option("--dim", as.dim, "embedding dimension")
      ->capture_default_str();
  as_cmd->add_option("--tau-entropy", as.tau_entropy, "entropy temperature")
      ->capture_default_str();
  as_cmd->add_option("--tau-inverse", as.tau_inverse, "inverse temperature")
      ->capture_default_str();
  as_cmd->add_option("--gamma", as.gamma, "inverse-power exponent (> 1)")
      ->capture_default_str();
  as_cmd->add_option("--tau-square", as.tau_square, "square temperature")
      ->capture_default_str();
  as_cmd->add_option("--p", as.p, "direct-assignment distance power")
      ->capture_default_str();
  as_cmd->add_option("--tau-direct", as.tau_direct, "direct temperature")
      ->capture_default_str();
  as_cmd->add_option("--normalized", as.normalized,
                     "row-normalize the direct assignment")
      ->capture_default_str();
  as_cmd->add_option("--distance", as.distance, "direct distance convention")
      ->check(CLI::IsMember({"euclidean", "half_square_root"}))
      ->capture_default_str();

  FlowOpts fl;
  CommonOpts fl_common;
  CLI::App* fl_cmd = app.add_subcommand(
      "flow", "deep linear energy flow toward the top eigenpair");
  add_common(fl_cmd, fl_common);
  fl_cmd->add_option("--layers", fl.layers, "number of layers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fl_cmd->add_option("--dim", fl.dim, "input dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fl_cmd->add_option("--width", fl.width, "hidden/output width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fl_cmd->add_option("--eta", fl.eta, "step size")->capture_default_str();
  fl_cmd->add_option("--steps", fl.steps, "max steps")->capture_default_str();
  fl_cmd->add_option("--tol", fl.tol, "energy-plateau stopping tolerance")
      ->capture_default_str();
  fl_cmd->add_option("--gap", fl.gap, "spectral gap of the covariance")
      ->capture_default_str();
  fl_cmd->add_option("--record-every", fl.record_every, "trace cadence")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fl_cmd->add_option("--constraint", fl.constraint, "projection after steps")
      ->check(CLI::IsMember({"frobenius", "per_filter", "none"}))
      ->capture_default_str();
  fl_cmd->add_flag("--gnuplot", fl.gnuplot, "emit a gnuplot script")
      ->capture_default_str();

  ReluOpts re;
  CommonOpts re_common;
  CLI::App* re_cmd = app.add_subcommand(
      "relu", "sticky relu dynamics on orthogonal-mode mixtures");
  add_common(re_cmd, re_common);
  re_cmd->add_option("--modes", re.modes, "mixture modes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  re_cmd->add_option("--samples", re.samples, "mixture samples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  re_cmd->add_option("--hidden", re.hidden, "hidden nodes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  re_cmd->add_option("--out-dim", re.out_dim, "output dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  re_cmd->add_option("--eta", re.eta, "step size")->capture_default_str();
  re_cmd->add_option("--steps", re.steps, "max steps per run")
      ->capture_default_str();
  re_cmd->add_option("--runs", re.runs, "random restarts per experiment")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  re_cmd->add_flag("--gnuplot", re.gnuplot, "emit a gnuplot script")
      ->capture_default_str();

  TrainOpts tr;
  CommonOpts tr_common;
  CLI::App* tr_cmd = app.add_subcommand(
      "train", "toy encoder training with a linear-probe readout");
  add_common(tr_cmd, tr_common);
  tr_cmd->add_option("--variant", tr.variant, "training variant")
      ->check(CLI::IsMember({"infonce", "quadratic", "backprop_alpha",
                             "alpha_cl", "alpha_cl_direct"}))
      ->capture_default_str();
  tr_cmd->add_option("--epochs", tr.epochs, "epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr_cmd->add_option("--batch", tr.batch, "batch size")
      ->capture_default_str();
  tr_cmd->add_option("--embed", tr.embed, "embedding dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr_cmd->add_option("--hidden", tr.hidden, "hidden layer widths")
      ->delimiter(',')
      ->default_str("16");
  tr_cmd->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
  tr_cmd->add_option("--optimizer", tr.optimizer, "optimizer")
      ->check(CLI::IsMember({"sgd", "adam"}))
      ->capture_default_str();
  tr_cmd->add_option("--loss-tau", tr.loss_tau, "loss temperature")
      ->capture_default_str();
  tr_cmd->add_option("--loss-eps", tr.loss_eps, "loss offset")
      ->capture_default_str();
  tr_cmd->add_option("--reg", tr.reg, "importance regularizer")
      ->check(CLI::IsMember({"entropy", "inverse", "square"}))
      ->capture_default_str();
  tr_cmd->add_option("--reg-tau", tr.reg_tau, "regularizer temperature")
      ->capture_default_str();
  tr_cmd->add_option("--gamma", tr.gamma, "inverse-power exponent")
      ->capture_default_str();
  tr_cmd->add_option("--p", tr.p, "direct-assignment power")
      ->capture_default_str();
  tr_cmd->add_option("--direct-tau", tr.direct_tau, "direct temperature")
      ->capture_default_str();
  tr_cmd->add_option("--normalized", tr.normalized,
                     "row-normalize the direct assignment")
      ->capture_default_str();
  tr_cmd->add_option("--distance", tr.distance, "direct distance convention")
      ->check(CLI::IsMember({"euclidean", "half_square_root"}))
      ->capture_default_str();
  tr_cmd->add_option("--classes", tr.classes, "task classes")
      ->capture_default_str();
  tr_cmd->add_option("--per-class", tr.per_class, "samples per class")
      ->capture_default_str();
  tr_cmd->add_option("--dim", tr.dim, "task input dimension")
      ->capture_default_str();
  tr_cmd->add_option("--center-scale", tr.center_scale, "class center radius")
      ->capture_default_str();
  tr_cmd->add_option("--cluster-noise", tr.cluster_noise, "within-class noise")
      ->capture_default_str();
  tr_cmd->add_option("--aug-noise", tr.aug_noise, "augmentation noise")
      ->capture_default_str();
  tr_cmd->add_option("--nuisance-dims", tr.nuisance_dims,
                     "class-independent trailing dims")
      ->capture_default_str();
  tr_cmd->add_option("--nuisance-scale", tr.nuisance_scale,
                     "nuisance dimension scale")
      ->capture_default_str();

  VerifyOpts va;
  CommonOpts va_common;
  va_common.seed = 2026;
  CLI::App* va_cmd = app.add_subcommand(
      "verify-all", "run the complete behavioral criteria suite");
  add_common(va_cmd, va_common);
  va_cmd->add_option("--jobs", va.jobs, "worker threads (0 = hardware)")
      ->capture_default_str();

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  struct Dispatch {
    CLI::App* cmd;
    CommonOpts* common;
    std::function<int(RunContext&)> run;
  };
  const std::vector<Dispatch> table{
      {gc_cmd, &gc_common, [&](RunContext& c) { return run_grad_check(gc, c); }},
      {as_cmd, &as_common,
       [&](RunContext& c) { return run_alpha_solve(as, c); }},
      {fl_cmd, &fl_common, [&](RunContext& c) { return run_flow_cmd(fl, c); }},
      {re_cmd, &re_common, [&](RunContext& c) { return run_relu_cmd(re, c); }},
      {tr_cmd, &tr_common, [&](RunContext& c) { return run_train_cmd(tr, c); }},
      {va_cmd, &va_common,
       [&](RunContext& c) { return run_verify_all(va, c); }},
  };

  for (const auto& d : table) {
    if (!d.cmd->parsed()) continue;
    if (const int rc = apply_subcommand_config(d.cmd); rc != 0) return rc;
    RunContext ctx;
    ctx.subcommand = d.cmd->get_name();
    ctx.seed = d.common->seed;
    ctx.outdir = d.common->out;
    ctx.config_text = d.cmd->config_to_str(true, false);
    ctx.started = iso_utc(std::chrono::system_clock::now());
    std::error_code ec;
    std::filesystem::create_directories(ctx.outdir, ec);
    if (ec) {
      std::fprintf(stderr, "cannot create %s: %s\n", ctx.outdir.c_str(),
                   ec.message().c_str());
      return 2;
    }
    const int rc = d.run(ctx);
    write_manifest(ctx);
    return rc;
  }
  return 2;  // unreachable with require_subcommand(1)
}
