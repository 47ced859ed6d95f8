#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace alphacl::verify {

double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

double central_diff(const std::function<double(double)>& f, double x) {
  const double h = fd_step(x);
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

bool fd_close(double analytic, double numeric, double rel, double abs_tol) {
  const double diff = std::abs(analytic - numeric);
  return diff <= abs_tol + rel * std::max(std::abs(analytic),
                                          std::abs(numeric));
}

Eigen::MatrixXd fd_matrix_gradient(
    const Eigen::MatrixXd& x,
    const std::function<double(const Eigen::MatrixXd&)>& f) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double h = fd_step(x(r, c));
      probe(r, c) = x(r, c) + h;
      const double fp = f(probe);
      probe(r, c) = x(r, c) - h;
      const double fm = f(probe);
      probe(r, c) = x(r, c);
      g(r, c) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

Eigen::MatrixXd fd_weight_gradient(
    const Encoder& enc, std::size_t layer,
    const std::function<double(const Encoder&)>& f) {
  Encoder probe = enc;
  const Eigen::MatrixXd& w = enc.weights[layer];
  Eigen::MatrixXd g(w.rows(), w.cols());
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const double h = fd_step(w(r, c));
      probe.weights[layer](r, c) = w(r, c) + h;
      const double fp = f(probe);
      probe.weights[layer](r, c) = w(r, c) - h;
      const double fm = f(probe);
      probe.weights[layer](r, c) = w(r, c);
      g(r, c) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

Eigen::MatrixXd brute_force_cov(const Eigen::MatrixXd& alpha,
                                const Eigen::MatrixXd& a,
                                const Eigen::MatrixXd& a_aug,
                                const Eigen::MatrixXd& b,
                                const Eigen::MatrixXd& b_aug) {
  const Eigen::Index n = alpha.rows();
  const Eigen::Index p = a.cols();
  const Eigen::Index q = b.cols();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      for (Eigen::Index u = 0; u < p; ++u) {
        for (Eigen::Index v = 0; v < q; ++v) {
          c(u, v) += alpha(i, j) * (a(i, u) - a(j, u)) * (b(i, v) - b(j, v));
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) beta += alpha(i, j);
    }
    for (Eigen::Index u = 0; u < p; ++u) {
      for (Eigen::Index v = 0; v < q; ++v) {
        c(u, v) -=
            beta * (a(i, u) - a_aug(i, u)) * (b(i, v) - b_aug(i, v));
      }
    }
  }
  return c;
}

double infonce_softmax_loss(double tau, double eps, const DistanceSet& d) {
  const Eigen::Index n = d.cross.rows();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    // log-sum-exp over the denominator terms, anchored at the max exponent.
    double m = -d.intra(i) / tau;  // the eps term's exponent
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) m = std::max(m, -d.cross(i, j) / tau);
    }
    double s = eps > 0.0 ? eps * std::exp(-d.intra(i) / tau - m) : 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) s += std::exp(-d.cross(i, j) / tau - m);
    }
    const double log_den = m + std::log(s);
    loss += -tau * ((-d.intra(i) / tau) - log_den);
  }
  return loss;
}

Eigen::MatrixXd softmax_alpha(const DistanceSet& d, double tau) {
  const Eigen::Index n = d.cross.rows();
  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) m = std::max(m, -d.cross(i, j) / tau);
    }
    double z = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      alpha(i, j) = std::exp(-d.cross(i, j) / tau - m);
      z += alpha(i, j);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) alpha(i, j) /= z;
    }
  }
  return alpha;
}

SimplexGridResult grid_min_simplex3(
    const std::function<double(const Eigen::Vector3d&)>& f,
    double coarse_step, double refine_step) {
  SimplexGridResult best;
  best.alpha = Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3);
  best.value = std::numeric_limits<double>::infinity();

  const auto scan = [&](double a1_lo, double a1_hi, double a2_lo,
                        double a2_hi, double step) {
    for (double a1 = a1_lo; a1 <= a1_hi + 0.5 * step; a1 += step) {
      const double x1 = std::clamp(a1, 0.0, 1.0);
      for (double a2 = a2_lo; a2 <= a2_hi + 0.5 * step; a2 += step) {
        const double x2 = std::clamp(a2, 0.0, 1.0 - x1);
        const double x3 = 1.0 - x1 - x2;
        if (x3 < -1e-15) continue;
        const Eigen::Vector3d a(x1, x2, std::max(0.0, x3));
        const double v = f(a);
        if (v < best.value) {
          best.value = v;
          best.alpha = a;
        }
      }
    }
  };

  scan(0.0, 1.0, 0.0, 1.0, coarse_step);
  const double w = 1.5 * coarse_step;
  scan(best.alpha(0) - w, best.alpha(0) + w, best.alpha(1) - w,
       best.alpha(1) + w, refine_step);
  return best;
}

double inverse_objective(const Eigen::Vector3d& costs, double tau,
                         double gamma, const Eigen::Vector3d& alpha) {
  double v = 0.0;
  for (int j = 0; j < 3; ++j) {
    if (alpha(j) <= 0.0) return std::numeric_limits<double>::infinity();
    // minimize c.a - sum tau * a^(1-gamma) / (1-gamma); for gamma > 1 the
    // penalty term is +tau * a^(1-gamma)/(gamma-1), a barrier at 0.
    v += costs(j) * alpha(j) +
         tau * std::pow(alpha(j), 1.0 - gamma) / (gamma - 1.0);
  }
  return v;
}

double square_objective(const Eigen::Vector3d& costs, double tau,
                        const Eigen::Vector3d& alpha) {
  double v = 0.0;
  for (int j = 0; j < 3; ++j) {
    v += costs(j) * alpha(j) + 0.5 * tau * alpha(j) * alpha(j);
  }
  return v;
}

Eigen::MatrixXd random_symmetric_with_gap(Rng& rng, int n, double gap,
                                          double lmax_lo, double lmax_hi) {
  Eigen::VectorXd lambda(n);
  lambda(0) = rng.uniform(lmax_lo, lmax_hi);
  for (int k = 1; k < n; ++k) {
    lambda(k) = rng.uniform(-1.0, lambda(0) - gap);
  }
  Eigen::MatrixXd g(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) g(r, c) = rng.normal();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd m = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

void random_embeddings(Rng& rng, int n, int k, Eigen::MatrixXd& z,
                       Eigen::MatrixXd& z_aug) {
  z.resize(n, k);
  z_aug.resize(n, k);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < k; ++c) {
      z(r, c) = rng.normal();
      z_aug(r, c) = rng.normal();
    }
  }
}

}  // namespace alphacl::verify
