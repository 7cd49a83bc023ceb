#include "polyspec/wave.hpp"

#include <cmath>

#include "polyspec/error.hpp"

namespace polyspec {

namespace {

constexpr double kGaussX[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr double kGaussW[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// Modal amplitude and velocity of one mode at time t.
struct Modal {
  Eigen::VectorXd c, v;
};

Modal modal_state(const Eigen::VectorXd& omega, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  const Eigen::VectorXd& fk, const WaveSource* source, int panels_per_unit, double t) {
  const Eigen::Index m = omega.size();
  Modal s{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  for (Eigen::Index k = 0; k < m; ++k) {
    const double w = omega(k);
    if (w == 0.0) {
      s.c(k) = a(k) + b(k) * t;
      s.v(k) = b(k);
    } else {
      s.c(k) = a(k) * std::cos(w * t) + b(k) * std::sin(w * t) / w;
      s.v(k) = -a(k) * w * std::sin(w * t) + b(k) * std::cos(w * t);
    }
  }
  if (source && t > 0.0) {
    // Duhamel: c_k += int_0^t G_k(t - r) pulse(r) dr * f_k.
    const int panels = std::max(1, static_cast<int>(std::ceil(t * panels_per_unit)));
    const double dr = t / panels;
    Eigen::VectorXd ic = Eigen::VectorXd::Zero(m), iv = Eigen::VectorXd::Zero(m);
    for (int p = 0; p < panels; ++p)
      for (int q = 0; q < 3; ++q) {
        const double r = (p + kGaussX[q]) * dr;
        const double f = source->pulse(r) * kGaussW[q] * dr;
        if (f == 0.0) continue;
        const double lag = t - r;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double w = omega(k);
          ic(k) += f * (w == 0.0 ? lag : std::sin(w * lag) / w);
          iv(k) += f * (w == 0.0 ? 1.0 : std::cos(w * lag));
        }
      }
    s.c += ic.cwiseProduct(fk);
    s.v += iv.cwiseProduct(fk);
  }
  return s;
}

}  // namespace

namespace {

// Fixed (Dirichlet) nodes carry no modal content.
Eigen::VectorXd free_part(const EigenSystem& es, const Eigen::VectorXd& v) {
  Eigen::VectorXd w = v;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!es.free.empty() && !es.free[static_cast<std::size_t>(i)]) w(i) = 0.0;
  return w;
}

}  // namespace

Eigen::VectorXd modal_coefficients(const EigenSystem& es, const Eigen::VectorXd& v) {
  return es.vectors.transpose() * (es.mass * free_part(es, v));
}

double projection_residual(const EigenSystem& es, const Eigen::VectorXd& v) {
  const Eigen::VectorXd w = free_part(es, v);
  const double total = std::sqrt(std::max(w.dot(es.mass * w), 0.0));
  if (total == 0.0) return 0.0;
  const Eigen::VectorXd r = w - es.vectors * modal_coefficients(es, w);
  return std::sqrt(std::max(r.dot(es.mass * r), 0.0)) / total;
}

WaveField synthesize_wave(const EigenSystem& es, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const std::vector<double>& times, const WaveSource* source, const WaveOptions& opt,
                          Execution exec) {
  const Eigen::Index n = es.vectors.rows();
  if (a.size() != n || b.size() != n) throw SolverError("initial data has the wrong length");
  if (source && source->profile.size() != n) throw SolverError("source profile has the wrong length");
  for (double t : times)
    if (!(t >= 0.0)) throw SolverError("requested times must be non-negative");
  WaveField out;
  out.times = times;
  out.truncation = std::max(projection_residual(es, a), projection_residual(es, b));
  if (source) out.truncation = std::max(out.truncation, projection_residual(es, source->profile));
  if (out.truncation > opt.max_truncation)
    throw SolverError("initial data is under-resolved by the computed modes (projection residual " +
                      std::to_string(out.truncation) + ")");

  const Eigen::VectorXd ak = modal_coefficients(es, a), bk = modal_coefficients(es, b);
  const Eigen::VectorXd fk = source ? modal_coefficients(es, source->profile) : Eigen::VectorXd::Zero(ak.size());
  Eigen::VectorXd omega(es.values.size());
  for (Eigen::Index k = 0; k < omega.size(); ++k) {
    // Round-off negative or tiny eigenvalues are the constant mode.
    const double lam = es.values(k);
    omega(k) = lam <= 1e-10 * (1.0 + es.values.cwiseAbs().maxCoeff()) ? 0.0 : std::sqrt(lam);
  }
  const auto nt = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd coef(ak.size(), nt), vel(ak.size(), nt);
  const WaveSource* src = source;
  auto one = [&](Eigen::Index j) {
    const Modal s = modal_state(omega, ak, bk, fk, src, opt.duhamel_panels, times[static_cast<std::size_t>(j)]);
    coef.col(j) = s.c;
    vel.col(j) = s.v;
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < nt; ++j) one(j);
  } else {
    for (Eigen::Index j = 0; j < nt; ++j) one(j);
  }
  out.u = es.vectors * coef;
  out.ut = es.vectors * vel;
  out.energy.resize(nt);
  // Mass-orthonormal modes: energy is diagonal in modal coordinates.
  for (Eigen::Index j = 0; j < nt; ++j) {
    double e = 0.0;
    for (Eigen::Index k = 0; k < omega.size(); ++k)
      e += omega(k) * omega(k) * coef(k, j) * coef(k, j) + vel(k, j) * vel(k, j);
    out.energy(j) = e;
  }
  return out;
}

}  // namespace polyspec
