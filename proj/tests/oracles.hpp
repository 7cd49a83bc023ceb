#pragma once

// Reference solutions that share no code with the library.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// cos(k a) and k sin(k a) as functions of k^2 (continued to k^2 < 0).
inline double c_fn(double k2, double a) { return k2 >= 0 ? std::cos(std::sqrt(k2) * a) : std::cosh(std::sqrt(-k2) * a); }
inline double s_fn(double k2, double a) {
  if (k2 >= 0) return std::sqrt(k2) * std::sin(std::sqrt(k2) * a);
  return -std::sqrt(-k2) * std::sinh(std::sqrt(-k2) * a);
}

/// Two layers [0, a] and [a, a + b] with Neumann ends, transmission conditions
/// u continuous and w u' continuous at x = a, transverse shifts mu_left/right
/// (k^2 = lambda - mu on each side). Returns the eigenvalues below lambda_max.
inline std::vector<double> two_layer_eigenvalues(double a, double b, double w_left, double w_right, double mu_left,
                                                 double mu_right, double lambda_max) {
  auto f = [&](double lam) {
    const double kl = lam - mu_left, kr = lam - mu_right;
    return w_left * s_fn(kl, a) * c_fn(kr, b) + w_right * c_fn(kl, a) * s_fn(kr, b);
  };
  std::vector<double> roots;
  if (mu_left == 0.0 && mu_right == 0.0) roots.push_back(0.0);
  const double step = 1e-3;
  double lo = 1e-9, flo = f(lo);
  for (double hi = lo + step; hi <= lambda_max; hi += step) {
    const double fhi = f(hi);
    if (flo == 0.0) {
      roots.push_back(lo);
    } else if ((flo < 0) != (fhi < 0)) {
      double x0 = lo, x1 = hi, f0 = flo;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (x0 + x1);
        const double fm = f(mid);
        if ((fm < 0) == (f0 < 0)) {
          x0 = mid;
          f0 = fm;
        } else {
          x1 = mid;
        }
      }
      roots.push_back(0.5 * (x0 + x1));
    }
    lo = hi;
    flo = fhi;
  }
  return roots;
}

/// Leapfrog finite differences for u_tt = u_xx + u_yy on [0, lx] x [0, ly]
/// with Neumann walls (mirror ghosts) and zero initial velocity. Calls
/// probe(t, u) after every step; u is row-major (ny + 1) x (nx + 1).
inline void wave_fd(double lx, double ly, int nx, int ny, const std::function<double(double, double)>& a0, double T,
                    const std::function<void(double, const std::vector<double>&)>& probe,
                    const std::function<double(double, double)>& b0 = {}) {
  const double dx = lx / nx, dy = ly / ny;
  const double dt = 0.4 * std::min(dx, dy);
  const int cols = nx + 1, rows = ny + 1;
  std::vector<double> prev(static_cast<std::size_t>(cols * rows)), cur(prev.size()), next(prev.size());
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) cur[static_cast<std::size_t>(j * cols + i)] = a0(i * dx, j * dy);
  auto lap = [&](const std::vector<double>& u, int i, int j) {
    auto at = [&](int ii, int jj) {
      if (ii < 0) ii = -ii;
      if (ii > nx) ii = 2 * nx - ii;
      if (jj < 0) jj = -jj;
      if (jj > ny) jj = 2 * ny - jj;
      return u[static_cast<std::size_t>(jj * cols + ii)];
    };
    return (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / (dx * dx) +
           (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / (dy * dy);
  };
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i)
      prev[static_cast<std::size_t>(j * cols + i)] = cur[static_cast<std::size_t>(j * cols + i)] + 0.5 * dt * dt * lap(cur, i, j);
  if (b0) {
    std::vector<double> vel(cur.size());
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < cols; ++i) vel[static_cast<std::size_t>(j * cols + i)] = b0(i * dx, j * dy);
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < cols; ++i) {
        const auto k = static_cast<std::size_t>(j * cols + i);
        prev[k] += dt * vel[k] + dt * dt * dt / 6.0 * lap(vel, i, j);
      }
  }
  // prev now holds u(dt); swap roles so cur = u(dt), prev = u(0).
  std::swap(prev, cur);
  double t = dt;
  probe(t, cur);
  while (t < T) {
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < cols; ++i) {
        const auto k = static_cast<std::size_t>(j * cols + i);
        next[k] = 2 * cur[k] - prev[k] + dt * dt * lap(cur, i, j);
      }
    std::swap(prev, cur);
    std::swap(cur, next);
    t += dt;
    probe(t, cur);
  }
}

}  // namespace oracle
