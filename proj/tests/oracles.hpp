#pragma once

// Reference computations for the tests. Written against plain std::vector so
// they share no code path with the Eigen-based library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;
using Vector = std::vector<double>;

struct WeightedEdge {
  std::size_t u, v;
  double w;
};

inline Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, Vector(c, 0.0)); }

inline Matrix laplacian(std::size_t n, const std::vector<WeightedEdge> &edges) {
  Matrix L = zeros(n, n);
  for (const auto &e : edges) {
    L[e.u][e.u] += e.w;
    L[e.v][e.v] += e.w;
    L[e.u][e.v] -= e.w;
    L[e.v][e.u] -= e.w;
  }
  return L;
}

/// Cyclic Jacobi rotations; returns ascending eigenvalues of a symmetric A.
inline Vector jacobi_eigenvalues(Matrix a, double tol = 1e-15, int max_sweeps = 200) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        scale += a[i][j] * a[i][j];
        if (i != j)
          off += a[i][j] * a[i][j];
      }
    if (off <= tol * tol * std::max(scale, 1e-300))
      break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0)
          continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  Vector ev(n);
  for (std::size_t i = 0; i < n; ++i)
    ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Gaussian elimination with partial pivoting.
inline Vector solve(Matrix a, Vector b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col]))
        piv = r;
    if (a[piv][col] == 0.0)
      throw std::runtime_error("singular system in oracle");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k)
        a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k)
      s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// w^T (L kron I_d) w with the Kronecker product formed explicitly.
inline double kron_quadratic_form(const Matrix &L, const Vector &w, std::size_t d) {
  const std::size_t n = L.size();
  Matrix K = zeros(n * d, n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < d; ++k)
        K[i * d + k][j * d + k] = L[i][j];
  double s = 0.0;
  for (std::size_t r = 0; r < n * d; ++r)
    for (std::size_t c = 0; c < n * d; ++c)
      s += w[r] * K[r][c] * w[c];
  return s;
}

struct Dataset {
  Matrix x; // m rows, d cols
  Vector y;
};

inline double squared_loss(const Dataset &ds, const double *w) {
  double s = 0.0;
  for (std::size_t r = 0; r < ds.x.size(); ++r) {
    double pred = 0.0;
    for (std::size_t k = 0; k < ds.x[r].size(); ++k)
      pred += ds.x[r][k] * w[k];
    s += (ds.y[r] - pred) * (ds.y[r] - pred);
  }
  return s / static_cast<double>(ds.x.size());
}

/// sum_i L_i(w_i) + alpha * sum_edges A |w_u - w_v|^2
inline double gtv_objective(const std::vector<Dataset> &data,
                            const std::vector<WeightedEdge> &edges, double alpha,
                            const Vector &w, std::size_t d) {
  double f = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    f += squared_loss(data[i], &w[i * d]);
  for (const auto &e : edges) {
    double diff = 0.0;
    for (std::size_t k = 0; k < d; ++k)
      diff += (w[e.u * d + k] - w[e.v * d + k]) * (w[e.u * d + k] - w[e.v * d + k]);
    f += alpha * e.w * diff;
  }
  return f;
}

/// Least squares argmin_c sum_i (1/m_i)|y_i - X_i c|^2 via normal equations.
inline Vector pooled_least_squares(const std::vector<Dataset> &data, std::size_t d) {
  Matrix A = zeros(d, d);
  Vector b(d, 0.0);
  for (const auto &ds : data) {
    const double m = static_cast<double>(ds.x.size());
    for (std::size_t r = 0; r < ds.x.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) {
        b[j] += ds.x[r][j] * ds.y[r] / m;
        for (std::size_t k = 0; k < d; ++k)
          A[j][k] += ds.x[r][j] * ds.x[r][k] / m;
      }
  }
  return solve(A, b);
}

/// Central differences of f at x with step h.
inline Vector central_difference(const std::function<double(const Vector &)> &f,
                                 Vector x, double h) {
  Vector g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double fp = f(x);
    x[k] = orig - h;
    const double fm = f(x);
    x[k] = orig;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

} // namespace oracle
