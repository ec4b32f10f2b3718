#include "edgmat/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace edgmat {

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec mat_vec(const std::vector<Vec>& m, const Vec& v) {
  Vec out(v.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = dot(m[i], v);
  return out;
}

void remove_component(Vec& v, const Vec& u) {
  const double d = dot(v, u);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * u[i];
}

void fix_sign(Vec& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

// Unit start vector with distinct, non-zero entries, orthogonalised against `orth`.
Vec start_vector(std::size_t d, const Vec* orth) {
  Vec v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 / static_cast<double>(i + 1);
  if (orth) remove_component(v, *orth);
  double n = norm(v);
  if (n < 1e-12) {  // start happened to be parallel to orth; use a basis vector
    for (std::size_t j = 0; j < d; ++j) {
      std::fill(v.begin(), v.end(), 0.0);
      v[j] = 1.0;
      if (orth) remove_component(v, *orth);
      if ((n = norm(v)) > 1e-6) break;
    }
  }
  for (double& x : v) x /= n;
  return v;
}

Vec power_iteration(const std::vector<Vec>& cov, const Vec* orth, double scale, double tol,
                    std::size_t max_iter) {
  Vec v = start_vector(cov.size(), orth);
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vec w = mat_vec(cov, v);
    if (orth) remove_component(w, *orth);
    const double n = norm(w);
    if (n <= 1e-14 * std::max(scale, 1e-300)) return v;  // remaining spectrum is zero
    for (double& x : w) x /= n;
    if (dot(w, v) < 0.0) {
      for (double& x : w) x = -x;
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) delta = std::max(delta, std::abs(w[i] - v[i]));
    v = std::move(w);
    if (delta < tol) break;
  }
  return v;
}

}  // namespace

Pca2 pca2(const Tensor& x, double tolerance, std::size_t max_iterations) {
  const std::size_t n = x.rows();
  const std::size_t d = x.rank() == 2 ? x.cols() : 1;
  if (d < 2) {
    throw ProjectionError("pca2 needs at least 2 embedding dimensions, got " + std::to_string(d));
  }
  if (n == 0) throw ProjectionError("pca2 needs at least one row");

  Vec mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<Vec> cov(d, Vec(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = x(i, a) - mean[a];
      for (std::size_t b = a; b < d; ++b) cov[a][b] += xa * (x(i, b) - mean[b]);
    }
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov[a][b] /= static_cast<double>(n);
      cov[b][a] = cov[a][b];
    }
    trace += cov[a][a];
  }

  Pca2 out;
  // Deflation: the second search runs in the orthogonal complement of the first.
  out.components[0] = power_iteration(cov, nullptr, trace, tolerance, max_iterations);
  out.components[1] = power_iteration(cov, &out.components[0], trace, tolerance, max_iterations);
  for (int k = 0; k < 2; ++k) {
    fix_sign(out.components[k]);
    out.variances[k] = dot(out.components[k], mat_vec(cov, out.components[k]));
  }

  out.coordinates = Tensor({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 2; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (x(i, j) - mean[j]) * out.components[k][j];
      out.coordinates(i, k) = s;
    }
  }
  return out;
}

}  // namespace edgmat
