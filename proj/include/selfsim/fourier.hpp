#pragma once

// Fourier transforms of self-similar measures via the infinite product
//   mu_hat(xi) = prod_{n>=0} Phi(lambda^n conj(xi)),
//   Phi(u)     = sum_j p_j exp(2 pi i Re(w_j u)),
// with the convention mu_hat(xi) = int exp(2 pi i Re(z conj(xi))) dmu(z).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "selfsim/measure.hpp"
#include "selfsim/parallel.hpp"

namespace selfsim {

namespace detail {

/// Nearest integer for |x| < 2^51 without a libm call.
inline double round_nearest(double x) {
  constexpr double kShift = 6755399441055744.0;  // 1.5 * 2^52
  if (std::abs(x) >= 2251799813685248.0) return std::nearbyint(x);
  return (x + kShift) - kShift;
}

/// cos and sin of 2 pi x. Exact reduction to an octant, then Taylor
/// polynomials accurate to a few ulp on [-pi/4, pi/4].
inline void sincos_turns(double x, double& c, double& s) {
  const double f = x - round_nearest(x);
  const double q = round_nearest(4.0 * f);
  const double t = kTwoPi * (f - 0.25 * q);
  const double t2 = t * t;
  const double sn = t * (1.0 + t2 * (-1.0 / 6 + t2 * (1.0 / 120 + t2 * (-1.0 / 5040 + t2 * (1.0 / 362880 +
                    t2 * (-1.0 / 39916800 + t2 * (1.0 / 6227020800 + t2 * (-1.0 / 1307674368000))))))));
  const double cs = 1.0 + t2 * (-0.5 + t2 * (1.0 / 24 + t2 * (-1.0 / 720 + t2 * (1.0 / 40320 + t2 * (-1.0 / 3628800 +
                    t2 * (1.0 / 479001600 + t2 * (-1.0 / 87178291200 + t2 * (1.0 / 20922789888000))))))));
  switch (static_cast<int>(q) & 3) {
    case 0: c = cs; s = sn; break;
    case 1: c = -sn; s = cs; break;
    case 2: c = -cs; s = -sn; break;
    default: c = sn; s = -cs; break;
  }
}

/// Re(a conj(b)) without the NaN-recovery path of complex multiplication.
inline double dot(Complex a, Complex b) { return a.real() * b.real() + a.imag() * b.imag(); }

inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace detail

/// exp(2 pi i x), with x reduced mod 1 first so large phases keep full accuracy.
inline Complex unit_phase(double x) {
  double c, s;
  detail::sincos_turns(x, c, s);
  return {c, s};
}

inline Complex phi(const IFSDescriptor& ifs, Complex u) {
  const auto digits = ifs.digits();
  const auto probs = ifs.probs().values();
  const Complex ubar = std::conj(u);
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < digits.size(); ++j) {
    double c, s;
    detail::sincos_turns(detail::dot(digits[j], ubar), c, s);
    re += probs[j] * c;
    im += probs[j] * s;
  }
  return {re, im};
}

/// Smallest K with sum_{n>=K} 2 pi max|w| |lambda|^n |xi| < tol.
inline int truncation_index(const IFSDescriptor& ifs, Complex xi, double tol) {
  const double q = std::abs(ifs.lambda());
  double tail = kTwoPi * ifs.max_digit_modulus() * std::abs(xi) / (1.0 - q);
  int k = 0;
  while (tail >= tol && k < 100000) {
    tail *= q;
    ++k;
  }
  return k;
}

/// The tail bound sum_{n>=K} 2 pi max|w| |lambda|^n |xi| for a given K.
inline double truncation_tail(const IFSDescriptor& ifs, Complex xi, int k) {
  const double q = std::abs(ifs.lambda());
  return kTwoPi * ifs.max_digit_modulus() * std::abs(xi) * std::pow(q, k) / (1.0 - q);
}

/// Truncated product with at least min_factors factors. The modulus of the
/// result bounds |mu_hat(xi)| from above, since every omitted factor has
/// modulus at most 1.
inline Complex mu_hat(const IFSDescriptor& ifs, Complex xi, double tol = 1e-12, int min_factors = 0) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const int k = std::max(truncation_index(ifs, xi, tol), min_factors);
  Complex prod{1.0, 0.0};
  Complex u = std::conj(xi);
  for (int n = 0; n < k; ++n) {
    prod = detail::mul(prod, phi(ifs, u));
    u = detail::mul(u, ifs.lambda());
  }
  return prod;
}

/// Direct Fourier sum over the atoms of a discrete measure.
inline Complex fourier_sum(const DiscreteMeasure& mu, Complex xi) {
  double re = 0.0, im = 0.0;
  for (const auto& a : mu.atoms()) {
    double c, s;
    detail::sincos_turns(detail::dot(a.position, xi), c, s);
    re += a.weight * c;
    im += a.weight * s;
  }
  return {re, im};
}

struct ScanCell {
  int i = 0;
  int j = 0;
  double max_abs = 0.0;
};

/// Maxima of |mu_hat| over the unit cells [i, i+1) x [j, j+1) meeting |xi| <= T.
struct ScanField {
  double T = 0.0;
  double cell_size = 1.0;
  int subgrid_k = 4;
  double tol = 1e-12;
  std::vector<ScanCell> cells;

  const ScanCell* find(int i, int j) const {
    for (const auto& c : cells)
      if (c.i == i && c.j == j) return &c;
    return nullptr;
  }
};

/// Unit cells meeting the closed disk of radius T, in row-major order
/// (j outer, i inner).
inline std::vector<std::pair<int, int>> disk_cells(double T) {
  std::vector<std::pair<int, int>> out;
  const int lim = static_cast<int>(std::ceil(T));
  for (int j = -lim; j < lim; ++j) {
    const double cy = std::clamp(0.0, static_cast<double>(j), static_cast<double>(j + 1));
    for (int i = -lim; i < lim; ++i) {
      const double cx = std::clamp(0.0, static_cast<double>(i), static_cast<double>(i + 1));
      if (cx * cx + cy * cy <= T * T) out.emplace_back(i, j);
    }
  }
  return out;
}

/// Sample point (a, b) of the k x k lattice anchored at the cell's corner.
inline Complex cell_sample(int i, int j, int a, int b, int k) {
  return {i + static_cast<double>(a) / k, j + static_cast<double>(b) / k};
}

inline ScanField grid_scan(const IFSDescriptor& ifs, double T, int subgrid_k, double tol = 1e-12, unsigned workers = 0) {
  if (!(T >= 1.0)) throw DomainError("scan radius must be at least 1");
  if (subgrid_k < 1) throw DomainError("subgrid size must be positive");
  const auto layout = disk_cells(T);
  ScanField field{T, 1.0, subgrid_k, tol, {}};
  field.cells.resize(layout.size());
  parallel_for(layout.size(), workers, [&](std::size_t idx) {
    const auto [i, j] = layout[idx];
    double best = 0.0;
    for (int a = 0; a < subgrid_k; ++a)
      for (int b = 0; b < subgrid_k; ++b) best = std::max(best, std::abs(mu_hat(ifs, cell_sample(i, j, a, b, subgrid_k), tol)));
    field.cells[idx] = {i, j, best};
  });
  return field;
}

namespace detail {

template <class Transform>
double energy_integral_impl(double T, double step, unsigned workers, Transform&& transform) {
  if (!(step > 0.0 && step <= 0.5)) throw DomainError("energy quadrature step must lie in (0, 1/2]");
  if (!(T > 0.0)) throw DomainError("energy radius must be positive");
  const int half = static_cast<int>(std::ceil(T / step));
  const std::size_t rows = static_cast<std::size_t>(2 * half);
  std::vector<double> row_sums(rows, 0.0);
  parallel_for(rows, workers, [&](std::size_t r) {
    const double y = (static_cast<double>(r) - half + 0.5) * step;
    double s = 0.0;
    for (int c = -half; c < half; ++c) {
      const double x = (c + 0.5) * step;
      if (x * x + y * y >= T * T) continue;
      s += std::norm(transform(Complex{x, y}));
    }
    row_sums[r] = s;
  });
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total * step * step;
}

}  // namespace detail

/// Midpoint rule for int_{|xi|<T} |mu_hat|^2 on a lattice of spacing step.
inline double energy_integral(const IFSDescriptor& ifs, double T, double step, double tol = 1e-9, unsigned workers = 0) {
  return detail::energy_integral_impl(T, step, workers, [&](Complex xi) { return mu_hat(ifs, xi, tol); });
}

inline double energy_integral(const DiscreteMeasure& mu, double T, double step, unsigned workers = 0) {
  return detail::energy_integral_impl(T, step, workers, [&](Complex xi) { return fourier_sum(mu, xi); });
}

}  // namespace selfsim
