#pragma once

// Dyadic L^q spectrum estimators, the Fourier-energy exponent, and the
// desk-scale flattening experiment for convolutions with self-similar measures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfsim/bounds.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/measure.hpp"

namespace selfsim {

/// Irrational offset, in cell units, used for the shifted-grid estimates.
inline const Complex kGridShift{0.6180339887498949, 0.41421356237309515};

/// Offset of the shifted grid at level n. Keeping it a fixed fraction of the
/// cell stops the relative shift from wandering between levels.
inline Complex grid_shift(int n) { return kGridShift * std::ldexp(1.0, -n); }

struct DyadicCell {
  std::int64_t i = 0;
  std::int64_t j = 0;
  double mass = 0.0;
};

struct DyadicHistogram {
  int level = 0;
  std::vector<DyadicCell> cells;  ///< sorted by (i, j)

  double max_mass() const {
    double m = 0.0;
    for (const auto& c : cells) m = std::max(m, c.mass);
    return m;
  }
};

inline DyadicHistogram dyadic_histogram(const DiscreteMeasure& mu, int n, Complex shift = {}) {
  if (n < 0) throw DomainError("dyadic level must be non-negative");
  if (n > 40) throw DomainError("dyadic level exceeds 40");
  const double scale = std::ldexp(1.0, n);
  std::vector<DyadicCell> keyed;
  keyed.reserve(mu.size());
  for (const auto& a : mu.atoms()) {
    const Complex z = a.position + shift;
    keyed.push_back({static_cast<std::int64_t>(std::floor(z.real() * scale)),
                     static_cast<std::int64_t>(std::floor(z.imag() * scale)), a.weight});
  }
  std::sort(keyed.begin(), keyed.end(), [](const DyadicCell& x, const DyadicCell& y) {
    return x.i != y.i ? x.i < y.i : x.j < y.j;
  });
  DyadicHistogram h{n, {}};
  for (const auto& c : keyed) {
    if (!h.cells.empty() && h.cells.back().i == c.i && h.cells.back().j == c.j) h.cells.back().mass += c.mass;
    else h.cells.push_back(c);
  }
  return h;
}

inline double lq_moment(const DiscreteMeasure& mu, int n, double q, Complex shift = {}) {
  if (!(q > 1.0)) throw DomainError("lq_moment requires q > 1");
  double s = 0.0;
  for (const auto& c : dyadic_histogram(mu, n, shift).cells) s += std::pow(c.mass, q);
  return s;
}

/// Smallest distance between two distinct atoms (infinity for a single atom).
inline double min_atom_gap(const DiscreteMeasure& mu) {
  const auto atoms = mu.atoms();
  if (atoms.size() < 2) return std::numeric_limits<double>::infinity();
  double xmin = atoms[0].position.real(), xmax = xmin, ymin = atoms[0].position.imag(), ymax = ymin;
  for (const auto& a : atoms) {
    xmin = std::min(xmin, a.position.real());
    xmax = std::max(xmax, a.position.real());
    ymin = std::min(ymin, a.position.imag());
    ymax = std::max(ymax, a.position.imag());
  }
  const double extent = std::max({xmax - xmin, ymax - ymin, 1e-300});
  double h = 2.0 * extent / std::max(1.0, std::sqrt(static_cast<double>(atoms.size())) - 1.0);
  // A pair closer than h always lands in neighbouring cells; grow h until one is seen.
  for (int attempt = 0; attempt < 200; ++attempt, h *= 2.0) {
    std::unordered_map<detail::CellKey, std::vector<std::size_t>, detail::CellKeyHash> grid;
    grid.reserve(atoms.size());
    auto key = [&](Complex z) {
      return detail::CellKey{static_cast<std::int64_t>(std::floor((z.real() - xmin) / h)),
                             static_cast<std::int64_t>(std::floor((z.imag() - ymin) / h))};
    };
    for (std::size_t k = 0; k < atoms.size(); ++k) grid[key(atoms[k].position)].push_back(k);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const auto c = key(atoms[k].position);
      for (std::int64_t dx = -1; dx <= 1; ++dx)
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          const auto it = grid.find({c.x + dx, c.y + dy});
          if (it == grid.end()) continue;
          for (std::size_t other : it->second)
            if (other > k) best = std::min(best, std::abs(atoms[other].position - atoms[k].position));
        }
    }
    if (best <= h) return best;
  }
  return std::numeric_limits<double>::infinity();
}

/// Finest admissible level: 2^{-n} must stay at least 4 times the resolution.
inline int finest_resolved_level(double resolution) {
  if (!std::isfinite(resolution)) return std::numeric_limits<int>::max();
  if (!(resolution > 0.0)) return std::numeric_limits<int>::min();
  return static_cast<int>(std::floor(-std::log2(4.0 * resolution) + 1e-12));
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw DegenerateRangeError("regression needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) mx += x[k], my += y[k];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateRangeError("regression abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r = y[k] - f.intercept - f.slope * x[k];
      rss += r * r;
    }
    f.stderr_slope = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

struct LevelRow {
  int n = 0;
  double s_n = 0.0;     ///< moment sum, or max cell mass for q = infinity
  double log_s = 0.0;
  double abscissa = 0.0;
};

struct DimEstimate {
  double q = 2.0;       ///< infinity for the max-mass estimator
  double slope = 0.0;   ///< reported value, clamped to [0, 2]
  double stderr_slope = 0.0;
  double raw_slope = 0.0;
  double shifted_slope = 0.0;
  bool clamped = false;
  int n_min = 0;
  int n_max = 0;
  int requested_n_max = 0;
  double resolution = 0.0;
  std::vector<LevelRow> rows;  ///< unshifted grid
};

namespace detail {

inline int effective_n_max(const DiscreteMeasure& mu, int n_min, int n_max, double resolution, double& used) {
  if (n_min < 0 || n_max < n_min) throw DomainError("need 0 <= n_min <= n_max");
  used = resolution > 0.0 ? resolution : min_atom_gap(mu);
  const int top = std::min(n_max, finest_resolved_level(used));
  if (top - n_min + 1 < 3)
    throw DegenerateRangeError("fewer than 3 dyadic levels are coarser than 4x the atom resolution");
  return top;
}

template <class Stat>
std::pair<LinearFit, std::vector<LevelRow>> level_fit(int n_min, int n_max, double abscissa_factor, Stat&& stat) {
  std::vector<double> xs, ys;
  std::vector<LevelRow> rows;
  for (int n = n_min; n <= n_max; ++n) {
    const double s = stat(n);
    const double x = abscissa_factor * n * -std::log(2.0);
    rows.push_back({n, s, std::log(s), x});
    xs.push_back(x);
    ys.push_back(std::log(s));
  }
  return {least_squares(xs, ys), std::move(rows)};
}

inline DimEstimate finish(DimEstimate e, const LinearFit& plain, const LinearFit& shifted) {
  e.raw_slope = plain.slope;
  e.shifted_slope = shifted.slope;
  const bool use_shifted = shifted.slope < plain.slope;
  const double v = use_shifted ? shifted.slope : plain.slope;
  e.stderr_slope = use_shifted ? shifted.stderr_slope : plain.stderr_slope;
  e.slope = std::clamp(v, 0.0, 2.0);
  e.clamped = e.slope != v;
  return e;
}

}  // namespace detail

inline DimEstimate dim_inf_estimate(const DiscreteMeasure& mu, int n_min, int n_max, double resolution = 0.0) {
  DimEstimate e;
  e.q = std::numeric_limits<double>::infinity();
  e.n_min = n_min;
  e.requested_n_max = n_max;
  e.n_max = detail::effective_n_max(mu, n_min, n_max, resolution, e.resolution);
  auto [plain, rows] = detail::level_fit(n_min, e.n_max, 1.0, [&](int n) { return dyadic_histogram(mu, n).max_mass(); });
  auto shifted = detail::level_fit(n_min, e.n_max, 1.0,
                                   [&](int n) { return dyadic_histogram(mu, n, grid_shift(n)).max_mass(); }).first;
  e.rows = std::move(rows);
  return detail::finish(std::move(e), plain, shifted);
}

/// Least-squares slope of log s_n(mu, q) against (q - 1) log 2^{-n}; the
/// smaller of the origin-anchored and shifted-grid estimates is reported.
inline DimEstimate dim_q_estimate(const DiscreteMeasure& mu, double q, int n_min, int n_max, double resolution = 0.0) {
  if (std::isinf(q) && q > 0) return dim_inf_estimate(mu, n_min, n_max, resolution);
  if (!(q > 1.0)) throw DomainError("dim_q_estimate requires q > 1");
  DimEstimate e;
  e.q = q;
  e.n_min = n_min;
  e.requested_n_max = n_max;
  e.n_max = detail::effective_n_max(mu, n_min, n_max, resolution, e.resolution);
  auto [plain, rows] = detail::level_fit(n_min, e.n_max, q - 1.0, [&](int n) { return lq_moment(mu, n, q); });
  auto shifted = detail::level_fit(n_min, e.n_max, q - 1.0, [&](int n) { return lq_moment(mu, n, q, grid_shift(n)); }).first;
  e.rows = std::move(rows);
  return detail::finish(std::move(e), plain, shifted);
}

struct EnergyRow {
  double T = 0.0;
  double energy = 0.0;
};

struct AlphaEstimate {
  double alpha = 0.0;
  double dim2_via_alpha = 0.0;
  double stderr_alpha = 0.0;
  double step = 0.0;
  std::vector<EnergyRow> rows;
};

namespace detail {

template <class Energy>
AlphaEstimate alpha_from(const std::vector<double>& T_values, double step, Energy&& energy) {
  if (T_values.size() < 3) throw DegenerateRangeError("alpha estimation needs at least 3 radii");
  for (std::size_t k = 0; k < T_values.size(); ++k) {
    if (!(T_values[k] > 0.0)) throw DomainError("radii must be positive");
    if (k > 0 && !(T_values[k] > T_values[k - 1])) throw DomainError("radii must be increasing");
  }
  AlphaEstimate out;
  out.step = step;
  std::vector<double> xs, ys;
  for (double T : T_values) {
    const double e = energy(T);
    out.rows.push_back({T, e});
    xs.push_back(std::log(T));
    ys.push_back(std::log(e));
  }
  const LinearFit f = least_squares(xs, ys);
  out.alpha = f.slope;
  out.stderr_alpha = f.stderr_slope;
  out.dim2_via_alpha = 2.0 - f.slope;
  return out;
}

}  // namespace detail

/// Growth exponent of int_{|xi|<T} |eta_hat|^2 from direct Fourier sums.
inline AlphaEstimate alpha_estimate(const DiscreteMeasure& mu, const std::vector<double>& T_values, double step,
                                    unsigned workers = 0) {
  return detail::alpha_from(T_values, step, [&](double T) { return energy_integral(mu, T, step, workers); });
}

/// Same exponent, with the transform evaluated through the infinite product.
inline AlphaEstimate alpha_estimate(const IFSDescriptor& ifs, const std::vector<double>& T_values, double step,
                                    double tol = 1e-9, unsigned workers = 0) {
  return detail::alpha_from(T_values, step, [&](double T) { return energy_integral(ifs, T, step, tol, workers); });
}

struct FlatteningReport {
  double kappa = 0.0;
  double epsilon = 0.0;
  double sigma = 0.0;
  double dim2_nu = 0.0;
  double dim2_conv = 0.0;
  double stderr_nu = 0.0;
  double stderr_conv = 0.0;
  double margin = 0.0;
  int n_min = 0;
  int n_max = 0;
  int depth = 0;
  std::size_t conv_atoms = 0;
  double resolution = 0.0;
};

/// Estimates dim_2(nu) and dim_2(mu * nu) on common dyadic levels and
/// compares the gain against sigma = 2 eps from the flattening equation.
/// The convolution is resolved no finer than the coarser of its factors.
inline FlatteningReport flattening_check(const IFSDescriptor& ifs, const DiscreteMeasure& nu, int n_min, int n_max,
                                         double kappa, int depth = 16, double regularity_slack = 0.05) {
  if (ifs.is_atomic()) throw RegimeError("flattening requires a non-atomic IFS");
  if (!(kappa > 0.0 && kappa < 2.0)) throw DomainError("kappa must lie in (0, 2)");
  FlatteningReport rep;
  rep.kappa = kappa;
  rep.depth = depth;
  const FlatteningSolution sol = solve_flattening_epsilon(ifs, kappa);
  rep.epsilon = sol.epsilon;
  rep.sigma = sol.sigma;

  const DiscreteMeasure mu = finite_approximation(ifs, depth);
  const double gap_mu = min_atom_gap(mu);
  const double gap_nu = min_atom_gap(nu);
  rep.resolution = std::isfinite(gap_nu) ? std::max(gap_mu, gap_nu) : gap_mu;

  const DimEstimate e_nu = dim_q_estimate(nu, 2.0, n_min, n_max, rep.resolution);
  if (e_nu.slope > 2.0 - kappa + regularity_slack)
    throw PreconditionError("nu is too regular: dim_2(nu) exceeds 2 - kappa");
  const DiscreteMeasure conv = convolve(mu, nu);
  const DimEstimate e_conv = dim_q_estimate(conv, 2.0, n_min, n_max, rep.resolution);
  rep.dim2_nu = e_nu.slope;
  rep.stderr_nu = e_nu.stderr_slope;
  rep.dim2_conv = e_conv.slope;
  rep.stderr_conv = e_conv.stderr_slope;
  rep.n_min = n_min;
  rep.n_max = std::min(e_nu.n_max, e_conv.n_max);
  rep.conv_atoms = conv.size();
  rep.margin = rep.dim2_conv - rep.dim2_nu - rep.sigma;
  return rep;
}

/// Equally weighted atoms spaced evenly on the segment [from, to).
inline DiscreteMeasure segment_measure(Complex from, Complex to, std::size_t count) {
  if (count == 0) throw DomainError("segment needs at least one atom");
  std::vector<Atom> atoms;
  atoms.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    atoms.push_back({from + (to - from) * (static_cast<double>(k) / static_cast<double>(count)), 1.0 / static_cast<double>(count)});
  return DiscreteMeasure(std::move(atoms));
}

}  // namespace selfsim
