#pragma once

// Closed-form Erdos-Kahane quantities: the Fourier gap eta, the exponent
// delta(epsilon) in the three regimes, explicit covering counts, the
// flattening exponent and the Bernoulli dimension lower-bound pipelines.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/measure.hpp"

namespace selfsim {

/// Binary entropy in nats, extended by continuity to 0 at both endpoints.
inline double entropy_h(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("entropy argument must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log(x) - (1.0 - x) * std::log1p(-x);
}

/// eta(c, p) = p1 + p2 - sqrt(p1^2 + 2 p1 p2 cos(pi c) + p2^2).
inline double eta_two_digit(double c, double p1, double p2) {
  if (!(c > 0.0 && c <= 1.0)) throw DomainError("eta: c must lie in (0, 1]");
  if (!(p1 > 0.0 && p2 > 0.0 && p1 + p2 <= 1.0 + 1e-12)) throw DomainError("eta: need p1, p2 > 0 and p1 + p2 <= 1");
  const double radicand = p1 * p1 + 2.0 * p1 * p2 * std::cos(kPi * c) + p2 * p2;
  return p1 + p2 - std::sqrt(std::max(radicand, 0.0));
}

enum class PhiKind { two_digit, lattice_3digit, simplex_sum_d };

struct EtaOptions {
  int grid = 512;
  double refine_tol = 1e-12;
  int max_refinements = 200;
};

namespace detail {

// 1 - |Phi| upper envelope when only the first two digits are resolved
// (normalized to 0 and 1; the remaining mass contributes at most its weight).
inline double two_digit_gap(double p1, double p2, double x) {
  const double rest = std::max(0.0, 1.0 - p1 - p2);
  const double angle = kTwoPi * (x - std::nearbyint(x));
  const double modulus = std::abs(Complex(p1 + p2 * std::cos(angle), p2 * std::sin(angle)));
  return 1.0 - (modulus + rest);
}

// Same with three digits normalized to 0, 1, i.
inline double lattice_gap(double p1, double p2, double p3, double x, double y) {
  const double rest = std::max(0.0, 1.0 - p1 - p2 - p3);
  const double ax = kTwoPi * (x - std::nearbyint(x));
  const double ay = kTwoPi * (y - std::nearbyint(y));
  const Complex s = p1 + p2 * Complex(std::cos(ax), std::sin(ax)) + p3 * Complex(std::cos(ay), -std::sin(ay));
  return 1.0 - (std::abs(s) + rest);
}

inline double lattice_distance(double x, double y) { return std::hypot(x - std::nearbyint(x), y - std::nearbyint(y)); }

// Minimizes f over [lo, hi] starting from a uniform grid and zooming in.
template <class F>
double zoom_min_1d(F&& f, double lo, double hi, const EtaOptions& opt) {
  double best_x = lo, best = f(lo);
  for (int i = 1; i <= opt.grid; ++i) {
    const double x = lo + (hi - lo) * i / opt.grid;
    const double v = f(x);
    if (v < best) best = v, best_x = x;
  }
  double window = (hi - lo) / opt.grid;
  for (int it = 0;; ++it) {
    if (it >= opt.max_refinements) throw ConvergenceError("eta refinement did not converge");
    const double previous = best;
    for (int i = -10; i <= 10; ++i) {
      const double x = std::clamp(best_x + window * i / 10.0, lo, hi);
      const double v = f(x);
      if (v < best) best = v, best_x = x;
    }
    window *= 0.5;
    if (window < opt.refine_tol && previous - best < opt.refine_tol) break;
  }
  return best;
}

inline double eta_numeric_uncached(PhiKind kind, std::span<const double> p, double c, const EtaOptions& opt) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("eta_numeric: c must lie in (0, 1)");
  const std::size_t needed = kind == PhiKind::two_digit ? 2 : 3;
  if (p.size() < needed) throw DomainError("eta_numeric: not enough weights for this kind");
  const double half = 0.5 * c;
  double value = 0.0;
  if (kind == PhiKind::two_digit || kind == PhiKind::simplex_sum_d) {
    // For simplex_sum_d the envelope depends on y only through s = y_1 + ... + y_d.
    value = detail::zoom_min_1d([&](double x) { return detail::two_digit_gap(p[0], p[1], x); }, half, 1.0 - half, opt);
  } else {
    auto f = [&](double x, double y) { return detail::lattice_gap(p[0], p[1], p[2], x, y); };
    double best = std::numeric_limits<double>::infinity();
    double bx = 0.5, by = 0.5;
    for (int a = 0; a < opt.grid; ++a) {
      for (int b = 0; b < opt.grid; ++b) {
        const double x = -0.5 + (a + 0.5) / opt.grid;
        const double y = -0.5 + (b + 0.5) / opt.grid;
        if (std::hypot(x, y) < half) continue;
        const double v = f(x, y);
        if (v < best) best = v, bx = x, by = y;
      }
    }
    // Interior refinement.
    double window = 1.0 / opt.grid;
    for (int it = 0;; ++it) {
      if (it >= opt.max_refinements) throw ConvergenceError("eta refinement did not converge");
      const double previous = best;
      const double cx = bx, cy = by;
      for (int i = -10; i <= 10; ++i) {
        for (int j = -10; j <= 10; ++j) {
          const double x = cx + window * i / 10.0;
          const double y = cy + window * j / 10.0;
          if (detail::lattice_distance(x, y) < half) continue;
          const double v = f(x, y);
          if (v < best) best = v, bx = x, by = y;
        }
      }
      window *= 0.5;
      if (window < opt.refine_tol && previous - best < opt.refine_tol) break;
    }
    // The infimum is typically attained on the excluded circle's boundary.
    const double on_circle = detail::zoom_min_1d(
        [&](double theta) { return f(half * std::cos(theta), half * std::sin(theta)); }, 0.0, kTwoPi, opt);
    value = std::min(best, on_circle);
  }
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace detail

/// Numerical infimum of 1 - |Phi| over the region where the relevant
/// coordinate stays at distance >= c/2 from the integers (lattice_3digit:
/// from Z^2). p supplies the weights of the normalized digits, in order.
/// Results are memoized per argument set; the search is deterministic.
inline double eta_numeric(PhiKind kind, std::span<const double> p, double c, const EtaOptions& opt = {}) {
  using Key = std::tuple<int, std::vector<double>, double, int, double, int>;
  static std::mutex mutex;
  static std::map<Key, double> cache;
  Key key{static_cast<int>(kind), std::vector<double>(p.begin(), p.end()), c, opt.grid, opt.refine_tol,
          opt.max_refinements};
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double value = detail::eta_numeric_uncached(kind, p, c, opt);
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(std::move(key), value);
  return value;
}

enum class DecayRegime { complex_lambda, real_noncollinear, higher_dim };

inline const char* to_string(DecayRegime r) {
  switch (r) {
    case DecayRegime::complex_lambda: return "complex";
    case DecayRegime::real_noncollinear: return "real_noncollinear";
    case DecayRegime::higher_dim: return "higher_dim";
  }
  return "unknown";
}

/// A fully evaluated sparse-frequency bound. When valid is false, reason
/// holds a machine-readable tag and the numbers are reported as computed.
struct DecayBound {
  DecayRegime regime = DecayRegime::complex_lambda;
  double lambda_modulus = 0.0;
  double epsilon = 0.0;
  double epsilon_tilde = 0.0;
  double rho = 0.0;
  double eta = 0.0;
  double entropy = 0.0;
  double delta = 0.0;
  int branching = 0;
  bool valid = false;
  std::string reason;
};

namespace detail {

// delta = [multiplier * log(branching) * eps~ + h(eps~)] / log(1/|lambda|),
// eps~ = log|lambda| / log(1 - eta) * eps. Shared by all three regimes.
inline DecayBound assemble_bound(DecayRegime regime, double lambda_modulus, double epsilon, double eta, double rho,
                                 int branching, double multiplier) {
  DecayBound b;
  b.regime = regime;
  b.lambda_modulus = lambda_modulus;
  b.epsilon = epsilon;
  b.eta = eta;
  b.rho = rho;
  b.branching = branching;
  const double log_inv = -std::log(lambda_modulus);
  if (!(eta > 0.0)) {
    b.epsilon_tilde = b.entropy = b.delta = std::numeric_limits<double>::infinity();
    b.valid = false;
    b.reason = "eta_not_positive";
    return b;
  }
  b.epsilon_tilde = eta >= 1.0 ? 0.0 : std::log(lambda_modulus) / std::log1p(-eta) * epsilon;
  if (!std::isfinite(b.epsilon_tilde) || b.epsilon_tilde > 1.0) {
    b.entropy = b.delta = std::numeric_limits<double>::infinity();
    b.valid = false;
    b.reason = "epsilon_tilde_outside_unit_interval";
    return b;
  }
  b.entropy = entropy_h(b.epsilon_tilde);
  b.delta = (multiplier * std::log(static_cast<double>(branching)) * b.epsilon_tilde + b.entropy) / log_inv;
  if (!(b.epsilon_tilde > 0.0 && b.epsilon_tilde < 0.5)) {
    b.valid = false;
    b.reason = "epsilon_tilde_not_in_open_half_interval";
  } else if (!(b.delta < 2.0)) {
    b.valid = false;
    b.reason = "delta_not_below_2";
  } else {
    b.valid = true;
  }
  return b;
}

inline void require_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
}

}  // namespace detail

/// ceil(1/2 (1 + 3/|lambda|^2)): choices of the next Erdos-Kahane digit.
inline int complex_branching(Complex lambda) {
  return static_cast<int>(std::ceil(0.5 * (1.0 + 3.0 / std::norm(lambda))));
}

/// Bound for non-real lambda; eta uses the first two weights.
inline DecayBound delta_complex(Complex lambda, const ProbabilityVector& p, double epsilon) {
  if (std::abs(lambda.imag()) <= 1e-14) throw RegimeError("delta_complex requires a non-real contraction ratio");
  const double mod = std::abs(lambda);
  if (!(mod > 0.0 && mod < 1.0)) throw DomainError("contraction ratio must satisfy 0 < |lambda| < 1");
  detail::require_epsilon(epsilon);
  const double mod2 = mod * mod;
  const double rho = mod2 / (2.0 * (mod2 + 3.0));
  const double eta = eta_two_digit(2.0 * rho, p[0], p[1]);
  return detail::assemble_bound(DecayRegime::complex_lambda, mod, epsilon, eta, rho, complex_branching(lambda), 1.0);
}

/// Bound for real lambda in (0,1) with m >= 3 non-collinear digits, whose
/// first three (after normalization to 0, 1, i) carry the weights p[0..2].
inline DecayBound delta_real_noncollinear(double lambda, const ProbabilityVector& p, double epsilon,
                                          const EtaOptions& opt = {}) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw RegimeError("real regime requires lambda in (0, 1)");
  if (p.size() < 3) throw RegimeError("real regime requires at least three digits");
  detail::require_epsilon(epsilon);
  const double c = lambda / (2.0 * (lambda + 1.0));
  const double eta = eta_numeric(PhiKind::lattice_3digit, p.values(), c, opt);
  const int branching = static_cast<int>(std::ceil(2.0 + 1.0 / lambda));
  return detail::assemble_bound(DecayRegime::real_noncollinear, lambda, epsilon, eta, 0.5 * c, branching, 4.0);
}

/// Chooses a non-collinear digit triple, reorders the weights accordingly
/// and evaluates the real-regime bound.
inline DecayBound delta_real_noncollinear(const IFSDescriptor& ifs, double epsilon, const EtaOptions& opt = {}) {
  if (!ifs.lambda_is_real()) throw RegimeError("real regime requires a real contraction ratio");
  if (ifs.size() < 3) throw RegimeError("real regime requires at least three digits");
  if (ifs.digits_collinear()) throw RegimeError("real regime requires non-collinear digits");
  const auto w = ifs.digits();
  const auto p = ifs.probs().values();
  std::size_t second = 1;
  while (second < w.size() && w[second] == w[0]) ++second;
  std::size_t third = 0;
  for (std::size_t k = 1; k < w.size(); ++k) {
    const Complex u = w[second] - w[0], v = w[k] - w[0];
    if (std::abs(u.real() * v.imag() - u.imag() * v.real()) > 1e-12 * std::max(1.0, std::norm(u))) {
      third = k;
      break;
    }
  }
  std::vector<double> reordered{p[0], p[second], p[third]};
  for (std::size_t k = 1; k < p.size(); ++k)
    if (k != second && k != third) reordered.push_back(p[k]);
  return delta_real_noncollinear(ifs.lambda().real(), ProbabilityVector(std::move(reordered)), epsilon, opt);
}

/// Bound for lambda O x + w_j on R^d (O = identity), digits normalized so
/// that w_1 = 0 and w_2 = (1, ..., 1).
inline DecayBound delta_higherdim(double lambda, const ProbabilityVector& p, double epsilon, int d,
                                  const EtaOptions& opt = {}) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw RegimeError("higher-dimensional regime requires lambda in (0, 1)");
  if (d < 3) throw RegimeError("higher-dimensional regime requires d >= 3");
  if (p.size() < 3) throw RegimeError("higher-dimensional regime requires at least three digits");
  detail::require_epsilon(epsilon);
  const double c = lambda / (lambda + 1.0);
  const double eta = eta_numeric(PhiKind::simplex_sum_d, p.values(), c, opt);
  const int branching = static_cast<int>(std::ceil(1.0 + 1.0 / lambda));
  return detail::assemble_bound(DecayRegime::higher_dim, lambda, epsilon, eta, 0.5 * c, branching, 1.0);
}

/// Picks the regime from the IFS classification.
inline DecayBound decay_bound(const IFSDescriptor& ifs, double epsilon) {
  switch (ifs.regime()) {
    case BoundRegime::complex_lambda: return delta_complex(ifs.lambda(), ifs.probs(), epsilon);
    case BoundRegime::real_noncollinear: return delta_real_noncollinear(ifs, epsilon);
    case BoundRegime::unsupported: break;
  }
  throw RegimeError(ifs.is_atomic() ? "bounds are undefined for an atomic IFS"
                                    : "real contraction ratio with collinear digits or m < 3 has no bound");
}

/// Explicit count of sequences (r_j): M_N e^{h(eps~) N} with
/// M_N = 3 * 4^3 * B^{3 eps~ N + 2}. Reported as a natural logarithm.
inline double log_sequence_count_bound(int branching, double epsilon_tilde, int N) {
  const double et = std::clamp(epsilon_tilde, 0.0, 1.0);
  const double log_m = std::log(3.0 * 64.0) + (3.0 * et * N + 2.0) * std::log(static_cast<double>(branching));
  return log_m + entropy_h(et) * N;
}

struct CoveringBound {
  DecayBound bound;
  int N = 0;
  double log_sequences = 0.0;       ///< log(M_N e^{h N})
  double squares_per_rectangle = 0;  ///< (ceil((|a|+1)/(2|b|)) + 1) * 2
  double log_count = 0.0;
  double count = 0.0;
};

/// Concrete number of unit squares covering the large-|mu_hat| frequencies
/// at scale T = |lambda|^{-N}.
inline CoveringBound covering_bound(Complex lambda, const ProbabilityVector& p, double epsilon, int N) {
  if (N < 0) throw DomainError("N must be non-negative");
  CoveringBound out;
  out.bound = delta_complex(lambda, p, epsilon);
  out.N = N;
  out.log_sequences = log_sequence_count_bound(out.bound.branching, out.bound.epsilon_tilde, N);
  const double aspect = (std::abs(lambda.real()) + 1.0) / (2.0 * std::abs(lambda.imag()));
  out.squares_per_rectangle = (std::ceil(aspect) + 1.0) * 2.0;
  out.log_count = out.log_sequences + std::log(out.squares_per_rectangle);
  out.count = std::exp(out.log_count);
  return out;
}

struct FlatteningSolution {
  double epsilon = 0.0;
  double sigma = 0.0;
  double residual = 0.0;
  DecayBound bound;
};

/// Root of g(eps) = kappa - 2 eps - delta(eps) on the valid range, by
/// bisection run until the bracket stops shrinking.
inline FlatteningSolution solve_flattening_epsilon(const std::function<DecayBound(double)>& delta_of, double kappa) {
  if (!(kappa > 0.0 && kappa < 2.0)) throw DomainError("kappa must lie in (0, 2)");
  auto g = [&](const DecayBound& b) { return kappa - 2.0 * b.epsilon - b.delta; };
  double lo = 0.0;
  double hi = 0.5 * kappa;
  DecayBound at_hi = delta_of(hi);
  if (!at_hi.valid) {
    double vlo = hi * 1e-12;
    if (!delta_of(vlo).valid) throw NoRootError("bound is invalid even for vanishing epsilon");
    double vhi = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (vlo + vhi);
      if (mid <= vlo || mid >= vhi) break;
      (delta_of(mid).valid ? vlo : vhi) = mid;
    }
    hi = vlo;
    at_hi = delta_of(hi);
    if (g(at_hi) > 0.0) throw NoRootError("kappa - 2 eps - delta(eps) has no sign change on the valid range");
  }
  DecayBound at_lo;
  bool have_lo = false;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const DecayBound b = delta_of(mid);
    if (g(b) > 0.0) {
      lo = mid;
      at_lo = b;
      have_lo = true;
    } else {
      hi = mid;
      at_hi = b;
    }
  }
  const DecayBound& pick = (have_lo && std::abs(g(at_lo)) < std::abs(g(at_hi))) ? at_lo : at_hi;
  FlatteningSolution s;
  s.epsilon = pick.epsilon;
  s.sigma = 2.0 * pick.epsilon;
  s.residual = g(pick);
  s.bound = pick;
  return s;
}

inline FlatteningSolution solve_flattening_epsilon(Complex lambda, const ProbabilityVector& p, double kappa) {
  return solve_flattening_epsilon([&](double eps) { return delta_complex(lambda, p, eps); }, kappa);
}

inline FlatteningSolution solve_flattening_epsilon(const IFSDescriptor& ifs, double kappa) {
  if (ifs.regime() == BoundRegime::real_noncollinear) {
    // eta does not depend on epsilon; evaluate it once.
    const DecayBound base = delta_real_noncollinear(ifs, 1e-3);
    const double lam = ifs.lambda().real();
    return solve_flattening_epsilon(
        [&](double eps) {
          return detail::assemble_bound(DecayRegime::real_noncollinear, lam, eps, base.eta, base.rho, base.branching, 4.0);
        },
        kappa);
  }
  return solve_flattening_epsilon([&](double eps) { return decay_bound(ifs, eps); }, kappa);
}

/// Lower bounds on dim_2 and dim_inf of a complex Bernoulli convolution.
/// When the flattening bound is unavailable or invalid at the scale the
/// pipeline needs, the record carries valid = false, the reason, and the
/// trivial bound 0.
struct DimensionBound {
  Complex lambda;
  double p = 0.5;
  bool unbiased = false;
  int N = 0;
  double lambda_N_modulus = 0.0;
  double base_dim2 = 0.0;  ///< open-set-condition value of dim_2(mu_{lambda^N})
  double sigma = 0.0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double dim2_lower = 0.0;
  double diminf_lower = 0.0;
  bool valid = false;
  std::string reason;
  bool diminf_valid = false;
  std::string diminf_reason;
  DecayBound bound;
  static constexpr const char* young_assumption =
      "dim_inf(mu * nu) >= dim_2(mu) + dim_2(nu) - 2 on the plane (assumed, not proved here)";
};

namespace detail {

inline int bernoulli_scale_index(double modulus) {
  const double target = 1.0 / std::sqrt(2.0);
  int n = 1;
  double power = modulus;
  while (!(power < target)) {
    power *= modulus;
    ++n;
  }
  return n;
}

inline DimensionBound bernoulli_dim2_pipeline(Complex lambda, double p, bool unbiased) {
  const double mod = std::abs(lambda);
  if (!(mod > 1.0 / std::sqrt(2.0) && mod < 1.0)) throw RegimeError("Bernoulli pipeline requires 1/sqrt(2) < |lambda| < 1");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("Bernoulli bias must lie in (0, 1)");
  DimensionBound out;
  out.lambda = lambda;
  out.p = p;
  out.unbiased = unbiased;
  out.N = bernoulli_scale_index(mod);
  const Complex lambda_n = std::polar(std::pow(mod, out.N), out.N * std::arg(lambda));
  out.lambda_N_modulus = std::abs(lambda_n);
  out.base_dim2 = std::log(p * p + (1.0 - p) * (1.0 - p)) / std::log(out.lambda_N_modulus);
  const double steps = static_cast<double>(out.N - 1);
  out.sigma = unbiased ? (std::log(1.0 / mod) / std::log(2.0 / mod)) / steps : 1.0 / steps;
  out.epsilon = 0.5 * out.sigma;
  if (std::abs(lambda_n.imag()) <= 1e-14) {
    out.valid = false;
    out.reason = "lambda_power_is_real";
    out.dim2_lower = 0.0;
    out.kappa = std::numeric_limits<double>::infinity();
    return out;
  }
  out.bound = delta_complex(lambda_n, ProbabilityVector({p, 1.0 - p}), out.epsilon);
  out.kappa = out.bound.delta + out.sigma;
  if (!out.bound.valid) {
    out.valid = false;
    out.reason = out.bound.reason;
    out.dim2_lower = 0.0;
  } else if (!(out.kappa < 2.0)) {
    out.valid = false;
    out.reason = "kappa_not_below_2";
    out.dim2_lower = 0.0;
  } else {
    out.valid = true;
    out.dim2_lower = 2.0 - out.kappa;
  }
  return out;
}

inline DimensionBound bernoulli_pipeline(Complex lambda, double p, bool unbiased) {
  DimensionBound out = bernoulli_dim2_pipeline(lambda, p, unbiased);
  // mu_lambda = mu_{lambda^2} * S_lambda mu_{lambda^2}, then the Young step.
  const Complex squared = lambda * lambda;
  out.diminf_lower = 0.0;
  out.diminf_valid = false;
  if (!(std::abs(squared) > 1.0 / std::sqrt(2.0))) {
    out.diminf_reason = "lambda_squared_outside_pipeline_range";
  } else {
    const DimensionBound half = bernoulli_dim2_pipeline(squared, p, unbiased);
    if (!half.valid) {
      out.diminf_reason = "lambda_squared_" + half.reason;
    } else {
      out.diminf_valid = true;
      out.diminf_lower = std::max(0.0, 2.0 * half.dim2_lower - 2.0);
    }
  }
  out.diminf_lower = std::min(out.diminf_lower, out.dim2_lower);
  return out;
}

}  // namespace detail

inline DimensionBound bernoulli_dim_lower(Complex lambda, double p_bias) {
  return detail::bernoulli_pipeline(lambda, p_bias, false);
}

inline DimensionBound bernoulli_unbiased_dim_lower(Complex lambda) {
  return detail::bernoulli_pipeline(lambda, 0.5, true);
}

}  // namespace selfsim
