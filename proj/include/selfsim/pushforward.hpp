#pragma once

// Push-forwards of self-similar measures under polynomial maps, their
// Fourier decay profiles, and Frostman exponent estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "selfsim/bounds.hpp"
#include "selfsim/dimensions.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/measure.hpp"
#include "selfsim/parallel.hpp"

namespace selfsim {

/// F(z) = sum_k c_k z^k.
class AnalyticMap {
 public:
  explicit AnalyticMap(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {
    while (c_.size() > 1 && c_.back() == Complex{}) c_.pop_back();
    if (c_.empty()) c_.push_back({});
    for (const auto& c : c_)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw DomainError("map coefficients must be finite");
  }

  static AnalyticMap monomial(int degree, Complex scale = 1.0) {
    std::vector<Complex> c(static_cast<std::size_t>(degree) + 1, Complex{});
    c.back() = scale;
    return AnalyticMap(std::move(c));
  }

  std::span<const Complex> coeffs() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  Complex operator()(Complex z) const { return horner(0, z); }
  Complex derivative(Complex z) const { return horner(1, z); }
  Complex second_derivative(Complex z) const { return horner(2, z); }

  /// Zeros of F'' (Durand-Kerner); empty when F'' is constant.
  std::vector<Complex> second_derivative_roots() const {
    std::vector<Complex> a;
    for (int k = 2; k <= degree(); ++k) a.push_back(static_cast<double>(k * (k - 1)) * c_[static_cast<std::size_t>(k)]);
    const int d = static_cast<int>(a.size()) - 1;
    if (d < 1) return {};
    const Complex lead = a.back();
    for (auto& x : a) x /= lead;
    std::vector<Complex> r(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) r[static_cast<std::size_t>(k)] = std::pow(Complex(0.4, 0.9), k);
    auto eval = [&](Complex z) {
      Complex acc{};
      for (int k = d; k >= 0; --k) acc = acc * z + a[static_cast<std::size_t>(k)];
      return acc;
    };
    for (int it = 0; it < 500; ++it) {
      double change = 0.0;
      for (int i = 0; i < d; ++i) {
        Complex den{1.0, 0.0};
        for (int j = 0; j < d; ++j)
          if (j != i) den *= r[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(j)];
        const Complex step = eval(r[static_cast<std::size_t>(i)]) / den;
        r[static_cast<std::size_t>(i)] -= step;
        change = std::max(change, std::abs(step));
      }
      if (change < 1e-15) break;
    }
    return r;
  }

  /// z -> F(z) + offset.
  AnalyticMap translated_output(Complex offset) const {
    auto c = c_;
    c[0] += offset;
    return AnalyticMap(std::move(c));
  }

 private:
  // order-th derivative by Horner's scheme with falling-factorial weights.
  Complex horner(int order, Complex z) const {
    Complex acc{};
    for (int k = degree(); k >= order; --k) {
      double w = 1.0;
      for (int m = 0; m < order; ++m) w *= static_cast<double>(k - m);
      acc = acc * z + w * c_[static_cast<std::size_t>(k)];
    }
    return acc;
  }

  std::vector<Complex> c_;
};

struct SecondDerivativeCheck {
  double min_abs_F2 = 0.0;
  double M = 0.0;          ///< max |F'| over the sample
  double L = 0.0;          ///< 1 / min |F''|, infinite when certification fails
  double radius = 0.0;
  std::size_t samples = 0;
  double spacing = 0.0;    ///< typical distance between interior samples
  bool valid = false;
};

/// Samples the disk |z| <= radius: the centre, a sunflower
/// spiral of interior points, a ring on the boundary circle, and every zero
/// of F'' inside the disk. Without interior zeros the minimum modulus sits on
/// the boundary, so the ring decides.
inline SecondDerivativeCheck check_second_derivative(const AnalyticMap& F, double radius, int samples = 4096) {
  if (samples < 1) throw DomainError("sample count must be positive");
  if (!(radius >= 0.0)) throw DomainError("radius must be non-negative");
  SecondDerivativeCheck out;
  out.radius = radius;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Complex> points{Complex{}};
  for (int k = 1; k <= samples; ++k)
    points.push_back(std::polar(out.radius * std::sqrt(static_cast<double>(k) / samples), golden * k));
  const int ring = std::max(16, static_cast<int>(std::sqrt(static_cast<double>(samples))) * 4);
  for (int k = 0; k < ring; ++k) points.push_back(std::polar(out.radius, kTwoPi * k / ring));
  for (const auto& z : F.second_derivative_roots())
    if (std::abs(z) <= out.radius) points.push_back(z);
  out.min_abs_F2 = std::numeric_limits<double>::infinity();
  for (const auto& z : points) {
    out.min_abs_F2 = std::min(out.min_abs_F2, std::abs(F.second_derivative(z)));
    out.M = std::max(out.M, std::abs(F.derivative(z)));
  }
  out.samples = points.size();
  out.spacing = out.radius * std::sqrt(kPi / samples);
  out.valid = out.min_abs_F2 > 1e-9;
  out.L = out.valid ? 1.0 / out.min_abs_F2 : std::numeric_limits<double>::infinity();
  return out;
}

inline SecondDerivativeCheck check_second_derivative(const AnalyticMap& F, const IFSDescriptor& ifs, int samples = 4096) {
  return check_second_derivative(F, support_radius(ifs), samples);
}

inline DiscreteMeasure pushforward_measure(const AnalyticMap& F, const DiscreteMeasure& mu, double merge_tol = -1.0) {
  std::vector<Atom> atoms;
  atoms.reserve(mu.size());
  double scale = 0.0;
  for (const auto& a : mu.atoms()) {
    atoms.push_back({F(a.position), a.weight});
    scale = std::max(scale, std::abs(atoms.back().position));
  }
  const double tol = merge_tol < 0.0 ? default_merge_tol(scale) : merge_tol;
  return DiscreteMeasure(merge_atoms(std::move(atoms), tol));
}

struct FrostmanEstimate {
  double s = 0.0;
  double stderr_s = 0.0;
  double raw_slope = 0.0;
  std::vector<double> radii;
  std::vector<double> max_ball_mass;
  int centers = 0;
  int depth = 0;
};

/// Regression of log max_x mu(B(x, r)) against log r, with centres drawn
/// from the atoms of a depth-`depth` approximation.
inline FrostmanEstimate frostman_estimate(const IFSDescriptor& ifs, const std::vector<double>& radii, int centers,
                                          std::uint64_t seed, int depth = 12, unsigned workers = 0) {
  if (ifs.is_atomic()) throw RegimeError("Frostman estimation needs a non-atomic IFS");
  if (radii.size() < 3) throw DegenerateRangeError("Frostman estimation needs at least 3 radii");
  if (centers < 1) throw DomainError("need at least one centre");
  for (double r : radii)
    if (!(r > 0.0)) throw DomainError("radii must be positive");
  const DiscreteMeasure mu = finite_approximation(ifs, depth);
  std::vector<Atom> sorted(mu.atoms().begin(), mu.atoms().end());
  std::sort(sorted.begin(), sorted.end(), [](const Atom& a, const Atom& b) { return a.position.real() < b.position.real(); });
  std::vector<double> cumulative(sorted.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) cumulative[k] = (acc += sorted[k].weight);

  std::mt19937_64 engine(stream_seed(seed, 0));
  std::vector<Complex> chosen;
  for (int c = 0; c < centers; ++c) {
    const double u = uniform01(engine) * acc;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    chosen.push_back(sorted[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                               static_cast<std::ptrdiff_t>(sorted.size()) - 1))].position);
  }

  FrostmanEstimate out;
  out.radii = radii;
  out.centers = centers;
  out.depth = depth;
  out.max_ball_mass.assign(radii.size(), 0.0);
  parallel_for(radii.size(), workers, [&](std::size_t k) {
    const double r = radii[k];
    double best = 0.0;
    for (const auto& c : chosen) {
      auto lo = std::lower_bound(sorted.begin(), sorted.end(), c.real() - r,
                                 [](const Atom& a, double x) { return a.position.real() < x; });
      double mass = 0.0;
      for (auto it = lo; it != sorted.end() && it->position.real() <= c.real() + r; ++it)
        if (std::abs(it->position - c) <= r) mass += it->weight;
      best = std::max(best, mass);
    }
    out.max_ball_mass[k] = best;
  });
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    xs.push_back(std::log(radii[k]));
    ys.push_back(std::log(out.max_ball_mass[k]));
  }
  const LinearFit f = least_squares(xs, ys);
  out.raw_slope = f.slope;
  out.s = std::max(0.0, f.slope);
  out.stderr_s = f.stderr_slope;
  return out;
}

struct DecayRow {
  double T = 0.0;
  double max_abs_ft = 0.0;
};

struct DecayProfile {
  std::vector<DecayRow> rows;
  double slope = 0.0;
  double stderr_slope = 0.0;
  int directions = 0;
  int jittered = 0;
  int depth = 0;
  std::size_t atoms = 0;
  double frostman_s = 0.0;
  double predicted_exponent = std::numeric_limits<double>::quiet_NaN();
  double predicted_epsilon = std::numeric_limits<double>::quiet_NaN();
  double predicted_delta = std::numeric_limits<double>::quiet_NaN();
  SecondDerivativeCheck certification;
  std::vector<double> angles;  ///< equispaced directions, then the jittered ones
};

/// Best exponent min{(s - delta(eps)) / 3, eps / 3} over valid eps, on a grid
/// of 400 values of eps. NaN when no eps yields a valid bound.
inline double predicted_decay_exponent(const IFSDescriptor& ifs, double s, double* best_epsilon = nullptr,
                                       double* best_delta = nullptr) {
  double best = std::numeric_limits<double>::quiet_NaN();
  if (ifs.regime() == BoundRegime::unsupported) return best;
  for (int k = 1; k <= 400; ++k) {
    const double eps = 0.5 * k / 400.0;
    const DecayBound b = decay_bound(ifs, eps);
    if (!b.valid) continue;
    const double v = std::min((s - b.delta) / 3.0, eps / 3.0);
    if (std::isnan(best) || v > best) {
      best = v;
      if (best_epsilon) *best_epsilon = eps;
      if (best_delta) *best_delta = b.delta;
    }
  }
  return best;
}

/// Dyadic radii 2^{-1}, 2^{-2}, ... kept at least 4 times the atom spacing.
inline std::vector<double> resolved_radii(const DiscreteMeasure& mu, int max_count = 6) {
  const int top = std::min(max_count, finest_resolved_level(min_atom_gap(mu)));
  std::vector<double> radii;
  for (int k = top; k >= 1; --k) radii.push_back(std::ldexp(1.0, -k));
  return radii;
}

struct DecayOptions {
  int directions = 256;
  int depth = 16;
  std::uint64_t seed = 0;
  bool allow_affine = false;
  bool stratify = true;      ///< jitter atoms by random tails; false: plain lattice approximation
  double frostman_s = -1.0;  ///< negative: estimate from the measure
  unsigned workers = 0;
};

/// Annulus maxima for an explicit measure. The IFS overload below adds the
/// approximation step and the predicted exponent.
inline DecayProfile decay_profile(const AnalyticMap& F, const DiscreteMeasure& mu, const std::vector<double>& radii,
                                  const DecayOptions& opt = {}) {
  if (radii.size() < 2) throw DegenerateRangeError("decay profile needs at least 2 radii");
  for (std::size_t k = 0; k < radii.size(); ++k)
    if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1]))) throw DomainError("radii must be positive and increasing");
  if (opt.directions < 1) throw DomainError("directions must be positive");
  DecayProfile out;
  out.certification = check_second_derivative(F, mu.max_modulus());
  if (F.degree() <= 1) {
    if (!opt.allow_affine) throw RegimeError("affine maps are only accepted as a control (allow_affine)");
  } else if (!out.certification.valid) {
    throw RegimeError("F'' vanishes on the support disk; decay is not certified");
  }
  out.directions = opt.directions;
  out.jittered = opt.directions;
  out.depth = opt.depth;
  const DiscreteMeasure pushed = pushforward_measure(F, mu);
  out.atoms = pushed.size();

  std::mt19937_64 engine(stream_seed(opt.seed, 1));
  for (int k = 0; k < opt.directions; ++k) out.angles.push_back(kTwoPi * k / opt.directions);
  for (int k = 0; k < opt.directions; ++k) out.angles.push_back(kTwoPi * (k + uniform01(engine)) / opt.directions);

  const std::size_t per = out.angles.size();
  std::vector<double> values(radii.size() * per);
  parallel_for(values.size(), opt.workers, [&](std::size_t idx) {
    const double T = radii[idx / per];
    values[idx] = std::abs(fourier_sum(pushed, std::polar(T, out.angles[idx % per])));
  });
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double m = *std::max_element(values.begin() + static_cast<std::ptrdiff_t>(k * per),
                                       values.begin() + static_cast<std::ptrdiff_t>((k + 1) * per));
    out.rows.push_back({radii[k], m});
    xs.push_back(std::log(radii[k]));
    ys.push_back(std::log(m));
  }
  const LinearFit f = least_squares(xs, ys);
  out.slope = f.slope;
  out.stderr_slope = f.stderr_slope;
  return out;
}

/// The measure is the stratified sample at opt.depth (or the plain lattice
/// approximation when opt.stratify is off, which aliases under non-linear
/// maps so that its maxima grow with T). F'' is certified on the support disk.
inline DecayProfile decay_profile(const AnalyticMap& F, const IFSDescriptor& ifs, const std::vector<double>& radii,
                                  const DecayOptions& opt = {}) {
  const SecondDerivativeCheck cert = check_second_derivative(F, ifs);
  if (F.degree() <= 1) {
    if (!opt.allow_affine) throw RegimeError("affine maps are only accepted as a control (allow_affine)");
  } else if (!cert.valid) {
    throw RegimeError("F'' vanishes on the support disk; decay is not certified");
  }
  const DiscreteMeasure mu = opt.stratify ? stratified_sample(ifs, opt.depth, stream_seed(opt.seed, 2), 1e-12, opt.workers)
                                          : finite_approximation(ifs, opt.depth);
  DecayProfile out = decay_profile(F, mu, radii, opt);
  out.certification = cert;
  if (!ifs.is_atomic()) {
    out.frostman_s = opt.frostman_s;
    if (out.frostman_s < 0.0) {
      const int depth = std::min(opt.depth, 14);
      const auto r = resolved_radii(finite_approximation(ifs, depth));
      out.frostman_s = r.size() >= 3 ? frostman_estimate(ifs, r, 32, opt.seed, depth, opt.workers).s : 0.0;
    }
    out.predicted_exponent = predicted_decay_exponent(ifs, out.frostman_s, &out.predicted_epsilon, &out.predicted_delta);
  }
  return out;
}

}  // namespace selfsim
