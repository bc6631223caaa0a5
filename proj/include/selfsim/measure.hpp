#pragma once

// Homogeneous self-similar measures on the complex plane and their finite
// discrete approximations.
//
// The measure of the IFS {z -> lambda z + w_j} with weights p_j is realized
// as the law of sum_{n>=0} lambda^n X_n with X_n i.i.d., P(X_n = w_j) = p_j.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/parallel.hpp"

namespace selfsim {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr std::size_t kDefaultAtomBudget = 10'000'000;

class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> p) : p_(std::move(p)) {
    if (p_.size() < 2) throw DomainError("probability vector needs at least two entries");
    double sum = 0.0;
    for (double v : p_) {
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("probability weights must be strictly positive");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("probability weights must sum to 1");
  }

  static ProbabilityVector uniform(std::size_t m) { return ProbabilityVector(std::vector<double>(m, 1.0 / static_cast<double>(m))); }

  std::span<const double> values() const { return p_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// Which explicit decay bound applies to an IFS.
enum class BoundRegime { complex_lambda, real_noncollinear, unsupported };

class IFSDescriptor {
 public:
  IFSDescriptor(Complex lambda, std::vector<Complex> digits, ProbabilityVector probs)
      : lambda_(lambda), digits_(std::move(digits)), probs_(std::move(probs)) {
    const double r = std::abs(lambda_);
    if (!(r > 0.0 && r < 1.0)) throw DomainError("contraction ratio must satisfy 0 < |lambda| < 1");
    if (digits_.size() != probs_.size()) throw DomainError("digits and probabilities differ in length");
    for (const auto& w : digits_)
      if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) throw DomainError("digits must be finite");
    classify();
  }

  /// The Bernoulli convolution {lambda z - 1, lambda z + 1} with weights (p, 1 - p).
  static IFSDescriptor bernoulli(Complex lambda, double p = 0.5) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("Bernoulli bias must lie in (0, 1)");
    return IFSDescriptor(lambda, {Complex(-1, 0), Complex(1, 0)}, ProbabilityVector({p, 1.0 - p}));
  }

  static IFSDescriptor uniform(Complex lambda, std::vector<Complex> digits) {
    const auto m = digits.size();
    return IFSDescriptor(lambda, std::move(digits), ProbabilityVector::uniform(m));
  }

  Complex lambda() const { return lambda_; }
  std::span<const Complex> digits() const { return digits_; }
  const ProbabilityVector& probs() const { return probs_; }
  std::size_t size() const { return digits_.size(); }

  bool lambda_is_real() const { return lambda_is_real_; }
  bool digits_collinear() const { return digits_collinear_; }
  bool is_atomic() const { return is_atomic_; }

  double max_digit_modulus() const {
    double w = 0.0;
    for (const auto& d : digits_) w = std::max(w, std::abs(d));
    return w;
  }

  BoundRegime regime() const {
    if (is_atomic_) return BoundRegime::unsupported;
    if (!lambda_is_real_) return BoundRegime::complex_lambda;
    if (!digits_collinear_ && size() >= 3) return BoundRegime::real_noncollinear;
    return BoundRegime::unsupported;
  }

 private:
  void classify() {
    lambda_is_real_ = std::abs(lambda_.imag()) <= 1e-14;
    is_atomic_ = true;
    for (const auto& w : digits_)
      if (w != digits_.front()) is_atomic_ = false;

    // Collinear iff every digit lies on the line through w_0 and the digit
    // farthest from it.
    const Complex base = digits_.front();
    Complex far = base;
    double far_dist = 0.0;
    for (const auto& w : digits_) {
      if (std::abs(w - base) > far_dist) {
        far_dist = std::abs(w - base);
        far = w;
      }
    }
    digits_collinear_ = true;
    if (far_dist > 0.0) {
      const Complex dir = far - base;
      for (const auto& w : digits_) {
        const Complex v = w - base;
        const double cross = dir.real() * v.imag() - dir.imag() * v.real();
        if (std::abs(cross) > 1e-12 * far_dist * std::max(far_dist, 1.0)) digits_collinear_ = false;
      }
    }
  }

  Complex lambda_;
  std::vector<Complex> digits_;
  ProbabilityVector probs_;
  bool lambda_is_real_ = false;
  bool digits_collinear_ = true;
  bool is_atomic_ = false;
};

/// R = max|w_j| / (1 - |lambda|): the attractor lies in the closed disk of radius R.
inline double support_radius(const IFSDescriptor& ifs) {
  return ifs.max_digit_modulus() / (1.0 - std::abs(ifs.lambda()));
}

struct Atom {
  Complex position;
  double weight;
};

class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw DomainError("a discrete measure needs at least one atom");
    double sum = 0.0;
    for (const auto& a : atoms_) {
      if (!(a.weight > 0.0)) throw DomainError("atom weights must be positive");
      sum += a.weight;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw DomainError("atom weights must sum to 1");
  }

  static DiscreteMeasure dirac(Complex at = {}) { return DiscreteMeasure({{at, 1.0}}); }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  double total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
  }

  double max_modulus() const {
    double r = 0.0;
    for (const auto& a : atoms_) r = std::max(r, std::abs(a.position));
    return r;
  }

 private:
  std::vector<Atom> atoms_;
};

inline double default_merge_tol(double scale) { return 1e-12 * std::max(scale, 1.0); }

namespace detail {

struct CellKey {
  std::int64_t x, y;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return static_cast<std::size_t>(splitmix64(static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL ^
                                               static_cast<std::uint64_t>(k.y)));
  }
};

inline std::vector<Atom> merge_pass(const std::vector<Atom>& atoms, double tol) {
  struct Cluster {
    Complex seed;
    Complex weighted_sum;
    double weight;
  };
  std::vector<Cluster> clusters;
  clusters.reserve(atoms.size());
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> grid;
  grid.reserve(atoms.size());
  const double inv = 1.0 / tol;
  const double tol2 = tol * tol;
  for (const auto& a : atoms) {
    const auto cx = static_cast<std::int64_t>(std::floor(a.position.real() * inv));
    const auto cy = static_cast<std::int64_t>(std::floor(a.position.imag() * inv));
    std::int64_t hit = -1;
    for (std::int64_t dx = -1; dx <= 1 && hit < 0; ++dx) {
      for (std::int64_t dy = -1; dy <= 1 && hit < 0; ++dy) {
        auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (auto idx : it->second) {
          if (std::norm(clusters[idx].seed - a.position) <= tol2) {
            hit = idx;
            break;
          }
        }
      }
    }
    if (hit >= 0) {
      auto& c = clusters[static_cast<std::size_t>(hit)];
      c.weighted_sum += a.weight * a.position;
      c.weight += a.weight;
    } else {
      grid[{cx, cy}].push_back(static_cast<std::uint32_t>(clusters.size()));
      clusters.push_back({a.position, a.weight * a.position, a.weight});
    }
  }
  std::vector<Atom> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    // A single-atom cluster keeps its exact position.
    const Complex pos = (c.weighted_sum == c.weight * c.seed) ? c.seed : c.weighted_sum / c.weight;
    out.push_back({pos, c.weight});
  }
  return out;
}

}  // namespace detail

/// Coalesces atoms closer than tol (weights added, position weight-averaged).
/// Passes repeat until the atom count is stable; output order follows the
/// first appearance of each cluster, so the result is deterministic.
inline std::vector<Atom> merge_atoms(std::vector<Atom> atoms, double tol) {
  if (!(tol > 0.0)) throw DomainError("merge tolerance must be positive");
  for (int pass = 0; pass < 8; ++pass) {
    const auto before = atoms.size();
    atoms = detail::merge_pass(atoms, tol);
    if (atoms.size() == before) break;
  }
  return atoms;
}

inline DiscreteMeasure merged(const DiscreteMeasure& mu, double tol) {
  return DiscreteMeasure(merge_atoms({mu.atoms().begin(), mu.atoms().end()}, tol));
}

/// Law of sum_{n=0}^{depth-1} lambda^n X_n, built as an iterated convolution
/// with merging after every factor. merge_tol <= 0 selects 1e-12 * R.
inline DiscreteMeasure finite_approximation(const IFSDescriptor& ifs, int depth, double merge_tol = -1.0,
                                            std::size_t atom_budget = kDefaultAtomBudget) {
  if (depth < 0) throw DomainError("depth must be non-negative");
  const double tol = merge_tol > 0.0 ? merge_tol : default_merge_tol(support_radius(ifs));
  const auto digits = ifs.digits();
  const auto probs = ifs.probs().values();
  std::vector<Atom> current{{Complex{}, 1.0}};
  Complex scale{1.0, 0.0};
  for (int n = 0; n < depth; ++n) {
    if (current.size() * digits.size() > atom_budget)
      throw BudgetError("finite approximation exceeds the atom budget at depth " + std::to_string(n + 1));
    std::vector<Atom> next;
    next.reserve(current.size() * digits.size());
    for (const auto& a : current)
      for (std::size_t j = 0; j < digits.size(); ++j) next.push_back({a.position + scale * digits[j], a.weight * probs[j]});
    current = merge_atoms(std::move(next), tol);
    scale *= ifs.lambda();
  }
  return DiscreteMeasure(std::move(current));
}

/// Number of series terms K with R |lambda|^K < tail_tol.
inline int sample_series_length(const IFSDescriptor& ifs, double tail_tol) {
  const double r = support_radius(ifs);
  const double q = std::abs(ifs.lambda());
  int k = 0;
  double tail = r;
  while (tail >= tail_tol && k < 100000) {
    tail *= q;
    ++k;
  }
  return k;
}

/// count independent draws of the truncated random series, as equal-weight
/// atoms. Draws are produced in fixed chunks with per-chunk seeds, so the
/// result is identical for every worker count.
inline DiscreteMeasure sample(const IFSDescriptor& ifs, std::size_t count, double tail_tol, std::uint64_t seed,
                              unsigned workers = 1) {
  if (count == 0) throw DomainError("sample count must be positive");
  if (!(tail_tol > 0.0)) throw DomainError("tail tolerance must be positive");
  constexpr std::size_t kChunk = 4096;
  const int terms = sample_series_length(ifs, tail_tol);
  const auto digits = ifs.digits();
  std::vector<double> cumulative(ifs.size());
  std::partial_sum(ifs.probs().values().begin(), ifs.probs().values().end(), cumulative.begin());
  cumulative.back() = 1.0;

  const double w = 1.0 / static_cast<double>(count);
  std::vector<Atom> atoms(count, Atom{Complex{}, w});
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    std::mt19937_64 engine(stream_seed(seed, c));
    const std::size_t end = std::min(count, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      Complex z{}, scale{1.0, 0.0};
      for (int n = 0; n < terms; ++n) {
        const double u = uniform01(engine);
        std::size_t j = 0;
        while (j + 1 < cumulative.size() && u >= cumulative[j]) ++j;
        z += scale * digits[j];
        scale *= ifs.lambda();
      }
      atoms[i].position = z;
    }
  });
  return DiscreteMeasure(std::move(atoms));
}

/// Every atom of finite_approximation(depth) displaced by lambda^depth Y,
/// with Y an independent draw of the series. The result is an exact sample
/// of mu stratified over the depth-level cylinders, free of lattice structure.
inline DiscreteMeasure stratified_sample(const IFSDescriptor& ifs, int depth, std::uint64_t seed, double tail_tol = 1e-12,
                                         unsigned workers = 1, std::size_t atom_budget = kDefaultAtomBudget) {
  const DiscreteMeasure base = finite_approximation(ifs, depth, -1.0, atom_budget);
  Complex scale{1.0, 0.0};
  for (int n = 0; n < depth; ++n) scale *= ifs.lambda();
  const DiscreteMeasure tails = sample(ifs, base.size(), tail_tol / std::abs(scale), seed, workers);
  std::vector<Atom> atoms;
  atoms.reserve(base.size());
  for (std::size_t k = 0; k < base.size(); ++k)
    atoms.push_back({base.atoms()[k].position + scale * tails.atoms()[k].position, base.atoms()[k].weight});
  return DiscreteMeasure(std::move(atoms));
}

inline DiscreteMeasure convolve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double merge_tol = -1.0,
                                std::size_t atom_budget = kDefaultAtomBudget) {
  if (mu.size() * nu.size() > atom_budget) throw BudgetError("convolution exceeds the atom budget");
  const double tol = merge_tol > 0.0 ? merge_tol : default_merge_tol(mu.max_modulus() + nu.max_modulus());
  std::vector<Atom> out;
  out.reserve(mu.size() * nu.size());
  for (const auto& a : mu.atoms())
    for (const auto& b : nu.atoms()) out.push_back({a.position + b.position, a.weight * b.weight});
  return DiscreteMeasure(merge_atoms(std::move(out), tol));
}

/// Push-forward under z -> factor * z.
inline DiscreteMeasure scale_rotate(const DiscreteMeasure& mu, Complex factor, double merge_tol = -1.0) {
  const double tol = merge_tol > 0.0 ? merge_tol : default_merge_tol(mu.max_modulus() * std::abs(factor));
  std::vector<Atom> out;
  out.reserve(mu.size());
  for (const auto& a : mu.atoms()) out.push_back({factor * a.position, a.weight});
  return DiscreteMeasure(merge_atoms(std::move(out), tol));
}

inline DiscreteMeasure translate(const DiscreteMeasure& mu, Complex offset) {
  std::vector<Atom> out;
  out.reserve(mu.size());
  for (const auto& a : mu.atoms()) out.push_back({a.position + offset, a.weight});
  return DiscreteMeasure(std::move(out));
}

}  // namespace selfsim
