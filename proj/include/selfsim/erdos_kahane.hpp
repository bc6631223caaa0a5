#pragma once

// Erdos-Kahane digit dynamics for a non-real contraction ratio lambda = a + ib.
// For a normalized frequency t write Re(lambda^{-j} t) = r_j + eps_j with r_j
// an integer and eps_j in [-1/2, 1/2). Large values of |mu_hat| force most
// eps_j to be small, and consecutive digits obey
//   |r_{j+1} - (2a r_j - r_{j-1}) / |lambda|^2| <= (1 + 3/|lambda|^2) / 2.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "selfsim/bounds.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/measure.hpp"
#include "selfsim/parallel.hpp"

namespace selfsim {

inline double ek_rho(Complex lambda) {
  const double mod2 = std::norm(lambda);
  return mod2 / (2.0 * (mod2 + 3.0));
}

struct EKTrace {
  Complex lambda;
  Complex t;
  int N = 0;
  double rho = 0.0;
  std::vector<std::int64_t> r;
  std::vector<double> eps;
  std::vector<Complex> scaled;  ///< lambda^{-j} t = c_j + i d_j
  std::vector<int> good_indices;

  double c(int j) const { return scaled[static_cast<std::size_t>(j)].real(); }
  double d(int j) const { return scaled[static_cast<std::size_t>(j)].imag(); }
  int good_count() const { return static_cast<int>(good_indices.size()); }

  /// Membership in S(N, eps~): at least (1 - eps~) N indices with |eps_j| < rho.
  bool in_sparse_set(double epsilon_tilde) const { return good_count() >= (1.0 - epsilon_tilde) * N; }
};

namespace detail {

inline constexpr double kTraceMagnitudeLimit = 4503599627370496.0;  // 2^52

inline EKTrace trace_unchecked(Complex lambda, Complex t, int N) {
  EKTrace tr;
  tr.lambda = lambda;
  tr.t = t;
  tr.N = N;
  tr.rho = ek_rho(lambda);
  tr.r.resize(static_cast<std::size_t>(N));
  tr.eps.resize(static_cast<std::size_t>(N));
  tr.scaled.resize(static_cast<std::size_t>(N));
  const Complex inverse = 1.0 / lambda;
  Complex z = t;
  for (int j = 0; j < N; ++j) {
    const double v = z.real();
    auto r = static_cast<std::int64_t>(std::floor(v + 0.5));
    double e = v - static_cast<double>(r);
    if (e >= 0.5) ++r, e -= 1.0;
    if (e < -0.5) --r, e += 1.0;
    const auto k = static_cast<std::size_t>(j);
    tr.r[k] = r;
    tr.eps[k] = e;
    tr.scaled[k] = z;
    if (std::abs(e) < tr.rho) tr.good_indices.push_back(j);
    z *= inverse;
  }
  return tr;
}

}  // namespace detail

inline EKTrace ek_trace(Complex lambda, Complex t, int N) {
  if (std::abs(lambda.imag()) <= 1e-14) throw RegimeError("Erdos-Kahane traces require a non-real lambda");
  if (!(std::abs(lambda) > 0.0 && std::abs(lambda) < 1.0)) throw DomainError("contraction ratio must satisfy 0 < |lambda| < 1");
  if (!(std::abs(t) < 1.0)) throw DomainError("trace requires |t| < 1");
  if (N < 2) throw DomainError("trace requires N >= 2");
  if (std::abs(t) * std::pow(std::abs(lambda), -(N - 1)) > detail::kTraceMagnitudeLimit)
    throw DomainError("|lambda^{-N} t| exceeds 2^52; digits would not be exact");
  return detail::trace_unchecked(lambda, t, N);
}

struct TransitionBound {
  double bound = 0.0;
  int branching = 0;
};

inline TransitionBound digit_transition_bound(Complex lambda) {
  if (std::abs(lambda.imag()) <= 1e-14) throw RegimeError("digit transition bound requires a non-real lambda");
  const double b = 0.5 * (1.0 + 3.0 / std::norm(lambda));
  return {b, static_cast<int>(std::ceil(b))};
}

struct DigitCheck {
  std::int64_t traces = 0;
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  std::int64_t uniqueness_checked = 0;
  std::int64_t uniqueness_violations = 0;

  DigitCheck& operator+=(const DigitCheck& o) {
    traces += o.traces;
    checked += o.checked;
    violations += o.violations;
    uniqueness_checked += o.uniqueness_checked;
    uniqueness_violations += o.uniqueness_violations;
    return *this;
  }
};

/// Checks the transition inequality at every interior index, and that three
/// consecutive good indices leave exactly one admissible next digit.
inline DigitCheck check_trace(const EKTrace& tr) {
  DigitCheck out;
  out.traces = 1;
  const double a = tr.lambda.real();
  const double mod2 = std::norm(tr.lambda);
  const double bound = 0.5 * (1.0 + 3.0 / mod2);
  const double tight = tr.rho * (1.0 + 1.0 / mod2 + 2.0 * std::abs(a) / mod2);
  std::vector<char> good(static_cast<std::size_t>(tr.N), 0);
  for (int j : tr.good_indices) good[static_cast<std::size_t>(j)] = 1;
  for (int j = 1; j + 1 < tr.N; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const double center = (2.0 * a * static_cast<double>(tr.r[k]) - static_cast<double>(tr.r[k - 1])) / mod2;
    const double next = static_cast<double>(tr.r[k + 1]);
    const double slack = 1e-9 * std::max({1.0, std::abs(center), std::abs(next)});
    ++out.checked;
    if (std::abs(next - center) > bound + slack) ++out.violations;
    if (good[k - 1] && good[k] && good[k + 1]) {
      ++out.uniqueness_checked;
      const auto lo = static_cast<std::int64_t>(std::ceil(center - tight - slack));
      const auto hi = static_cast<std::int64_t>(std::floor(center + tight + slack));
      const bool unique = hi == lo && lo == tr.r[k + 1];
      if (!unique) ++out.uniqueness_violations;
    }
  }
  return out;
}

/// Uniform t in the unit disk, sample_count traces of length N.
inline DigitCheck verify_digit_inequality(Complex lambda, std::int64_t sample_count, int N, std::uint64_t seed,
                                          unsigned workers = 0) {
  if (sample_count < 0) throw DomainError("sample count must be non-negative");
  constexpr std::int64_t kChunk = 1024;
  const auto chunks = static_cast<std::size_t>((sample_count + kChunk - 1) / kChunk);
  std::vector<DigitCheck> partial(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    std::mt19937_64 engine(stream_seed(seed, c));
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t end = std::min(sample_count, begin + kChunk);
    for (std::int64_t i = begin; i < end; ++i) {
      const double radius = std::sqrt(uniform01(engine));
      const double angle = kTwoPi * uniform01(engine);
      const Complex t = std::polar(radius * (1.0 - 1e-15), angle);
      partial[c] += check_trace(ek_trace(lambda, t, N));
    }
  });
  DigitCheck total;
  for (const auto& p : partial) total += p;
  return total;
}

struct EnumerationResult {
  std::int64_t count = 0;
  double bound = 0.0;
  double log_bound = 0.0;
  int required_good = 0;
  std::int64_t nodes = 0;
  std::vector<std::vector<std::int64_t>> sequences;  ///< filled only on request
};

namespace detail {

using Polygon = std::vector<std::array<double, 2>>;

// Keeps the part of poly with a x + b y <= c.
inline Polygon clip(const Polygon& poly, double a, double b, double c) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    const double fp = a * p[0] + b * p[1] - c;
    const double fq = a * q[0] + b * q[1] - c;
    if (fp <= 0.0) out.push_back(p);
    if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
      const double s = fp / (fp - fq);
      out.push_back({p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])});
    }
  }
  return out;
}

inline double area(const Polygon& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    s += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(s);
}

inline double distance_to_origin(const Polygon& poly) {
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  double sign = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    const double cross = p[0] * q[1] - p[1] * q[0];
    if (cross != 0.0) {
      if (sign == 0.0) sign = cross;
      else if ((cross > 0.0) != (sign > 0.0)) inside = false;
    }
    const double ex = q[0] - p[0], ey = q[1] - p[1];
    const double len2 = ex * ex + ey * ey;
    double s = len2 > 0.0 ? -(p[0] * ex + p[1] * ey) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    best = std::min(best, std::hypot(p[0] + s * ex, p[1] + s * ey));
  }
  return inside ? 0.0 : best;
}

struct Piece {
  Polygon poly;
  int good = 0;
};

class DigitEnumerator {
 public:
  DigitEnumerator(Complex lambda, int N, int required_good, std::int64_t node_budget,
                  std::vector<std::vector<std::int64_t>>* sink = nullptr)
      : lambda_(lambda), N_(N), required_(required_good), budget_(node_budget), rho_(ek_rho(lambda)), sink_(sink) {
    Complex power{1.0, 0.0};
    const Complex inverse = 1.0 / lambda;
    double width = 1.0;
    for (int j = 0; j < N; ++j) {
      coeff_.push_back({power.real(), -power.imag()});  // Re(power * t) = alpha x - beta y
      min_area_.push_back(1e-12 * width * width);
      power *= inverse;
      width *= std::abs(lambda);
    }
    transition_ = digit_transition_bound(lambda).bound;
  }

  std::int64_t run() {
    Polygon square{{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}};
    std::vector<std::int64_t> prefix;
    descend(0, {Piece{square, 0}}, prefix);
    return count_;
  }

  std::int64_t nodes() const { return nodes_; }

 private:
  Polygon strip(const Polygon& poly, int j, double lo, double hi) const {
    const auto [a, b] = coeff_[static_cast<std::size_t>(j)];
    return clip(clip(poly, a, b, hi), -a, -b, -lo);
  }

  bool alive(const Polygon& poly, int j) const {
    return poly.size() >= 3 && area(poly) > min_area_[static_cast<std::size_t>(j)] && distance_to_origin(poly) < 1.0 + 1e-12;
  }

  void descend(int j, const std::vector<Piece>& pieces, std::vector<std::int64_t>& prefix) {
    if (++nodes_ > budget_) throw BudgetError("digit enumeration exceeded its node budget");
    const auto [a, b] = coeff_[static_cast<std::size_t>(j)];
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (const auto& piece : pieces)
      for (const auto& p : piece.poly) {
        const double v = a * p[0] + b * p[1];
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    auto rlo = static_cast<std::int64_t>(std::floor(vmin + 0.5));
    auto rhi = static_cast<std::int64_t>(std::floor(vmax + 0.5));
    if (j >= 2) {
      const double mod2 = std::norm(lambda_);
      const double center = (2.0 * lambda_.real() * static_cast<double>(prefix[static_cast<std::size_t>(j - 1)]) -
                             static_cast<double>(prefix[static_cast<std::size_t>(j - 2)])) / mod2;
      rlo = std::max(rlo, static_cast<std::int64_t>(std::ceil(center - transition_ - 1e-9)));
      rhi = std::min(rhi, static_cast<std::int64_t>(std::floor(center + transition_ + 1e-9)));
    }
    const int remaining = N_ - j - 1;
    for (std::int64_t r = rlo; r <= rhi; ++r) {
      const double rd = static_cast<double>(r);
      std::vector<Piece> next;
      for (const auto& piece : pieces) {
        auto keep = [&](Polygon poly, int good) {
          if (good + remaining >= required_ && alive(poly, j)) next.push_back({std::move(poly), good});
        };
        keep(strip(piece.poly, j, rd - rho_, rd + rho_), piece.good + 1);
        keep(strip(piece.poly, j, rd - 0.5, rd - rho_), piece.good);
        keep(strip(piece.poly, j, rd + rho_, rd + 0.5), piece.good);
      }
      if (next.empty()) continue;
      if (j + 1 == N_) {
        ++count_;
        if (sink_) {
          sink_->push_back(prefix);
          sink_->back().push_back(r);
        }
        continue;
      }
      prefix.push_back(r);
      descend(j + 1, next, prefix);
      prefix.pop_back();
    }
  }

  Complex lambda_;
  int N_;
  int required_;
  std::int64_t budget_;
  double rho_;
  std::vector<std::vector<std::int64_t>>* sink_;
  double transition_ = 0.0;
  std::vector<std::array<double, 2>> coeff_;
  std::vector<double> min_area_;
  std::int64_t count_ = 0;
  std::int64_t nodes_ = 0;
};

}  // namespace detail

/// Exhaustively counts digit sequences (r_0, ..., r_{N-1}) realized by some
/// |t| < 1 with at least ceil((1 - eps~) N) good indices. Feasibility is
/// tracked exactly with convex polygons in the (Re t, Im t) plane.
inline EnumerationResult enumerate_digit_sequences(Complex lambda, double epsilon_tilde, int N,
                                                   std::int64_t node_budget = 10'000'000,
                                                   bool collect_sequences = false) {
  if (std::abs(lambda.imag()) <= 1e-14) throw RegimeError("digit enumeration requires a non-real lambda");
  if (N < 1) throw DomainError("N must be positive");
  if (N > 14) throw BudgetError("exhaustive digit enumeration is limited to N <= 14");
  if (!(epsilon_tilde >= 0.0)) throw DomainError("eps~ must be non-negative");
  const double et = std::min(epsilon_tilde, 1.0);
  EnumerationResult out;
  out.required_good = static_cast<int>(std::ceil((1.0 - et) * N - 1e-12));
  detail::DigitEnumerator e(lambda, N, out.required_good, node_budget, collect_sequences ? &out.sequences : nullptr);
  out.count = e.run();
  out.nodes = e.nodes();
  out.log_bound = log_sequence_count_bound(complex_branching(lambda), et, N);
  out.bound = std::exp(out.log_bound);
  return out;
}

struct CoveringReport {
  double T = 0.0;
  int N = 0;
  double epsilon = 0.0;
  double epsilon_tilde = 0.0;
  double threshold = 0.0;
  std::int64_t empirical_count = 0;
  std::int64_t total_cells = 0;
  double bound_count = 0.0;
  double log_bound_count = 0.0;
  int subgrid_k = 0;
  std::int64_t sampled_points = 0;
  std::int64_t qualifying_samples = 0;
  std::int64_t inclusion_violations = 0;
  bool degenerate = false;
  Complex digit_difference;
  DecayBound bound;
};

/// Scans |xi| <= T = |lambda|^{-N}, counts unit cells whose sampled maximum
/// reaches T^{-eps}, and checks every qualifying sample for membership of
/// t = (w_2 - w_1) lambda^N conj(xi) in S(N, eps~). The digit difference
/// normalizes the first two digits to 0 and 1.
inline CoveringReport covering_report(const IFSDescriptor& ifs, double epsilon, int N, int subgrid_k = 4,
                                      double tol = 1e-10, unsigned workers = 0, std::size_t cell_budget = 5'000'000) {
  if (ifs.is_atomic()) throw RegimeError("covering reports need a non-atomic IFS");
  if (ifs.lambda_is_real()) throw RegimeError("covering reports need a non-real lambda");
  if (N < 2) throw DomainError("N must be at least 2");
  if (subgrid_k < 1) throw DomainError("subgrid size must be positive");
  const auto w = ifs.digits();
  std::size_t second = 1;
  while (w[second] == w[0]) ++second;
  std::vector<double> reordered{ifs.probs()[0], ifs.probs()[second]};
  for (std::size_t k = 1; k < ifs.size(); ++k)
    if (k != second) reordered.push_back(ifs.probs()[k]);
  const ProbabilityVector p(std::move(reordered));

  CoveringReport rep;
  rep.N = N;
  rep.epsilon = epsilon;
  rep.subgrid_k = subgrid_k;
  rep.digit_difference = w[second] - w[0];
  rep.T = std::pow(std::abs(ifs.lambda()), -N);
  const double estimated_cells = kPi * (rep.T + 1.5) * (rep.T + 1.5);
  if (estimated_cells > static_cast<double>(cell_budget)) throw BudgetError("covering scan exceeds the cell budget");
  const CoveringBound cb = covering_bound(ifs.lambda(), p, epsilon, N);
  rep.bound = cb.bound;
  rep.epsilon_tilde = cb.bound.epsilon_tilde;
  rep.bound_count = cb.count;
  rep.log_bound_count = cb.log_count;
  rep.threshold = std::pow(rep.T, -epsilon);

  Complex lambda_n{1.0, 0.0};
  for (int n = 0; n < N; ++n) lambda_n *= ifs.lambda();
  const Complex to_t = rep.digit_difference * lambda_n;

  struct CellResult {
    double max_abs = 0.0;
    std::int64_t qualifying = 0;
    std::int64_t violations = 0;
  };
  const auto layout = disk_cells(rep.T);
  std::vector<CellResult> results(layout.size());
  parallel_for(layout.size(), workers, [&](std::size_t idx) {
    const auto [i, j] = layout[idx];
    CellResult cr;
    for (int a = 0; a < subgrid_k; ++a) {
      for (int b = 0; b < subgrid_k; ++b) {
        const Complex xi = cell_sample(i, j, a, b, subgrid_k);
        // At least N + 1 factors so the product dominates the Erdos-Kahane one.
        const double value = std::abs(mu_hat(ifs, xi, tol, N + 1));
        cr.max_abs = std::max(cr.max_abs, value);
        if (value < rep.threshold) continue;
        ++cr.qualifying;
        const EKTrace tr = detail::trace_unchecked(ifs.lambda(), to_t * std::conj(xi), N);
        if (!tr.in_sparse_set(rep.epsilon_tilde) && value > rep.threshold + 1e-9) ++cr.violations;
      }
    }
    results[idx] = cr;
  });
  rep.total_cells = static_cast<std::int64_t>(layout.size());
  rep.sampled_points = rep.total_cells * subgrid_k * subgrid_k;
  for (const auto& cr : results) {
    if (cr.max_abs >= rep.threshold) ++rep.empirical_count;
    rep.qualifying_samples += cr.qualifying;
    rep.inclusion_violations += cr.violations;
  }
  rep.degenerate = rep.empirical_count == rep.total_cells;
  return rep;
}

}  // namespace selfsim
