#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "selfsim/bounds.hpp"

using namespace selfsim;

namespace {

const ProbabilityVector kHalf({0.5, 0.5});
const Complex kLambda(0.5, 0.5);

// Largest epsilon with a valid bound, by bisection on the validity flag.
double valid_edge(const std::function<DecayBound(double)>& f) {
  double lo = 1e-9, hi = 1.0;
  while (f(hi).valid) hi *= 2.0;
  while (hi - lo > 1e-12 * lo) {
    const double mid = 0.5 * (lo + hi);
    (f(mid).valid ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST(Entropy, Values) {
  EXPECT_EQ(entropy_h(0.0), 0.0);
  EXPECT_EQ(entropy_h(1.0), 0.0);
  EXPECT_NEAR(entropy_h(0.5), std::log(2.0), 1e-15);
  for (double x : {0.1, 0.3}) EXPECT_NEAR(entropy_h(x), entropy_h(1.0 - x), 1e-15);
  EXPECT_NEAR(entropy_h(0.2), -0.2 * std::log(0.2) - 0.8 * std::log(0.8), 1e-15);
}

TEST(EtaTwoDigit, Values) {
  EXPECT_NEAR(eta_two_digit(1.0, 0.5, 0.5), 1.0, 1e-12);
  EXPECT_NEAR(eta_two_digit(1e-9, 0.5, 0.5), 0.0, 1e-12);
  // 1 - sqrt(p1^2 + 2 p1 p2 cos(pi c) + p2^2) evaluated by hand at c = 1/2
  EXPECT_NEAR(eta_two_digit(0.5, 0.3, 0.7), 1.0 - std::sqrt(0.09 + 0.49), 1e-15);
}

TEST(EtaTwoDigit, StrictlyIncreasing) {
  double previous = -1.0;
  for (int k = 1; k < 100; ++k) {
    const double v = eta_two_digit(k / 100.0, 0.5, 0.5);
    EXPECT_GT(v, previous);
    previous = v;
  }
}

TEST(EtaNumeric, MatchesClosedForm) {
  const std::vector<double> p{0.5, 0.5};
  for (double c : {0.2, 0.5, 0.8}) EXPECT_NEAR(eta_numeric(PhiKind::two_digit, p, c), eta_two_digit(c, 0.5, 0.5), 1e-6);
  const std::vector<double> q{0.3, 0.7};
  EXPECT_NEAR(eta_numeric(PhiKind::two_digit, q, 0.4), eta_two_digit(0.4, 0.3, 0.7), 1e-6);
}

TEST(EtaNumeric, RangeAndSmallC) {
  const std::vector<double> p{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (double c : {0.05, 0.2, 0.6, 0.9}) {
    for (PhiKind kind : {PhiKind::lattice_3digit, PhiKind::simplex_sum_d}) {
      const double v = eta_numeric(kind, p, c);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_LT(eta_numeric(PhiKind::lattice_3digit, p, 1e-4), 1e-4);
  EXPECT_LT(eta_numeric(PhiKind::lattice_3digit, p, 1e-3), eta_numeric(PhiKind::lattice_3digit, p, 0.1));
}

TEST(EtaNumeric, RejectsBadInput) {
  const std::vector<double> p{0.5, 0.5};
  EXPECT_THROW(eta_numeric(PhiKind::two_digit, p, 0.0), DomainError);
  EXPECT_THROW(eta_numeric(PhiKind::lattice_3digit, p, 0.5), DomainError);
}

TEST(DeltaComplex, RhoAndBranching) {
  const DecayBound b = delta_complex(kLambda, kHalf, 0.01);
  EXPECT_NEAR(b.rho, 1.0 / 14.0, 1e-15);
  EXPECT_EQ(b.branching, 4);
  EXPECT_NEAR(b.eta, eta_two_digit(1.0 / 7.0, 0.5, 0.5), 1e-15);
  // delta = [log(4) eps~ + h(eps~)] / log(sqrt 2), eps~ = log|lambda| / log(1 - eta) * eps
  const double et = std::log(std::abs(kLambda)) / std::log(1.0 - b.eta) * 0.01;
  EXPECT_NEAR(b.epsilon_tilde, et, 1e-14);
  EXPECT_NEAR(b.delta, (std::log(4.0) * et + entropy_h(et)) / std::log(std::sqrt(2.0)), 1e-12);
}

TEST(DeltaComplex, VanishesAndIncreases) {
  EXPECT_LT(delta_complex(kLambda, kHalf, 1e-9).delta, delta_complex(kLambda, kHalf, 1e-6).delta);
  EXPECT_LT(delta_complex(kLambda, kHalf, 1e-6).delta, 1e-3);
  const double edge = valid_edge([](double e) { return delta_complex(kLambda, kHalf, e); });
  double previous = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const DecayBound b = delta_complex(kLambda, kHalf, edge * k / 50.0);
    EXPECT_TRUE(b.valid);
    EXPECT_GT(b.delta, previous);
    EXPECT_GT(b.epsilon_tilde, 0.0);
    EXPECT_LT(b.epsilon_tilde, 1.0);
    EXPECT_GT(b.eta, 0.0);
    EXPECT_LE(b.eta, 1.0);
    previous = b.delta;
  }
}

TEST(DeltaComplex, InvalidCarriesReason) {
  const DecayBound b = delta_complex(kLambda, kHalf, 0.5);
  EXPECT_FALSE(b.valid);
  EXPECT_FALSE(b.reason.empty());
  EXPECT_THROW(delta_complex(0.5, kHalf, 0.01), RegimeError);
  EXPECT_THROW(delta_complex(kLambda, kHalf, 0.0), DomainError);
}

TEST(DeltaReal, BranchingAndLimits) {
  const auto p = ProbabilityVector::uniform(3);
  const DecayBound b = delta_real_noncollinear(0.5, p, 1e-3);
  EXPECT_EQ(b.branching, 4);
  EXPECT_EQ(b.regime, DecayRegime::real_noncollinear);
  const double d6 = delta_real_noncollinear(0.5, p, 1e-6).delta, d9 = delta_real_noncollinear(0.5, p, 1e-9).delta;
  EXPECT_LT(d6, b.delta);
  EXPECT_LT(d9, d6);
  EXPECT_LT(delta_real_noncollinear(0.5, p, 1e-12).delta, 1e-8);
  EXPECT_THROW(delta_real_noncollinear(1.5, p, 1e-3), RegimeError);
}

TEST(DeltaReal, ValidityFlipsWhereEpsTildeLeavesRange) {
  const auto p = ProbabilityVector::uniform(3);
  const DecayBound base = delta_real_noncollinear(0.5, p, 1e-3);
  auto f = [&](double e) { return detail::assemble_bound(DecayRegime::real_noncollinear, 0.5, e, base.eta, base.rho, 4, 4.0); };
  const double edge = valid_edge(f);
  const DecayBound inside = f(edge * (1.0 - 1e-9)), outside = f(edge * (1.0 + 1e-9));
  EXPECT_TRUE(inside.valid);
  EXPECT_FALSE(outside.valid);
  // either eps~ hits 1/2 or delta hits 2 at the edge, and the value is continuous there
  EXPECT_TRUE(std::abs(inside.epsilon_tilde - 0.5) < 1e-6 || std::abs(inside.delta - 2.0) < 1e-6);
  EXPECT_NEAR(inside.delta, outside.delta, 1e-6);
}

TEST(DeltaReal, IFSOverloadNormalizesDigits) {
  const IFSDescriptor ifs(0.5, {Complex(2.0, 2.0), 2.0, Complex(3.0, 2.0)}, ProbabilityVector({0.2, 0.3, 0.5}));
  const DecayBound a = delta_real_noncollinear(ifs, 1e-3);
  EXPECT_TRUE(std::isfinite(a.delta));
  EXPECT_THROW(delta_real_noncollinear(IFSDescriptor::uniform(0.5, {0.0, 1.0, 2.0}), 1e-3), RegimeError);
}

TEST(DeltaHigherDim, BranchingAndSharedPath) {
  const auto p = ProbabilityVector::uniform(4);
  const DecayBound b = delta_higherdim(0.5, p, 1e-3, 3);
  EXPECT_EQ(b.branching, 3);
  EXPECT_EQ(b.regime, DecayRegime::higher_dim);
  EXPECT_LT(delta_higherdim(0.5, p, 1e-6, 3).delta, 1e-3);
  EXPECT_THROW(delta_higherdim(0.5, p, 1e-3, 2), RegimeError);
  // Same assembly as the complex regime given the same eta, rho and branching.
  const DecayBound c = detail::assemble_bound(DecayRegime::complex_lambda, 0.5, 1e-3, b.eta, b.rho, 3, 1.0);
  EXPECT_DOUBLE_EQ(c.delta, b.delta);
  EXPECT_DOUBLE_EQ(c.epsilon_tilde, b.epsilon_tilde);
}

TEST(DecayBound, DispatchAndAtomicRefusal) {
  EXPECT_EQ(decay_bound(IFSDescriptor::bernoulli(kLambda), 0.01).regime, DecayRegime::complex_lambda);
  EXPECT_THROW(decay_bound(IFSDescriptor::uniform(kLambda, {1.0, 1.0}), 0.01), RegimeError);
  EXPECT_THROW(decay_bound(IFSDescriptor::bernoulli(0.5), 0.01), RegimeError);
}

TEST(CoveringBound, ZeroDepth) {
  const CoveringBound c = covering_bound(kLambda, kHalf, 0.01, 0);
  // aspect (1/2 + 1)/(2 * 1/2) = 1.5 -> q = (2 + 1) * 2 = 6
  EXPECT_EQ(c.squares_per_rectangle, 6.0);
  EXPECT_NEAR(c.count, 3.0 * 64.0 * 16.0 * 6.0, 1e-9);
}

TEST(CoveringBound, NondecreasingAndSlope) {
  double previous = 0.0;
  std::vector<double> logs;
  for (int N = 0; N <= 40; ++N) {
    const CoveringBound c = covering_bound(kLambda, kHalf, 0.01, N);
    EXPECT_GE(c.count, previous);
    previous = c.count;
    logs.push_back(c.log_count);
  }
  const double delta = delta_complex(kLambda, kHalf, 0.01).delta;
  const double log_inv = std::log(std::sqrt(2.0));
  // per-N growth is 3 eps~ log B + h; delta already holds one eps~ log B + h
  const DecayBound b = delta_complex(kLambda, kHalf, 0.01);
  const double expected = delta + 2.0 * b.epsilon_tilde * std::log(4.0) / log_inv;
  const double slope = (logs[40] - logs[10]) / (30.0 * log_inv);
  EXPECT_NEAR(slope, expected, 1e-9);
}

TEST(Flattening, RoundtripAndMonotone) {
  double previous = 0.0;
  for (double kappa : {0.05, 0.1, 0.3, 0.5, 1.0, 1.5}) {
    const FlatteningSolution s = solve_flattening_epsilon(kLambda, kHalf, kappa);
    EXPECT_LT(std::abs(kappa - 2.0 * s.epsilon - s.bound.delta), 1e-10);
    EXPECT_GT(s.sigma, 0.0);
    EXPECT_GE(s.epsilon, previous);
    previous = s.epsilon;
  }
  EXPECT_THROW(solve_flattening_epsilon(kLambda, kHalf, 2.5), DomainError);
}

TEST(Flattening, RealRegimeIFS) {
  const auto sier = IFSDescriptor::uniform(0.5, {0.0, 1.0, Complex(0.0, 1.0)});
  const FlatteningSolution s = solve_flattening_epsilon(sier, 0.5);
  const DecayBound direct = delta_real_noncollinear(sier, s.epsilon);
  EXPECT_LT(std::abs(0.5 - 2.0 * s.epsilon - direct.delta), 1e-10);
}

TEST(Bernoulli, ScaleIndexAndBase) {
  const Complex lambda = std::polar(0.95, kPi / 7.0);
  const DimensionBound b = bernoulli_unbiased_dim_lower(lambda);
  EXPECT_GT(b.lambda_N_modulus, 0.5);
  EXPECT_LT(b.lambda_N_modulus, 1.0 / std::sqrt(2.0));
  EXPECT_GE(std::pow(0.95, b.N - 1), 1.0 / std::sqrt(2.0));
  EXPECT_NEAR(b.base_dim2, std::log(0.5) / std::log(b.lambda_N_modulus), 1e-15);
  // base value log(sum p^2) / log|lambda^N| tends to 1 as |lambda^N| -> 1/2
  const DimensionBound near_half = bernoulli_unbiased_dim_lower(std::polar(1.0 / std::sqrt(2.0) + 1e-12, 0.3));
  EXPECT_EQ(near_half.N, 2);
  EXPECT_NEAR(near_half.base_dim2, 1.0, 1e-9);
  EXPECT_THROW(bernoulli_dim_lower(0.5, 0.5), RegimeError);
}

TEST(Bernoulli, SweepShape) {
  double prev_b = -1.0, prev_u = -1.0;
  for (double r : {0.90, 0.95, 0.99, 0.999}) {
    const Complex lambda = std::polar(r, kPi / 7.0);
    const DimensionBound b = bernoulli_dim_lower(lambda, 0.5);
    const DimensionBound u = bernoulli_unbiased_dim_lower(lambda);
    EXPECT_LE(b.dim2_lower, 2.0);
    EXPECT_LE(b.diminf_lower, b.dim2_lower);
    EXPECT_GE(b.dim2_lower, prev_b);
    EXPECT_GE(u.dim2_lower, prev_u);
    EXPECT_GE(u.dim2_lower, b.dim2_lower);
    if (!b.valid) {
      EXPECT_FALSE(b.reason.empty());
    }
    prev_b = b.dim2_lower;
    prev_u = u.dim2_lower;
  }
  EXPECT_TRUE(bernoulli_unbiased_dim_lower(std::polar(0.999, kPi / 7.0)).valid);
}

TEST(Bernoulli, RealPowerIsRefused) {
  // arg = pi/4 and N = 4 make lambda^N real.
  const double r = std::pow(0.7, 0.25);
  const DimensionBound b = bernoulli_dim_lower(std::polar(r, kPi / 4.0), 0.5);
  EXPECT_EQ(b.N, 4);
  EXPECT_FALSE(b.valid);
  EXPECT_EQ(b.reason, "lambda_power_is_real");
  EXPECT_EQ(b.dim2_lower, 0.0);
}
