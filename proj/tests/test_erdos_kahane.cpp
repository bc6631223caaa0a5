#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "selfsim/erdos_kahane.hpp"

using namespace selfsim;

namespace {

const Complex kLambda(0.5, 0.5);

}  // namespace

TEST(EKTrace, ZeroFrequency) {
  const EKTrace tr = ek_trace(kLambda, 0.0, 10);
  for (int j = 0; j < 10; ++j) {
    EXPECT_EQ(tr.r[j], 0);
    EXPECT_EQ(tr.eps[j], 0.0);
  }
  EXPECT_EQ(tr.good_count(), 10);
  EXPECT_TRUE(tr.in_sparse_set(0.0));
}

TEST(EKTrace, DirectOracle) {
  const Complex t(0.3, 0.4);
  const EKTrace tr = ek_trace(kLambda, t, 5);
  EXPECT_NEAR(tr.rho, 1.0 / 14.0, 1e-15);
  for (int j = 0; j < 5; ++j) {
    const double v = (t / std::pow(kLambda, j)).real();
    const double r = std::floor(v + 0.5);
    EXPECT_EQ(static_cast<double>(tr.r[j]), r) << "j = " << j;
    EXPECT_NEAR(tr.eps[j], v - r, 1e-12);
    EXPECT_GE(tr.eps[j], -0.5);
    EXPECT_LT(tr.eps[j], 0.5);
    const bool good = std::abs(v - r) < tr.rho;
    EXPECT_EQ(std::count(tr.good_indices.begin(), tr.good_indices.end(), j) == 1, good);
  }
}

TEST(EKTrace, RecurrenceReconstruction) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.7, 0.7);
  const double a = kLambda.real(), b = kLambda.imag(), m2 = std::norm(kLambda);
  for (int k = 0; k < 200; ++k) {
    const Complex t(U(rng), U(rng));
    const EKTrace tr = ek_trace(kLambda, t, 30);
    for (int j = 0; j + 1 < 30; ++j) {
      const double next = (a / m2) * (static_cast<double>(tr.r[j]) + tr.eps[j]) + (b / m2) * tr.d(j);
      const double exact = tr.c(j + 1);
      EXPECT_NEAR(next, exact, 1e-9 * std::max(1.0, std::abs(exact)));
      EXPECT_NEAR(static_cast<double>(tr.r[j]) + tr.eps[j], tr.c(j), 1e-9 * std::pow(std::abs(kLambda), -j));
    }
  }
}

TEST(EKTrace, SparseMembershipRule) {
  const EKTrace tr = ek_trace(kLambda, {0.11, -0.52}, 20);
  const int good = tr.good_count();
  for (double et : {0.0, 0.1, 0.25, 0.5, 0.9}) EXPECT_EQ(tr.in_sparse_set(et), good >= (1.0 - et) * 20);
}

TEST(EKTrace, Errors) {
  EXPECT_THROW(ek_trace(0.5, 0.1, 10), RegimeError);
  EXPECT_THROW(ek_trace(kLambda, 1.0, 10), DomainError);
  EXPECT_THROW(ek_trace(kLambda, {0.8, 0.8}, 10), DomainError);
  EXPECT_THROW(ek_trace(kLambda, 0.1, 200), DomainError);
}

TEST(TransitionBound, Values) {
  const TransitionBound tb = digit_transition_bound(kLambda);
  EXPECT_DOUBLE_EQ(tb.bound, 3.5);
  EXPECT_EQ(tb.branching, 4);
  const TransitionBound near_one = digit_transition_bound(std::polar(1.0 - 1e-9, 1.0));
  EXPECT_NEAR(near_one.bound, 2.0, 1e-8);
  // the bound approaches 2 from above, so its ceiling stays at 3
  EXPECT_GT(near_one.bound, 2.0);
  EXPECT_EQ(near_one.branching, 3);
  double previous = 1e300;
  for (double r = 0.3; r < 1.0; r += 0.05) {
    const double v = digit_transition_bound(std::polar(r, 0.7)).bound;
    EXPECT_LT(v, previous);
    previous = v;
  }
}

TEST(VerifyDigits, NoViolations) {
  const DigitCheck c = verify_digit_inequality(kLambda, 2000, 20, 1, 1);
  EXPECT_EQ(c.traces, 2000);
  EXPECT_GT(c.checked, 0);
  EXPECT_EQ(c.violations, 0);
  EXPECT_EQ(c.uniqueness_violations, 0);
  const DigitCheck other = verify_digit_inequality(std::polar(0.8, 2.0), 2000, 20, 2, 1);
  EXPECT_EQ(other.violations, 0);
  EXPECT_EQ(other.uniqueness_violations, 0);
}

TEST(VerifyDigits, ZeroTraceIsClean) {
  const DigitCheck c = check_trace(ek_trace(kLambda, 0.0, 20));
  EXPECT_EQ(c.violations, 0);
  EXPECT_EQ(c.uniqueness_violations, 0);
}

TEST(VerifyDigits, DeterministicAcrossWorkers) {
  const DigitCheck a = verify_digit_inequality(kLambda, 5000, 20, 9, 1);
  const DigitCheck b = verify_digit_inequality(kLambda, 5000, 20, 9, 3);
  EXPECT_EQ(a.checked, b.checked);
  EXPECT_EQ(a.uniqueness_checked, b.uniqueness_checked);
}

TEST(Enumeration, SmallCases) {
  EXPECT_LE(enumerate_digit_sequences(kLambda, 0.05, 1).count, 3);
  for (double et : {0.05, 0.1})
    for (int N : {6, 8}) {
      const EnumerationResult r = enumerate_digit_sequences(kLambda, et, N);
      EXPECT_GE(r.count, 1);
      EXPECT_LE(static_cast<double>(r.count), r.bound);
    }
}

TEST(Enumeration, NondecreasingInEpsTilde) {
  for (int N : {4, 6, 8}) {
    std::int64_t previous = 0;
    for (double et : {0.0, 0.1, 0.2, 0.4, 1.0}) {
      const std::int64_t c = enumerate_digit_sequences(kLambda, et, N).count;
      EXPECT_GE(c, previous);
      previous = c;
    }
  }
}

TEST(Enumeration, ContainsEverySampledSequence) {
  const int N = 8;
  for (double et : {0.1, 0.3, 1.0}) {
    const EnumerationResult r = enumerate_digit_sequences(kLambda, et, N, 10'000'000, true);
    ASSERT_EQ(static_cast<std::int64_t>(r.sequences.size()), r.count);
    const std::set<std::vector<std::int64_t>> found(r.sequences.begin(), r.sequences.end());
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int admissible = 0;
    for (int k = 0; k < 20000; ++k) {
      const Complex t(U(rng), U(rng));
      if (std::abs(t) >= 1.0) continue;
      const EKTrace tr = ek_trace(kLambda, t, N);
      if (!tr.in_sparse_set(et)) continue;
      ++admissible;
      EXPECT_TRUE(found.count(tr.r)) << "t = " << t;
    }
    EXPECT_GT(admissible, 0);
  }
}

TEST(Enumeration, Limits) {
  EXPECT_THROW(enumerate_digit_sequences(kLambda, 0.1, 15), BudgetError);
  EXPECT_THROW(enumerate_digit_sequences(0.5, 0.1, 5), RegimeError);
  EXPECT_THROW(enumerate_digit_sequences(kLambda, 1.0, 12, 100), BudgetError);
}

TEST(Covering, SmallScale) {
  const auto ifs = IFSDescriptor::bernoulli(kLambda);
  const CoveringReport a = covering_report(ifs, 0.05, 8, 3, 1e-10, 1);
  EXPECT_NEAR(a.T, 16.0, 1e-9);
  EXPECT_GE(a.empirical_count, 1);
  EXPECT_LE(a.empirical_count, a.total_cells);
  EXPECT_EQ(a.inclusion_violations, 0);
  EXPECT_LE(static_cast<double>(a.empirical_count), a.bound_count);
  EXPECT_EQ(a.subgrid_k, 3);
  const CoveringReport b = covering_report(ifs, 0.05, 8, 3, 1e-10, 4);
  EXPECT_EQ(a.empirical_count, b.empirical_count);
  EXPECT_EQ(a.qualifying_samples, b.qualifying_samples);
  EXPECT_EQ(a.sampled_points, b.sampled_points);
}

TEST(Covering, LargeEpsilonIsDegenerate) {
  // p = 0.3 keeps |Phi| >= 0.4, so no sample is an exact zero of the transform
  const CoveringReport r = covering_report(IFSDescriptor::bernoulli(kLambda, 0.3), 40.0, 6, 2, 1e-10, 1);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.empirical_count, r.total_cells);
}

TEST(Covering, NormalizesDigits) {
  // translated and rescaled digit pair: normalized through w2 - w1
  const IFSDescriptor shifted(kLambda, {Complex(0.3, 0.1), Complex(0.8, 0.1)}, ProbabilityVector({0.5, 0.5}));
  const CoveringReport r = covering_report(shifted, 0.05, 8, 3, 1e-10, 1);
  EXPECT_NEAR(std::abs(r.digit_difference - 0.5), 0.0, 1e-15);
  EXPECT_EQ(r.inclusion_violations, 0);
  EXPECT_THROW(covering_report(IFSDescriptor::bernoulli(0.5), 0.05, 8), RegimeError);
}
