#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "selfsim/measure.hpp"

using namespace selfsim;

namespace {

// Sorted copy so atom lists can be compared independent of order.
std::vector<Atom> sorted_atoms(const DiscreteMeasure& mu) {
  std::vector<Atom> a(mu.atoms().begin(), mu.atoms().end());
  std::sort(a.begin(), a.end(), [](const Atom& x, const Atom& y) {
    if (x.position.real() != y.position.real()) return x.position.real() < y.position.real();
    return x.position.imag() < y.position.imag();
  });
  return a;
}

void expect_same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  const auto x = sorted_atoms(merged(a, tol)), y = sorted_atoms(merged(b, tol));
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_NEAR(std::abs(x[k].position - y[k].position), 0.0, tol);
    EXPECT_NEAR(x[k].weight, y[k].weight, 1e-12);
  }
}

}  // namespace

TEST(ProbabilityVector, RejectsInvalidWeights) {
  EXPECT_THROW(ProbabilityVector({1.0}), DomainError);
  EXPECT_THROW(ProbabilityVector({0.5, 0.6}), DomainError);
  EXPECT_THROW(ProbabilityVector({1.0, 0.0}), DomainError);
  EXPECT_THROW(ProbabilityVector({1.5, -0.5}), DomainError);
  EXPECT_NO_THROW(ProbabilityVector({0.25, 0.75}));
}

TEST(IFSDescriptor, Validation) {
  EXPECT_THROW(IFSDescriptor::bernoulli(1.0), DomainError);
  EXPECT_THROW(IFSDescriptor::bernoulli(Complex(0.0, 0.0)), DomainError);
  EXPECT_THROW(IFSDescriptor(0.5, {0.0, 1.0, 2.0}, ProbabilityVector({0.5, 0.5})), DomainError);
  EXPECT_THROW(IFSDescriptor::bernoulli(0.5, 1.0), DomainError);
}

TEST(IFSDescriptor, Classification) {
  const auto complex_b = IFSDescriptor::bernoulli({0.5, 0.5});
  EXPECT_EQ(complex_b.regime(), BoundRegime::complex_lambda);
  const auto sier = IFSDescriptor::uniform(0.5, {0.0, 1.0, Complex(0.0, 1.0)});
  EXPECT_FALSE(sier.digits_collinear());
  EXPECT_EQ(sier.regime(), BoundRegime::real_noncollinear);
  const auto line = IFSDescriptor::uniform(0.5, {0.0, 1.0, 2.0});
  EXPECT_TRUE(line.digits_collinear());
  EXPECT_EQ(line.regime(), BoundRegime::unsupported);
  const auto atomic = IFSDescriptor::uniform(0.3, {0.0, 0.0});
  EXPECT_TRUE(atomic.is_atomic());
  EXPECT_EQ(atomic.regime(), BoundRegime::unsupported);
}

TEST(SupportRadius, Examples) {
  EXPECT_DOUBLE_EQ(support_radius(IFSDescriptor::bernoulli(0.5)), 2.0);
  EXPECT_NEAR(support_radius(IFSDescriptor::uniform({0.5, 0.5}, {0.0, 1.0})), 1.0 / (1.0 - 1.0 / std::sqrt(2.0)), 1e-12);
  EXPECT_EQ(support_radius(IFSDescriptor::uniform(0.5, {0.0, 0.0})), 0.0);
}

TEST(FiniteApproximation, DepthOneIsDigitLaw) {
  const IFSDescriptor ifs({0.3, 0.2}, {0.0, 1.0, Complex(0.0, 2.0)}, ProbabilityVector({0.2, 0.3, 0.5}));
  const auto mu = finite_approximation(ifs, 1);
  ASSERT_EQ(mu.size(), 3u);
  double found = 0.0;
  for (const auto& a : mu.atoms())
    for (std::size_t j = 0; j < 3; ++j)
      if (std::abs(a.position - ifs.digits()[j]) < 1e-15) {
        EXPECT_DOUBLE_EQ(a.weight, ifs.probs()[j]);
        found += 1.0;
      }
  EXPECT_EQ(found, 3.0);
}

TEST(FiniteApproximation, RealBernoulliDepthTwo) {
  const auto mu = finite_approximation(IFSDescriptor::bernoulli(0.5), 2);
  const auto a = sorted_atoms(mu);
  ASSERT_EQ(a.size(), 4u);
  const double expected[] = {-1.5, -0.5, 0.5, 1.5};
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(a[k].position.real(), expected[k], 1e-15);
    EXPECT_DOUBLE_EQ(a[k].weight, 0.25);
  }
}

TEST(FiniteApproximation, ComplexDepthTwo) {
  const auto mu = finite_approximation(IFSDescriptor::uniform({0.5, 0.5}, {0.0, 1.0}), 2);
  std::vector<Atom> expected{{{0.0, 0.0}, 0.25}, {{0.5, 0.5}, 0.25}, {{1.0, 0.0}, 0.25}, {{1.5, 0.5}, 0.25}};
  expect_same_measure(mu, DiscreteMeasure(expected), 1e-14);
}

TEST(FiniteApproximation, MergesCoincidentWords) {
  // lambda = 1/2 with digits {0, 1/2, 1}: words collide, mass must be conserved.
  const auto mu = finite_approximation(IFSDescriptor::uniform(0.5, {0.0, 0.5, 1.0}), 4);
  EXPECT_LT(mu.size(), 81u);
  EXPECT_NEAR(mu.total_mass(), 1.0, 1e-12);
}

TEST(FiniteApproximation, BudgetIsEnforced) {
  EXPECT_THROW(finite_approximation(IFSDescriptor::uniform({0.3, 0.1}, {0.0, 1.0, Complex(0, 1)}), 10, -1.0, 1000),
               BudgetError);
}

TEST(FiniteApproximation, SelfSimilarTelescoping) {
  const auto ifs = IFSDescriptor::bernoulli({0.4, 0.55}, 0.3);
  const int N = 3, M = 4;
  const auto lhs = convolve(finite_approximation(ifs, N), scale_rotate(finite_approximation(ifs, M), std::pow(ifs.lambda(), N)));
  expect_same_measure(lhs, finite_approximation(ifs, N + M), 1e-11);
}

TEST(Sample, AtomicIFS) {
  const auto mu = sample(IFSDescriptor::uniform(0.5, {0.0, 0.0}), 100, 1e-12, 3);
  for (const auto& a : mu.atoms()) EXPECT_EQ(a.position, Complex(0.0, 0.0));
  EXPECT_NEAR(mu.total_mass(), 1.0, 1e-12);
}

TEST(Sample, WithinSupport) {
  const auto mu = sample(IFSDescriptor::bernoulli(0.5), 10000, 1e-12, 9);
  for (const auto& a : mu.atoms()) {
    EXPECT_LE(std::abs(a.position.real()), 2.0);
    EXPECT_EQ(a.position.imag(), 0.0);
  }
}

TEST(Sample, EmpiricalMean) {
  const auto mu = sample(IFSDescriptor::uniform(0.5, {0.0, 1.0}), 1'000'000, 1e-12, 123, 0);
  Complex mean = 0.0;
  for (const auto& a : mu.atoms()) mean += a.weight * a.position;
  EXPECT_NEAR(mean.real(), 1.0, 0.01);
}

TEST(Sample, ReproducibleAcrossWorkers) {
  const auto ifs = IFSDescriptor::bernoulli({0.5, 0.5}, 0.3);
  const auto a = sample(ifs, 20000, 1e-12, 77, 1);
  const auto b = sample(ifs, 20000, 1e-12, 77, 4);
  const auto c = sample(ifs, 20000, 1e-12, 78, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.atoms()[k].position, b.atoms()[k].position);
    EXPECT_EQ(a.atoms()[k].weight, b.atoms()[k].weight);
  }
  EXPECT_NE(a.atoms()[0].position, c.atoms()[0].position);
}

TEST(StratifiedSample, KeepsDepthWeightsAndSupport) {
  const auto ifs = IFSDescriptor::bernoulli({0.5, 0.5});
  const auto base = finite_approximation(ifs, 6);
  const auto mu = stratified_sample(ifs, 6, 5);
  ASSERT_EQ(mu.size(), base.size());
  const double R = support_radius(ifs);
  const double tail = std::pow(std::abs(ifs.lambda()), 6) * R;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    EXPECT_EQ(mu.atoms()[k].weight, base.atoms()[k].weight);
    EXPECT_LE(std::abs(mu.atoms()[k].position - base.atoms()[k].position), tail + 1e-12);
    EXPECT_LE(std::abs(mu.atoms()[k].position), R + 1e-12);
  }
}

TEST(Convolve, Identities) {
  const auto mu = finite_approximation(IFSDescriptor::bernoulli({0.3, 0.6}, 0.4), 5);
  expect_same_measure(convolve(mu, DiscreteMeasure::dirac(0.0)), mu, 1e-14);
  const auto ab = convolve(DiscreteMeasure::dirac({1.0, 2.0}), DiscreteMeasure::dirac({-0.5, 0.25}));
  ASSERT_EQ(ab.size(), 1u);
  EXPECT_EQ(ab.atoms()[0].position, Complex(0.5, 2.25));
}

TEST(Convolve, ReproducesDepthTwo) {
  const auto ifs = IFSDescriptor::uniform({0.5, 0.5}, {0.0, 1.0});
  const DiscreteMeasure first({{0.0, 0.5}, {1.0, 0.5}});
  const DiscreteMeasure second({{0.0, 0.5}, {ifs.lambda(), 0.5}});
  expect_same_measure(convolve(first, second), finite_approximation(ifs, 2), 1e-14);
}

TEST(Convolve, CommutativeAndAssociative) {
  const DiscreteMeasure a({{{0.1, 0.0}, 0.3}, {{0.0, 0.7}, 0.7}});
  const DiscreteMeasure b({{{1.0, 1.0}, 0.5}, {{-1.0, 0.2}, 0.25}, {{0.3, -0.4}, 0.25}});
  const DiscreteMeasure c({{{0.01, 0.02}, 0.9}, {{2.0, 0.0}, 0.1}});
  expect_same_measure(convolve(a, b), convolve(b, a), 1e-13);
  expect_same_measure(convolve(convolve(a, b), c), convolve(a, convolve(b, c)), 1e-13);
}

TEST(ScaleRotate, GroupAction) {
  const auto mu = finite_approximation(IFSDescriptor::bernoulli({0.3, 0.6}), 4);
  expect_same_measure(scale_rotate(mu, 1.0), mu, 1e-15);
  const auto collapsed = scale_rotate(mu, 0.0);
  ASSERT_EQ(collapsed.size(), 1u);
  EXPECT_EQ(collapsed.atoms()[0].position, Complex(0.0, 0.0));
  EXPECT_NEAR(collapsed.atoms()[0].weight, 1.0, 1e-12);
  expect_same_measure(scale_rotate(scale_rotate(mu, Complex(0, 1)), Complex(0, 1)), scale_rotate(mu, -1.0), 1e-14);
}

TEST(Merge, WeightAveragedPosition) {
  const auto m = merge_atoms({{{0.0, 0.0}, 0.25}, {{1e-14, 0.0}, 0.75}}, 1e-12);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_NEAR(m[0].position.real(), 0.75e-14, 1e-20);
  EXPECT_DOUBLE_EQ(m[0].weight, 1.0);
}
