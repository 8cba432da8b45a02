#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qpa/equilibrium.hpp"

namespace qpa {
namespace {

TEST(CharResidual, SpecExamples) {
  const ValuationProfile v({1.0, 1.0});
  const double third = oracle::symmetric_power_bid(1.0, 1.0, 2);
  for (double r : char_residual(WeightSpec::power(1.0), v, BidVector({third, third}))) {
    EXPECT_NEAR(r, 0.0, 1e-12);
  }
  const double b = oracle::lambert_half_w2();
  for (double r : char_residual(WeightSpec::exponential(2.0), v, BidVector({b, b}))) {
    EXPECT_NEAR(r, 0.0, 1e-10);
  }
  for (double r : char_residual(WeightSpec::power(1.0), v, BidVector({0.5, 0.5}))) {
    EXPECT_NEAR(r, 1.0 / 6.0, 1e-15);
  }
}

TEST(CharResidual, Errors) {
  const ValuationProfile v({1.0, 1.0, 1.0});
  EXPECT_THROW(char_residual(WeightSpec::power(1.0), v, BidVector({0.5, 0.0, 0.0})),
               DegenerateInput);
  // a_1 rounds to 1: the rivals' weight is below 1e-15 of the total.
  EXPECT_THROW(char_residual(WeightSpec::exponential(100.0), v,
                             BidVector({0.9, 1e-3, 1e-3})),
               DegenerateInput);
  EXPECT_THROW(char_residual(WeightSpec::power(1.0), v, BidVector({0.5, 0.5})),
               DimensionMismatch);
}

TEST(CharResidual, ExponentialClosedFormMatchesGenericForm) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const WeightSpec spec = WeightSpec::exponential(oracle::log_uniform(rng, 0.05, 50.0));
    const std::size_t n = 2 + rng() % 5;
    std::vector<double> values(n), bids(n);
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = oracle::uniform(rng, 0.5, 10.0);
      bids[i] = oracle::uniform(rng, 0.01, values[i]);
    }
    const ValuationProfile v(values);
    const BidVector b(bids);
    std::vector<double> closed, generic;
    try {
      closed = char_residual(spec, v, b);
      generic = char_residual_generic(spec, v, b);
    } catch (const DegenerateInput&) {
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(closed[i], generic[i], 1e-12 * std::max(1.0, std::abs(closed[i])));
    }
  }
}

TEST(CharResidual, PolynomialUsesGenericForm) {
  // Linear polynomial is the p = 1 power weight.
  const ValuationProfile v({1.0, 1.0});
  const BidVector b({0.5, 0.25});
  const auto poly = char_residual(WeightSpec::polynomial({2.0}), v, b);
  const auto pow = char_residual_generic(WeightSpec::power(1.0), v, b);
  EXPECT_NEAR(poly[0], pow[0], 1e-14);
  EXPECT_NEAR(poly[1], pow[1], 1e-14);
}

TEST(CharResidual, SmallAtConvergedDynamics) {
  std::mt19937_64 rng(12);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const WeightSpec spec =
        trial % 3 == 0   ? WeightSpec::exponential(oracle::log_uniform(rng, 0.1, 20.0))
        : trial % 3 == 1 ? WeightSpec::power(oracle::log_uniform(rng, 0.1, 20.0))
                         : WeightSpec::polynomial({oracle::uniform(rng, 0.1, 1.0),
                                                   oracle::uniform(rng, 0.0, 1.0)});
    const std::size_t n = 2 + rng() % 4;
    std::vector<double> values(n);
    for (auto& x : values) x = oracle::uniform(rng, 0.6, 5.0);
    const ValuationProfile v(values);
    const auto trace = run_dynamics(spec, v, {.max_iters = 300, .tol = 1e-15});
    if (!(trace.residual < 1e-10)) continue;
    ++checked;
    for (double r : char_residual(spec, v, trace.final)) {
      EXPECT_LT(std::abs(r), 1e-8) << to_string(spec);
    }
  }
  EXPECT_GT(checked, 40);
}

TEST(CharacterizationRhs, IncreasingInSteepness) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5000; ++trial) {
    const double v = oracle::uniform(rng, 0.5, 10.0);
    const double b = oracle::uniform(rng, 1e-3, v);
    const double complement = oracle::uniform(rng, 1e-3, 1.0);
    const double s1 = oracle::log_uniform(rng, 0.05, 100.0);
    const double s2 = s1 * oracle::log_uniform(rng, 1.001, 10.0);
    EXPECT_LT(characterization_rhs(WeightSpec::exponential(s1), v, b, complement),
              characterization_rhs(WeightSpec::exponential(s2), v, b, complement));
    EXPECT_LT(characterization_rhs(WeightSpec::power(s1), v, b, complement),
              characterization_rhs(WeightSpec::power(s2), v, b, complement));
  }
}

TEST(CorollaryBounds, SpecExamples) {
  const auto a = corollary_bounds(ValuationProfile({2.0, 1.0}), 4.0);
  EXPECT_EQ(a.bounds, (std::vector<double>{0.5, 0.5}));
  EXPECT_TRUE(a.premise_ok);
  EXPECT_FALSE(a.degenerate);

  const auto b = corollary_bounds(ValuationProfile({2.0, 1.0}), 1.0);
  EXPECT_EQ(b.bounds, (std::vector<double>{0.0, 0.0}));
  EXPECT_TRUE(b.degenerate);
  EXPECT_FALSE(b.premise_ok);

  const auto c = corollary_bounds(ValuationProfile({10.0, 10.0, 10.0}), 2.0);
  EXPECT_EQ(c.bounds, (std::vector<double>{9.0, 9.0, 9.0}));
  EXPECT_TRUE(c.premise_ok);
}

TEST(CorollaryBounds, KeepsCallerOrder) {
  const auto w = corollary_bounds(ValuationProfile({1.0, 3.0, 2.0}), 10.0);
  EXPECT_EQ(w.order, (std::vector<std::size_t>{1, 2, 0}));
  // Top bidder (index 1) gets the second-highest value minus 2/c.
  EXPECT_NEAR(w.bounds[1], 1.8, 1e-15);
  EXPECT_NEAR(w.bounds[2], 1.8, 1e-15);
  EXPECT_NEAR(w.bounds[0], 0.8, 1e-15);
  EXPECT_TRUE(w.premise_ok);
}

TEST(BoundPremise, SpecExamples) {
  const WeightSpec spec = WeightSpec::exponential(1.0);
  const ValuationProfile v({2.0, 1.0, 1.5});
  const auto zeros = bound_premise(spec, v, std::vector<double>{0.4, 0.3, 0.0});
  EXPECT_TRUE(zeros[2]);

  // w = v on v = (2, 1), c = 1, evaluated straight from the inequality.
  const ValuationProfile v2({2.0, 1.0});
  const double f1 = std::exp(2.0) - 1.0;
  const double f2 = std::exp(1.0) - 1.0;
  const double a1 = f1 / (f1 + f2);
  const double rhs1 = 2.0 - (1.0 - std::exp(-2.0)) / (1.0 - a1);
  const double rhs2 = 1.0 - (1.0 - std::exp(-1.0)) / (1.0 - (1.0 - a1));
  const auto at_values = bound_premise(spec, v2, std::vector<double>{2.0, 1.0});
  EXPECT_EQ(at_values[0], 2.0 <= rhs1);
  EXPECT_EQ(at_values[1], 1.0 <= rhs2);
  EXPECT_FALSE(at_values[0]);

  EXPECT_THROW(bound_premise(WeightSpec::power(1.0), v2, std::vector<double>{0.5, 0.5}),
               ParameterError);
  EXPECT_THROW(bound_premise(spec, v2, std::vector<double>{0.5, 0.0}), DegenerateInput);
}

TEST(BoxMappingProbe, SpecExamples) {
  const ValuationProfile v({2.0, 1.0});
  const WeightSpec spec = WeightSpec::exponential(4.0);
  const auto w = corollary_bounds(v, 4.0);
  const auto report = box_mapping_probe(spec, v, w, 1000, 1);
  EXPECT_EQ(report.violations, 0u);
  ASSERT_TRUE(report.worst_margin.has_value());
  EXPECT_GE(*report.worst_margin, -1e-9);

  const auto empty = box_mapping_probe(spec, v, w, 0, 1);
  EXPECT_EQ(empty.violations, 0u);
  EXPECT_FALSE(empty.worst_margin.has_value());

  BoundVector corrupted = w;
  corrupted.bounds = {2.0, 1.0};
  EXPECT_THROW(box_mapping_probe(spec, v, corrupted.bounds, 10, 1), ParameterError);
  corrupted.premise_ok = false;
  EXPECT_THROW(box_mapping_probe(spec, v, corrupted, 10, 1), ParameterError);
}

TEST(BoxMappingProbe, ReproducibleAcrossCalls) {
  const ValuationProfile v({3.0, 2.0, 1.5});
  const WeightSpec spec = WeightSpec::exponential(5.0);
  const auto w = corollary_bounds(v, 5.0);
  const auto a = box_mapping_probe(spec, v, w, 200, 77);
  const auto b = box_mapping_probe(spec, v, w, 200, 77);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  const auto c = box_mapping_probe(spec, v, w, 200, 78);
  EXPECT_NE(a.worst_margin, c.worst_margin);
}

TEST(BoxMappingProbe, NoViolationsForCorollaryBounds) {
  std::mt19937_64 rng(55);
  int probed = 0;
  while (probed < 10) {
    const std::size_t n = 2 + rng() % 4;
    std::vector<double> values(n);
    for (auto& x : values) x = oracle::uniform(rng, 0.5, 10.0);
    const double c = oracle::log_uniform(rng, 0.5, 50.0);
    const ValuationProfile v(values);
    const auto w = corollary_bounds(v, c);
    if (!w.premise_ok) continue;
    ++probed;
    EXPECT_EQ(box_mapping_probe(WeightSpec::exponential(c), v, w, 200, rng()).violations,
              0u);
  }
}

}  // namespace
}  // namespace qpa
