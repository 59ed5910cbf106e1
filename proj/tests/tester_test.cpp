#include <gtest/gtest.h>

#include <cmath>

#include "ergotest/tester.hpp"

using namespace ergotest;

namespace {

const Alphabet kBin = Alphabet::binary();

ProcessPtr iid(double p0) { return std::make_shared<const IIDProcess>(kBin, std::vector<double>{p0, 1.0 - p0}); }

ProcessPtr markov(double p00, double p10) {
  return std::make_shared<const MarkovProcess>(kBin, 1, std::vector<double>{p00, 1 - p00, p10, 1 - p10});
}

HypothesisPtr single(ProcessPtr p) { return std::make_shared<const FiniteHypothesis>(std::vector<ProcessPtr>{p}); }

std::shared_ptr<const MarkovFamilyHypothesis> box(double a0, double b0, double a1, double b1) {
  return std::make_shared<const MarkovFamilyHypothesis>(kBin, 1, std::vector<double>{a0, 0.0, a1, 0.0},
                                                        std::vector<double>{b0, 1.0, b1, 1.0}, SearchOptions{0.1});
}

}  // namespace

TEST(UniformTest, SeparatesDistantMarkovSingletons) {
  TupleEnumeration e(kBin);
  auto rho = markov(0.9, 0.2);
  auto xi = markov(0.3, 0.7);
  ASSERT_GE(exact_distance(*rho, *xi, e, 6).value, 0.1);
  auto h0 = single(rho);
  auto h1 = single(xi);
  int zeros = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto x = rho->sample(100'000, make_stream(11, {t}));
    zeros += uniform_test(x, *h0, *h1, e, 6).decision == 0;
  }
  EXPECT_GE(zeros, 99);
}

TEST(UniformTest, ZeroDistanceToAlternativeDecidesOne) {
  TupleEnumeration e(kBin);
  Sample x(kBin, std::string(50, '0'));
  auto v = uniform_test(x, *single(iid(0.5)), *single(iid(1.0)), e, 8);
  EXPECT_EQ(v.d1.distance.value, 0.0);
  EXPECT_EQ(v.decision, 1);
}

TEST(UniformTest, TieGoesToOne) {
  TupleEnumeration e(kBin);
  auto h = single(iid(0.4));
  for (std::uint64_t t = 0; t < 20; ++t) {
    auto x = markov(0.6, 0.3)->sample(500, make_stream(12, {t}));
    auto v = uniform_test(x, *h, *h, e, 6);
    EXPECT_EQ(v.d0.distance.value, v.d1.distance.value);
    EXPECT_EQ(v.decision, 1);
  }
  // Two distinct members at the same distance: 1/4 and 3/4 mirror each other on "01".
  auto v = uniform_test(Sample(kBin, "01"), *single(iid(0.25)), *single(iid(0.75)), e, 1);
  EXPECT_EQ(v.d0.distance.value, v.d1.distance.value);
  EXPECT_EQ(v.decision, 1);
}

TEST(UniformTest, SwappingHypothesesFlipsNonTies) {
  TupleEnumeration e(kBin);
  auto a = single(markov(0.7, 0.4));
  auto b = box(0.2, 0.6, 0.3, 0.9);
  int flipped = 0;
  for (std::uint64_t t = 0; t < 30; ++t) {
    auto x = markov(0.5 + 0.01 * static_cast<double>(t), 0.45)->sample(2000, make_stream(13, {t}));
    auto forward = uniform_test(x, *a, *b, e, 5);
    auto backward = uniform_test(x, *b, *a, e, 5);
    if (forward.d0.distance.value == forward.d1.distance.value) continue;
    EXPECT_EQ(forward.decision, 1 - backward.decision);
    ++flipped;
  }
  EXPECT_EQ(flipped, 30);
}

TEST(Proportion, NormalApproximation) {
  Proportion p{200, 10};
  EXPECT_DOUBLE_EQ(p.rate(), 0.05);
  EXPECT_DOUBLE_EQ(p.half_width(), 1.96 * std::sqrt(0.05 * 0.95 / 200));
  EXPECT_EQ(Proportion({10, 0}).half_width(), 0.0);
  EXPECT_EQ(Proportion({10, 0}).lower(), 0.0);
  EXPECT_EQ(Proportion({10, 10}).upper(), 1.0);
}

TEST(ConsistencyCurve, DisjointIidSingletons) {
  TupleEnumeration e(kBin);
  auto p3 = iid(0.3);
  auto p7 = iid(0.7);
  std::vector<std::size_t> sizes{100, 1000, 10000};
  auto report = consistency_curve(*single(p3), *single(p7), {{"iid0.3", p3, 0}, {"iid0.7", p7, 1}}, sizes, 200, e, 6,
                                  0.05, {5, 1, 1});
  ASSERT_EQ(report.cells.size(), 6u);
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t s = 0; s + 1 < sizes.size(); ++s) {
      const auto& now = report.cells[g * 3 + s].errors;
      const auto& next = report.cells[g * 3 + s + 1].errors;
      EXPECT_LE(next.rate(), now.rate() + now.half_width() + next.half_width());
    }
    EXPECT_LE(report.cells[g * 3 + 2].errors.rate(), 0.05);
  }
  ASSERT_TRUE(report.n_alpha.has_value());
  EXPECT_LE(*report.n_alpha, 10000u);
}

TEST(ConsistencyCurve, DisjointMarkovBoxes) {
  TupleEnumeration e(kBin);
  auto h0 = box(0.7, 0.9, 0.7, 0.9);
  auto h1 = box(0.1, 0.4, 0.1, 0.4);
  auto report = consistency_curve(*h0, *h1, {{"a", markov(0.75, 0.85), 0}, {"b", markov(0.35, 0.15), 1}}, {3000}, 40,
                                  e, 5, 0.05, {6, 2, 1});
  for (const auto& c : report.cells) EXPECT_EQ(c.errors.hits, 0u) << c.generator;
}

TEST(ConsistencyCurve, OverlappingHypothesesErrAtLeastHalf) {
  TupleEnumeration e(kBin);
  auto p = iid(0.5);
  auto h = single(p);
  auto report = consistency_curve(*h, *h, {{"as0", p, 0}, {"as1", p, 1}}, {100, 10000}, 50, e, 6, 0.05, {7, 3, 1});
  for (std::size_t s = 0; s < 2; ++s) {
    double total = report.cells[s].errors.rate() + report.cells[2 + s].errors.rate();
    EXPECT_GE(total / 2.0, 0.5);
  }
  EXPECT_FALSE(report.n_alpha.has_value());
}

TEST(ConsistencyCurve, RejectsGeneratorsOutsideTheirHypothesis) {
  TupleEnumeration e(kBin);
  auto p3 = iid(0.3);
  auto p7 = iid(0.7);
  EXPECT_THROW(consistency_curve(*single(p3), *single(p7), {{"wrong", p7, 0}}, {100}, 5, e, 4, 0.05, {}),
               ValidationError);
  EXPECT_THROW(consistency_curve(*single(p3), *single(p7), {{"label", p3, 2}}, {100}, 5, e, 4, 0.05, {}),
               ValidationError);
  EXPECT_THROW(consistency_curve(*box(0.7, 0.9, 0.7, 0.9), *single(p7), {{"outside", markov(0.5, 0.8), 0}}, {100}, 5,
                                 e, 4, 0.05, {}),
               ValidationError);
}

TEST(ConsistencyCurve, ThreadCountDoesNotChangeResults) {
  TupleEnumeration e(kBin);
  auto a = markov(0.6, 0.4);
  auto b = markov(0.5, 0.5);
  auto run = [&](std::size_t threads) {
    return consistency_curve(*single(a), *single(b), {{"a", a, 0}, {"b", b, 1}}, {200, 800}, 60, e, 6, 0.05,
                             {99, 4, threads});
  };
  auto one = run(1);
  for (std::size_t threads : {2u, 5u}) {
    auto other = run(threads);
    ASSERT_EQ(one.cells.size(), other.cells.size());
    for (std::size_t i = 0; i < one.cells.size(); ++i) EXPECT_EQ(one.cells[i].errors.hits, other.cells[i].errors.hits);
  }
}

TEST(ValidateLemma1, SameProcessConverges) {
  TupleEnumeration e(kBin);
  auto rho = markov(0.8, 0.35);
  auto table = validate_lemma1(*rho, *rho, {100'000}, 100, e, 6, {8, 0, 1});
  EXPECT_EQ(table.exact.value, 0.0);
  EXPECT_LT(table.rows[0].percentile95, 0.01);
}

TEST(ValidateLemma1, ConstantProcessIsDeterministic) {
  TupleEnumeration e(kBin);
  auto zeros = iid(1.0);
  auto xi = markov(0.4, 0.7);
  auto table = validate_lemma1(*zeros, *xi, {6, 50, 1000}, 10, e, 6, {9, 0, 1});
  for (const auto& row : table.rows) {
    EXPECT_LE(row.max, 1e-15) << row.n;
    EXPECT_LE(row.percentile95, row.max);
  }
}

TEST(ValidateLemma1, PercentileDecreasesForDistinctIid) {
  TupleEnumeration e(kBin);
  auto table = validate_lemma1(*iid(0.35), *iid(0.6), {100, 1000, 10000}, 100, e, 6, {10, 0, 1});
  EXPECT_GT(table.exact.value, 0.0);
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
    EXPECT_GT(table.rows[i].percentile95, table.rows[i + 1].percentile95);
  }
}

TEST(ValidateLemma2, EnforcesSizeOrdering) {
  TupleEnumeration e(kBin);
  auto h = single(iid(0.5));
  EXPECT_THROW(validate_lemma2(*iid(0.5), *h, 100, 50, {0.1}, 10, e, 4, {}), ValidationError);
  EXPECT_THROW(validate_lemma2(*iid(0.5), *h, 100, 0, {0.1}, 10, e, 4, {}), ValidationError);
  EXPECT_NO_THROW(validate_lemma2(*iid(0.5), *h, 101, 50, {0.1}, 10, e, 4, {}));
}

TEST(ValidateLemma2, TrivialRegimes) {
  TupleEnumeration e(kBin);
  auto rho = markov(0.7, 0.4);
  auto checks = validate_lemma2(*rho, *single(iid(0.5)), 1000, 100, {1.5, 0.01}, 50, e, 6, {11, 0, 1});
  ASSERT_EQ(checks.size(), 4u);
  // eps above 1: the distance never gets that large.
  EXPECT_EQ(checks[0].inequality, "far");
  EXPECT_EQ(checks[0].left.hits, 0u);
  EXPECT_EQ(checks[0].verdict, DeviationVerdict::satisfied);
  // eps below the slack: nonpositive threshold, right side is certain.
  EXPECT_LE(checks[2].threshold, 0.0);
  EXPECT_EQ(checks[2].right.hits, 50u);
  EXPECT_EQ(checks[2].verdict, DeviationVerdict::satisfied);
  EXPECT_DOUBLE_EQ(checks[2].threshold, 0.01 - 200.0 / 901.0 - weight_tail(2, 100));
  EXPECT_DOUBLE_EQ(checks[3].threshold, 1000 * 0.01 / 901.0 + 200.0 / 901.0);
}

TEST(ValidateLemma2, SingletonMarkovNeverViolated) {
  TupleEnumeration e(kBin);
  auto rho = markov(0.75, 0.3);
  std::vector<double> eps;
  for (int i = 1; i <= 10; ++i) eps.push_back(0.02 * i);
  auto checks = validate_lemma2(*rho, *single(rho), 4000, 500, eps, 300, e, 6, {12, 0, 1});
  EXPECT_EQ(checks.size(), 20u);
  for (const auto& c : checks) EXPECT_NE(c.verdict, DeviationVerdict::violated) << c.inequality << " " << c.epsilon;
}

TEST(ValidateLemma2, VerdictRule) {
  // Built from the documented rule: violated only when the intervals separate.
  TupleEnumeration e(kBin);
  auto checks = validate_lemma2(*iid(0.5), *single(iid(0.5)), 2000, 10, {0.3}, 100, e, 4, {13, 0, 1});
  for (const auto& c : checks) {
    bool separated = c.left.lower() > c.right.upper();
    EXPECT_EQ(c.verdict == DeviationVerdict::violated, separated);
    if (!separated) {
      EXPECT_EQ(c.verdict == DeviationVerdict::satisfied, c.left.rate() <= c.right.rate());
    }
  }
  EXPECT_STREQ(to_string(DeviationVerdict::inconclusive), "inconclusive");
}

TEST(Impossibility, AdmittedMembersAreInsideTheBall) {
  TupleEnumeration e(kBin);
  auto rho = iid(0.5);
  auto nu = iid(0.6);
  auto report = impossibility_demo(rho, nu, 0.05, 0.5, {3, 100, 1e6}, {1000}, 60, e, 6, {14, 5, 1});
  EXPECT_GT(report.rho_nu.lower(), 0.05);
  ASSERT_FALSE(report.admitted.empty());
  for (const auto& m : report.admitted) EXPECT_LE(m.distance_to_center.upper(), 0.05);
  for (const auto& m : report.rejected) EXPECT_GT(m.distance_to_center.upper(), 0.05);
  EXPECT_EQ(report.curve.cells.size(), (2 + report.admitted.size()) * 1);
  ASSERT_EQ(report.worst.size(), 1u);
  // The slowest switcher spends about half its samples entirely in rho.
  EXPECT_GE(report.worst[0].errors.rate(), 0.25);
}

TEST(Impossibility, NegligibleShareBehavesLikeThePositiveCase) {
  TupleEnumeration e(kBin);
  auto report = impossibility_demo(iid(0.5), iid(0.6), 0.05, 0.01, {100}, {10000}, 60, e, 6, {15, 6, 1});
  ASSERT_EQ(report.admitted.size(), 1u);
  EXPECT_LE(report.worst[0].errors.rate(), 0.05);
}

TEST(Impossibility, RequiresCertifiedSeparation) {
  TupleEnumeration e(kBin);
  EXPECT_THROW(impossibility_demo(iid(0.5), iid(0.52), 0.05, 0.5, {100}, {100}, 5, e, 6, {}), ValidationError);
  EXPECT_THROW(impossibility_demo(iid(0.5), iid(0.7), 0.05, 1.0, {100}, {100}, 5, e, 6, {}), ValidationError);
}
