#include <gtest/gtest.h>

#include <random>

#include "ergotest/empirical.hpp"
#include "oracles.hpp"

using namespace ergotest;

namespace {

const Alphabet kBin = Alphabet::binary();

ProcessPtr uniform_iid() { return std::make_shared<IIDProcess>(kBin, std::vector<double>{0.5, 0.5}); }

}  // namespace

TEST(CountOccurrences, Examples) {
  EXPECT_EQ(count_occurrences(Sample(kBin, "0001"), kBin.parse("00")), 2u);
  EXPECT_EQ(count_occurrences(Sample(kBin, "0000"), kBin.parse("00")), 3u);
  EXPECT_EQ(count_occurrences(Sample(kBin, "01"), kBin.parse("000")), 0u);
  EXPECT_THROW(count_occurrences(Sample(kBin, "01"), Word{3}), ValidationError);
}

TEST(Frequency, Examples) {
  EXPECT_DOUBLE_EQ(frequency(Sample(kBin, "0001"), kBin.parse("00")), 2.0 / 3.0);
  EXPECT_EQ(frequency(Sample(kBin, "0000"), kBin.parse("00")), 1.0);
  EXPECT_EQ(frequency(Sample(kBin, "01"), kBin.parse("000")), 0.0);
}

TEST(Sample, RejectsEmpty) { EXPECT_THROW(Sample(kBin, ""), ValidationError); }

TEST(WindowCounts, AgreeWithNaiveCounterOnRandomPairs) {
  std::mt19937_64 gen(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t a = 2 + gen() % 3;
    std::size_t n = 1 + gen() % 60;
    std::vector<Symbol> xs(n);
    for (auto& s : xs) s = static_cast<Symbol>(gen() % a);
    std::size_t len = 1 + gen() % 6;
    Word b(len);
    for (auto& s : b) s = static_cast<Symbol>(gen() % a);

    std::string sym = std::string("abcd").substr(0, a);
    Sample x(Alphabet(sym), xs);
    std::uint64_t expected = oracle::naive_count(xs, b);
    ASSERT_EQ(count_occurrences(x, b), expected);
    auto counts = window_counts(xs, a, 6);
    ASSERT_EQ(counts[len][lex_code(b, a)], expected) << "trial " << trial;
  }
}

TEST(FrequencyTable, EachLevelSumsToOne) {
  std::mt19937_64 gen(7);
  std::vector<Symbol> xs(500);
  for (auto& s : xs) s = static_cast<Symbol>(gen() % 3);
  auto t = frequency_table(xs, 3, 5);
  for (std::size_t l = 1; l <= 5; ++l) {
    double s = 0.0;
    for (double v : t.levels[l]) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  // Lengths beyond the sample have all-zero frequencies.
  auto short_table = frequency_table(std::vector<Symbol>{0, 1}, 2, 4);
  for (double v : short_table.levels[3]) EXPECT_EQ(v, 0.0);
}

TEST(EmpiricalDistance, HandEvaluatedDepthOne) {
  TupleEnumeration e(kBin);
  auto rho = uniform_iid();
  auto d = empirical_distance(Sample(kBin, "0000"), *rho, e, 1);
  EXPECT_DOUBLE_EQ(d.value, 0.375);
  EXPECT_EQ(d.tail_bound, 0.25);
  EXPECT_EQ(d.depth, 1u);
  auto z = empirical_distance(Sample(kBin, "0101"), *rho, e, 1);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_EQ(z.tail_bound, 0.25);
}

TEST(EmpiricalDistance, TuplesLongerThanSampleStillCount) {
  TupleEnumeration e(kBin);
  auto rho = uniform_iid();
  // Hand evaluation: length 2 gives 23/256; length 3 adds (1/8) sum_{i=7..14} 2^-i.
  double expected = 23.0 / 256.0 + oracle::weight_sum(7, 14) / 8.0;
  EXPECT_NEAR(empirical_distance(Sample(kBin, "01"), *rho, e, 3).value, expected, 1e-15);
}

TEST(EmpiricalDistance, IdentityAgainstOwnFrequencies) {
  std::mt19937_64 gen(3);
  std::vector<Symbol> xs(300);
  for (auto& s : xs) s = static_cast<Symbol>(gen() % 2);
  auto t = frequency_table(xs, 2, 8);
  EXPECT_EQ(weighted_distance(t, t, 8).value, 0.0);
}

TEST(EmpiricalDistance, ValuesLieInUnitInterval) {
  TupleEnumeration e(kBin);
  std::mt19937_64 gen(11);
  auto rho = std::make_shared<MarkovProcess>(kBin, 1, std::vector<double>{0.9, 0.1, 0.2, 0.8});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Symbol> xs(1 + gen() % 40);
    for (auto& s : xs) s = static_cast<Symbol>(gen() % 2);
    auto d = empirical_distance(Sample(kBin, xs), *rho, e, 6);
    EXPECT_GE(d.value, 0.0);
    EXPECT_LE(d.value, 1.0);
  }
}

TEST(EmpiricalDistance, Errors) {
  TupleEnumeration e(kBin, 4);
  auto rho = uniform_iid();
  EXPECT_THROW(empirical_distance(Sample(kBin, "01"), *rho, e, 5), ValidationError);
  Alphabet ab("ab");
  EXPECT_THROW(empirical_distance(Sample(ab, "ab"), *rho, e, 2), ValidationError);
}
