#ifndef ERGOTEST_TABLES_HPP
#define ERGOTEST_TABLES_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "ergotest/enumeration.hpp"

namespace ergotest {

/// Probabilities (or frequencies) of every word of length 0..depth, stored in
/// enumeration order: levels[l][lex_code(B)] for |B| = l. levels[0] is the
/// empty word and always holds 1.
struct TupleTable {
  std::size_t alphabet_size = 0;
  std::vector<std::vector<double>> levels;

  std::size_t depth() const noexcept { return levels.empty() ? 0 : levels.size() - 1; }

  double at(const Word& w) const { return levels.at(w.size()).at(lex_code(w, alphabet_size)); }

  static TupleTable empty_word(std::size_t alphabet_size) {
    return TupleTable{alphabet_size, {std::vector<double>{1.0}}};
  }
};

/// A truncated distance together with a certified bound on what truncation
/// omitted: the true value lies in [value, value + tail_bound].
struct DistanceValue {
  double value = 0.0;
  double tail_bound = 0.0;
  std::size_t depth = 0;

  double lower() const noexcept { return value; }
  double upper() const noexcept { return value + tail_bound; }
};

/// sum_{|B_i| <= depth} 2^-i |a(B_i) - b(B_i)|, with the tail mass t_depth.
inline DistanceValue weighted_distance(const TupleTable& a, const TupleTable& b, std::size_t depth) {
  if (a.alphabet_size != b.alphabet_size) throw ValidationError("tuple tables over different alphabets");
  if (a.depth() < depth || b.depth() < depth) throw ValidationError("tuple table shallower than requested depth");
  double sum = 0.0;
  double w = 1.0;
  for (std::size_t l = 1; l <= depth; ++l) {
    const auto& x = a.levels[l];
    const auto& y = b.levels[l];
    for (std::size_t c = 0; c < x.size(); ++c) {
      w *= 0.5;
      sum += w * std::abs(x[c] - y[c]);
    }
  }
  return DistanceValue{sum, weight_tail(a.alphabet_size, depth), depth};
}

}  // namespace ergotest

#endif  // ERGOTEST_TABLES_HPP
