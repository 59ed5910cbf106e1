#ifndef ERGOTEST_EMPIRICAL_HPP
#define ERGOTEST_EMPIRICAL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ergotest/enumeration.hpp"
#include "ergotest/processes.hpp"
#include "ergotest/sample.hpp"
#include "ergotest/tables.hpp"

namespace ergotest {

inline void check_word(const Word& word, const Alphabet& alphabet) {
  for (Symbol s : word) {
    if (s >= alphabet.size()) throw ValidationError("word symbol outside alphabet");
  }
}

/// #(X, B): overlapping occurrences of B in X.
inline std::uint64_t count_occurrences(const Sample& x, const Word& word) {
  check_word(word, x.alphabet());
  if (word.empty() || word.size() > x.size()) return 0;
  auto xs = x.symbols();
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + word.size() <= xs.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < word.size() && match; ++j) match = xs[i + j] == word[j];
    count += match ? 1 : 0;
  }
  return count;
}

/// nu(X, B) = #(X, B) / (|X| - |B| + 1) when |X| >= |B|, else 0.
inline double frequency(const Sample& x, const Word& word) {
  if (word.size() > x.size()) return 0.0;
  return static_cast<double>(count_occurrences(x, word)) / static_cast<double>(x.size() - word.size() + 1);
}

/// Window counts of every word of length 1..depth, one pass over the
/// sample. Counts at the deepest length come from a rolling code; each
/// shorter length sums its one-symbol extensions and adds back the final
/// window, which has no extension.
inline std::vector<std::vector<std::uint64_t>> window_counts(std::span<const Symbol> xs, std::size_t alphabet_size,
                                                             std::size_t depth) {
  std::vector<std::vector<std::uint64_t>> counts(depth + 1);
  for (std::size_t l = 1; l <= depth; ++l) counts[l].assign(static_cast<std::size_t>(checked_pow(alphabet_size, l)), 0);
  const std::size_t top = std::min(depth, xs.size());
  if (top == 0) return counts;

  const std::uint64_t modulus = checked_pow(alphabet_size, top);
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    code = (code * alphabet_size + xs[i]) % modulus;
    if (i + 1 >= top) ++counts[top][code];
  }
  // code now holds the last top-window; its suffixes are the last windows of
  // every shorter length.
  for (std::size_t l = top; l-- > 1;) {
    auto& shorter = counts[l];
    const auto& longer = counts[l + 1];
    for (std::size_t c = 0; c < longer.size(); ++c) shorter[c / alphabet_size] += longer[c];
    ++shorter[static_cast<std::size_t>(code % checked_pow(alphabet_size, l))];
  }
  return counts;
}

/// nu(X, B) for every B with |B| <= depth.
inline TupleTable frequency_table(std::span<const Symbol> xs, std::size_t alphabet_size, std::size_t depth) {
  auto counts = window_counts(xs, alphabet_size, depth);
  TupleTable table = TupleTable::empty_word(alphabet_size);
  for (std::size_t l = 1; l <= depth; ++l) {
    std::vector<double> level(counts[l].size(), 0.0);
    if (xs.size() >= l) {
      const double windows = static_cast<double>(xs.size() - l + 1);
      for (std::size_t c = 0; c < level.size(); ++c) level[c] = static_cast<double>(counts[l][c]) / windows;
    }
    table.levels.push_back(std::move(level));
  }
  return table;
}

inline TupleTable frequency_table(const Sample& x, std::size_t depth) {
  return frequency_table(x.symbols(), x.alphabet().size(), depth);
}

/// d-hat(X, rho): the distance between sample frequencies and process
/// marginals over tuples of length <= depth. Tuples longer than the sample
/// have frequency 0 and still contribute w_i rho(B_i).
inline DistanceValue empirical_distance(const Sample& x, const Process& rho, const TupleEnumeration& enumeration,
                                        std::size_t depth) {
  require_same_alphabet(x.alphabet(), rho.alphabet());
  require_same_alphabet(x.alphabet(), enumeration.alphabet());
  enumeration.check_depth(depth);
  return weighted_distance(frequency_table(x, depth), rho.marginal_table(depth), depth);
}

}  // namespace ergotest

#endif  // ERGOTEST_EMPIRICAL_HPP
