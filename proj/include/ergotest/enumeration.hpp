#ifndef ERGOTEST_ENUMERATION_HPP
#define ERGOTEST_ENUMERATION_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ergotest/alphabet.hpp"

namespace ergotest {

/// Lexicographic rank of a word among all words of the same length.
inline std::uint64_t lex_code(const Word& w, std::size_t alphabet_size) {
  std::uint64_t code = 0;
  for (Symbol s : w) code = code * alphabet_size + s;
  return code;
}

inline Word word_of_code(std::uint64_t code, std::size_t length, std::size_t alphabet_size) {
  Word w(length);
  for (std::size_t i = length; i-- > 0;) {
    w[i] = static_cast<Symbol>(code % alphabet_size);
    code /= alphabet_size;
  }
  return w;
}

/// Number of words of length 1..k, i.e. M_k = sum_{j=1..k} |A|^j. Saturates
/// at UINT64_MAX instead of overflowing.
inline std::uint64_t words_up_to(std::size_t alphabet_size, std::size_t k) {
  std::uint64_t total = 0;
  std::uint64_t block = 1;
  for (std::size_t j = 1; j <= k; ++j) {
    if (block > UINT64_MAX / alphabet_size) return UINT64_MAX;
    block *= alphabet_size;
    if (total > UINT64_MAX - block) return UINT64_MAX;
    total += block;
  }
  return total;
}

/// Weight 2^-i of the i-th tuple; underflows to zero for huge i.
inline double tuple_weight(std::uint64_t index) {
  if (index > 1100) return 0.0;
  return std::ldexp(1.0, -static_cast<int>(index));
}

/// Total weight of all tuples longer than k, without any depth limit:
/// t_k = sum_{i > M_k} 2^-i = 2^-M_k.
inline double weight_tail(std::size_t alphabet_size, std::size_t k) {
  return tuple_weight(words_up_to(alphabet_size, k));
}

/// Canonical enumeration B_1, B_2, ... of all words over an alphabet: shorter
/// words first, lexicographic by symbol index within a length. Only words up
/// to max_depth are addressable; the weight of anything deeper is reported
/// through tail_mass.
class TupleEnumeration {
 public:
  static constexpr std::size_t kDefaultMaxDepth = 8;
  static constexpr std::uint64_t kMaxMaterialized = std::uint64_t{1} << 24;

  explicit TupleEnumeration(Alphabet alphabet, std::size_t max_depth = kDefaultMaxDepth)
      : alphabet_(std::move(alphabet)), max_depth_(max_depth) {
    if (max_depth_ == 0) throw ValidationError("max depth must be positive");
    if (words_up_to(alphabet_.size(), max_depth_) > kMaxMaterialized) {
      throw ValidationError("max depth " + std::to_string(max_depth_) + " materializes too many tuples for alphabet size " +
                            std::to_string(alphabet_.size()));
    }
    block_start_.resize(max_depth_ + 2);
    for (std::size_t l = 0; l <= max_depth_ + 1; ++l) block_start_[l] = words_up_to(alphabet_.size(), l);
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t max_depth() const noexcept { return max_depth_; }

  /// M_L, the number of materialized tuples.
  std::uint64_t size() const noexcept { return block_start_[max_depth_]; }

  /// M_l for l <= max_depth.
  std::uint64_t count_up_to(std::size_t l) const {
    check_depth(l);
    return block_start_[l];
  }

  /// 1-based global index of a word.
  std::uint64_t index_of(const Word& word) const {
    if (word.empty()) throw ValidationError("empty word has no index");
    if (word.size() > max_depth_) {
      throw ValidationError("word length " + std::to_string(word.size()) + " exceeds max depth " +
                            std::to_string(max_depth_));
    }
    for (Symbol s : word) {
      if (s >= alphabet_.size()) throw ValidationError("symbol index outside alphabet");
    }
    return block_start_[word.size() - 1] + lex_code(word, alphabet_.size()) + 1;
  }

  std::uint64_t index_of(const std::string& text) const { return index_of(alphabet_.parse(text)); }

  Word tuple_at(std::uint64_t index) const {
    if (index == 0 || index > size()) {
      throw ValidationError("tuple index " + std::to_string(index) + " outside 1.." + std::to_string(size()));
    }
    std::size_t len = 1;
    while (block_start_[len] < index) ++len;
    return word_of_code(index - 1 - block_start_[len - 1], len, alphabet_.size());
  }

  double weight(std::uint64_t index) const { return tuple_weight(index); }

  /// t_k: total weight of tuples longer than k, 2^-M_k.
  double tail_mass(std::size_t k) const {
    check_depth(k);
    return tuple_weight(block_start_[k]);
  }

  void check_depth(std::size_t depth) const {
    if (depth > max_depth_) {
      throw ValidationError("depth " + std::to_string(depth) + " exceeds max depth " + std::to_string(max_depth_));
    }
  }

 private:
  Alphabet alphabet_;
  std::size_t max_depth_;
  std::vector<std::uint64_t> block_start_;  // block_start_[l] = M_l
};

}  // namespace ergotest

#endif  // ERGOTEST_ENUMERATION_HPP
