#ifndef ERGOTEST_SAMPLE_HPP
#define ERGOTEST_SAMPLE_HPP

#include <span>
#include <string_view>
#include <vector>

#include "ergotest/alphabet.hpp"

namespace ergotest {

/// A finite sample X_1..X_n over an alphabet, n >= 1.
class Sample {
 public:
  Sample(Alphabet alphabet, std::vector<Symbol> symbols)
      : alphabet_(std::move(alphabet)), symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw ValidationError("sample must contain at least one symbol");
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (symbols_[i] >= alphabet_.size()) {
        throw ValidationError("sample symbol at position " + std::to_string(i + 1) + " outside alphabet");
      }
    }
  }

  Sample(Alphabet alphabet, std::string_view text) : Sample(alphabet, alphabet.parse(text)) {}

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return symbols_.size(); }
  std::span<const Symbol> symbols() const noexcept { return symbols_; }
  Symbol operator[](std::size_t i) const { return symbols_[i]; }

  /// The prefix X_1..X_k.
  Sample prefix(std::size_t k) const {
    if (k == 0 || k > symbols_.size()) throw ValidationError("prefix length out of range");
    return Sample(alphabet_, std::vector<Symbol>(symbols_.begin(), symbols_.begin() + static_cast<std::ptrdiff_t>(k)));
  }

  std::string to_string() const { return alphabet_.format(symbols_); }

  bool operator==(const Sample&) const = default;

 private:
  Alphabet alphabet_;
  std::vector<Symbol> symbols_;
};

}  // namespace ergotest

#endif  // ERGOTEST_SAMPLE_HPP
