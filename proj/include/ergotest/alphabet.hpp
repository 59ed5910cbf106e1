#ifndef ERGOTEST_ALPHABET_HPP
#define ERGOTEST_ALPHABET_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ergotest {

/// Raised for malformed input: bad symbols, violated preconditions, broken
/// configuration. The CLI maps it to the validation exit code.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

/// Finite ordered alphabet of single-character symbols. A symbol's index is
/// its position in the declaration string.
class Alphabet {
 public:
  Alphabet() = default;

  explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    if (symbols_.size() < 2) {
      throw ValidationError("alphabet needs at least two symbols, got \"" + symbols_ + "\"");
    }
    if (symbols_.size() > 255) {
      throw ValidationError("alphabet larger than 255 symbols is not supported");
    }
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (symbols_.find(symbols_[i], i + 1) != std::string::npos) {
        throw ValidationError(std::string("duplicate alphabet symbol '") + symbols_[i] + "'");
      }
    }
  }

  static Alphabet binary() { return Alphabet("01"); }

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& symbols() const noexcept { return symbols_; }
  char symbol(Symbol s) const { return symbols_.at(s); }

  std::optional<Symbol> index_of(char c) const noexcept {
    auto pos = symbols_.find(c);
    if (pos == std::string::npos) return std::nullopt;
    return static_cast<Symbol>(pos);
  }

  /// Parses a word written as a string of symbols. Throws on the first
  /// unknown character, naming its 1-based position.
  Word parse(std::string_view text) const {
    Word w;
    w.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      auto s = index_of(text[i]);
      if (!s) {
        throw ValidationError("symbol '" + std::string(1, text[i]) + "' at position " +
                              std::to_string(i + 1) + " is not in alphabet \"" + symbols_ + "\"");
      }
      w.push_back(*s);
    }
    return w;
  }

  std::string format(const Word& w) const {
    std::string out;
    out.reserve(w.size());
    for (Symbol s : w) out.push_back(symbol(s));
    return out;
  }

  bool operator==(const Alphabet&) const = default;

 private:
  std::string symbols_;
};

inline void require_same_alphabet(const Alphabet& a, const Alphabet& b) {
  if (a != b) {
    throw ValidationError("alphabet mismatch: \"" + a.symbols() + "\" vs \"" + b.symbols() + "\"");
  }
}

/// Integer power for small alphabets; throws if the result would overflow.
inline std::uint64_t checked_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (r > UINT64_MAX / base) throw ValidationError("tuple space too large");
    r *= base;
  }
  return r;
}

}  // namespace ergotest

#endif  // ERGOTEST_ALPHABET_HPP
