#ifndef ERGOTEST_SAMPLE_IO_HPP
#define ERGOTEST_SAMPLE_IO_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ergotest/sample.hpp"

namespace ergotest {

/// Reads either one line of symbols ("0110...") or a single-column CSV with
/// one symbol per row. Bad symbols are reported by their 1-based sample
/// position.
inline Sample parse_sample(std::string_view text, const Alphabet& alphabet) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  if (text.empty()) throw ValidationError("sample is empty (at least one symbol required)");

  std::vector<Symbol> xs;
  auto bad = [&](char c, std::size_t pos) {
    return ValidationError("symbol '" + std::string(1, c) + "' at position " + std::to_string(pos) +
                           " is not in alphabet \"" + alphabet.symbols() + "\"");
  };
  if (text.find('\n') == std::string_view::npos) {
    xs.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      auto s = alphabet.index_of(text[i]);
      if (!s) throw bad(text[i], i + 1);
      xs.push_back(*s);
    }
    return Sample(alphabet, std::move(xs));
  }
  std::size_t row = 0;
  while (!text.empty()) {
    std::size_t end = text.find('\n');
    std::string_view line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    ++row;
    if (line.size() != 1) {
      throw ValidationError("row " + std::to_string(row) + " of single-column sample holds \"" + std::string(line) +
                            "\", expected one symbol");
    }
    auto s = alphabet.index_of(line[0]);
    if (!s) throw bad(line[0], row);
    xs.push_back(*s);
  }
  return Sample(alphabet, std::move(xs));
}

inline Sample read_sample(const std::filesystem::path& path, const Alphabet& alphabet) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read sample file " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  try {
    return parse_sample(bytes.str(), alphabet);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

/// Single-line format, newline terminated.
inline void write_sample(const std::filesystem::path& path, const Sample& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sample file " + path.string());
  out << x.to_string() << '\n';
}

}  // namespace ergotest

#endif  // ERGOTEST_SAMPLE_IO_HPP
