#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gectune {

using Tokens = std::vector<std::string>;

/// Error raised while reading one of the text formats. Carries the 1-based
/// line number of the offending input line (0 when not line-specific).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data-model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Tokens split_ws(std::string_view text);
std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

/// Splits on a literal multi-character separator, keeping empty fields.
std::vector<std::string> split_on(std::string_view text, std::string_view sep);

std::string_view trim(std::string_view s);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

/// `x` rounded to `digits` significant decimal digits (value of "%.{digits}g").
double round_significant(double x, int digits);

double parse_double(std::string_view s, std::size_t line = 0);
long long parse_int(std::string_view s, std::size_t line = 0);

using Rng = std::mt19937_64;

// Portable replacements for the implementation-defined std distributions, so
// seeded runs are reproducible across standard libraries.
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform_real(Rng& rng);  // [0, 1)

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

/// Derives an independent child seed from a parent seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

std::vector<std::string> read_lines(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace gectune
