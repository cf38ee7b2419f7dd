#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

namespace finitary {

namespace mp = boost::multiprecision;

using BigInt = mp::number<mp::gmp_int, mp::et_off>;
using Rational = mp::number<mp::gmp_rational, mp::et_off>;

// Symbols are 1-based: the source alphabet is {1..a}, the target {1..b}.
using Symbol = int;
using SymbolWord = std::vector<Symbol>;

// One byte per bit, values 0 or 1.
using BitString = std::vector<std::uint8_t>;

/// Base class of every error reported by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A strictly positive distribution over {1..m} with exact rational entries
/// summing to exactly 1. Immutable once constructed.
class ProbabilityVector {
public:
  /// Validates and adopts `entries`; throws InvalidArgument naming the
  /// offending (1-based) index on a non-positive entry, or the actual sum.
  explicit ProbabilityVector(std::vector<Rational> entries);

  static ProbabilityVector uniform(int m);

  int size() const { return static_cast<int>(entries_.size()); }
  /// Probability of symbol `s` in 1..size().
  const Rational &operator()(Symbol s) const { return entries_.at(s - 1); }
  const std::vector<Rational> &entries() const { return entries_; }

  /// Least common denominator of the entries.
  const BigInt &common_denominator() const { return common_den_; }

  bool operator==(const ProbabilityVector &) const = default;

private:
  std::vector<Rational> entries_;
  BigInt common_den_;
};

ProbabilityVector validate_distribution(std::vector<Rational> entries);

/// Shannon entropy in nats. Calibration-grade only (relative error around
/// 1e-15); never used where an exact comparison is required.
double entropy(const ProbabilityVector &p);

/// Partition points 0 = Q_0 < Q_1 < ... < Q_b = 1, Q_j = q(1) + ... + q(j).
std::vector<Rational> cumulative(const ProbabilityVector &q);

Rational parse_rational(std::string_view text);
/// Comma-separated rationals, e.g. "1/3,2/3".
ProbabilityVector parse_probability_vector(std::string_view text);
/// Whitespace-separated positive integers.
SymbolWord parse_word(std::string_view text);
/// Either a run of '0'/'1' characters or whitespace-separated 0/1 tokens.
BitString parse_bits(std::string_view text);

std::string to_string(const Rational &r);
std::string to_string(const ProbabilityVector &p);
std::string to_string(const BitString &bits);
std::string to_string(std::span<const Symbol> word);

/// Throws InvalidArgument unless every symbol lies in 1..alphabet_size.
void check_word(std::span<const Symbol> word, int alphabet_size);

} // namespace finitary
