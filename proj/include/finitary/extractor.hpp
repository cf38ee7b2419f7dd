#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "finitary/core.hpp"

namespace finitary {

/// Source alphabet {1..alphabet} and the marker pattern
/// 2 1 1 ... 1 (marker_length symbols: a 2 followed by marker_length-1 ones).
struct PatternConfig {
  int alphabet = 2;
  int marker_length = 1;

  PatternConfig() = default;
  PatternConfig(int a, int t);
};

/// Raised when a word that must be pattern-free contains the marker pattern.
class PatternPresent : public Error {
public:
  using Error::Error;
};

/// Symbol counts (m_1, ..., m_a) of a word.
using CountVector = std::vector<int>;

CountVector count_symbols(std::span<const Symbol> word, int alphabet);

/// Matching automaton for the marker pattern. State s in 0..t-1 is the length
/// of the longest suffix that is a prefix of the pattern; state t means the
/// pattern has occurred.
int pattern_step(int state, Symbol s, int marker_length);

/// True iff no position starts a complete occurrence of the pattern.
bool is_pattern_free(std::span<const Symbol> word, const PatternConfig &cfg);

/// d_m: number of pattern-free words with count vector exactly m.
BigInt class_size(const CountVector &m, const PatternConfig &cfg);

/// Number of words w with counts m such that a prefix ending in automaton
/// state `state` followed by w never completes the pattern.
BigInt pattern_free_completions(const CountVector &m, int state, const PatternConfig &cfg);

/// 1-based lexicographic position of `word` among pattern-free words with
/// the same counts. Throws PatternPresent.
BigInt rank_in_class(std::span<const Symbol> word, const PatternConfig &cfg);

/// Inverse of rank_in_class. Throws InvalidArgument if rank is outside 1..d_m.
SymbolWord unrank_in_class(const CountVector &m, const PatternConfig &cfg, const BigInt &rank);

/// Number of count vectors of length a summing to n: binomial(n+a-1, a-1).
BigInt class_count(std::size_t n, int alphabet);

/// 1-based position of m in lexicographic order on all count vectors with
/// the same total.
BigInt class_index(const CountVector &m);

/// Inverse of class_index.
CountVector class_from_index(std::size_t n, int alphabet, const BigInt &index);

/// Unbiased bits extracted from a pattern-free word.
///
/// `bits` has `bit_count` entries; `class_index` identifies the count class,
/// which together with the bits determines the word.
struct ExtractionTriple {
  std::size_t bit_count = 0;
  BitString bits;
  BigInt class_index = 1;

  bool operator==(const ExtractionTriple &) const = default;
};

/// Splits the class of `word` into blocks of sizes 2^r following the binary
/// expansion of d_m (largest first, in lexicographic order) and returns the
/// offset of `word` inside its block as bit_count bits, most significant first.
ExtractionTriple extract(std::span<const Symbol> word, const PatternConfig &cfg);

/// Recovers the word of length n from its extraction triple. Throws
/// InvalidArgument if the triple is not in the image of extract.
SymbolWord invert(std::size_t n, const PatternConfig &cfg, const ExtractionTriple &triple);

/// Mean bit count over a class of size d: sum_i r_i 2^r_i / d where
/// d = sum_i 2^r_i. Accurate to about 1e-15 relative.
double expected_bits(const BigInt &class_size);

/// Same quantity from log2(d) alone; used when d is too large to build.
double expected_bits_from_log2(long double log2_class_size);

/// log2(d_m) evaluated in extended precision. Returns NaN when cancellation
/// in the alternating sum makes the floating result unreliable.
long double log2_class_size(const CountVector &m, const PatternConfig &cfg);

} // namespace finitary
