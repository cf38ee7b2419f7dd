#include "finitary/extractor.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace finitary {

PatternConfig::PatternConfig(int a, int t) : alphabet(a), marker_length(t) {
  if (a < 2)
    throw InvalidArgument("alphabet size must be at least 2 (the marker uses symbols 1 and 2)");
  if (t < 1)
    throw InvalidArgument("marker length must be at least 1");
}

namespace {

mpz_ptr raw(BigInt &x) { return x.backend().data(); }
mpz_srcptr raw(const BigInt &x) { return x.backend().data(); }

BigInt binomial(unsigned long n, unsigned long k) {
  BigInt r;
  mpz_bin_uiui(raw(r), n, k);
  return r;
}

// Counts pattern-free words by inclusion-exclusion over marked occurrences.
// The pattern 2 1^(t-1) cannot overlap itself, so a word carrying j marked
// occurrences is an arrangement of j pattern blocks with the remaining
// letters, and there are (n - j(t-1))! / (j! (m_1 - j(t-1))! (m_2 - j)!
// m_3! ... m_a!) of them.
class FreeCounter {
public:
  explicit FreeCounter(const PatternConfig &cfg) : cfg_(cfg) {}

  const BigInt &free_words(const CountVector &m) {
    auto it = memo_.find(m);
    if (it == memo_.end())
      it = memo_.emplace(m, compute(m)).first;
    return it->second;
  }

  BigInt completions(CountVector &m, int state) {
    if (state >= cfg_.marker_length)
      return 0;
    BigInt r = free_words(m);
    if (state == 0)
      return r;
    const int need = cfg_.marker_length - state;
    if (m[0] >= need) {
      m[0] -= need;
      r -= free_words(m);
      m[0] += need;
    }
    return r;
  }

private:
  BigInt compute(const CountVector &m) const {
    const unsigned long s = static_cast<unsigned long>(cfg_.marker_length - 1);
    unsigned long n = 0;
    BigInt term = 1;
    for (int c : m) {
      if (c < 0)
        return 0;
      n += static_cast<unsigned long>(c);
      term *= binomial(n, static_cast<unsigned long>(c));
    }
    if (m.size() < 2)
      return term;
    const unsigned long m1 = static_cast<unsigned long>(m[0]);
    const unsigned long m2 = static_cast<unsigned long>(m[1]);
    const unsigned long jmax = s == 0 ? m2 : std::min(m2, m1 / s);

    BigInt total = term;
    BigInt den;
    for (unsigned long j = 0; j < jmax; ++j) {
      mpz_mul_ui(raw(term), raw(term), m2 - j);
      mpz_set_ui(raw(den), j + 1);
      for (unsigned long r = 0; r < s; ++r) {
        mpz_mul_ui(raw(term), raw(term), m1 - j * s - r);
        mpz_mul_ui(raw(den), raw(den), n - j * s - r);
      }
      mpz_divexact(raw(term), raw(term), raw(den));
      if (j % 2 == 0)
        total -= term;
      else
        total += term;
    }
    return total;
  }

  PatternConfig cfg_;
  std::map<CountVector, BigInt> memo_;
};

void check_counts(const CountVector &m, const PatternConfig &cfg) {
  if (static_cast<int>(m.size()) != cfg.alphabet)
    throw InvalidArgument("count vector has " + std::to_string(m.size()) +
                          " entries, alphabet size is " + std::to_string(cfg.alphabet));
  for (int c : m)
    if (c < 0)
      throw InvalidArgument("count vector entries must be non-negative");
}

} // namespace

CountVector count_symbols(std::span<const Symbol> word, int alphabet) {
  CountVector m(static_cast<std::size_t>(alphabet), 0);
  check_word(word, alphabet);
  for (Symbol s : word)
    ++m[static_cast<std::size_t>(s - 1)];
  return m;
}

int pattern_step(int state, Symbol s, int marker_length) {
  if (state >= marker_length)
    return marker_length;
  if (s == 2)
    return 1;
  if (s == 1)
    return state == 0 ? 0 : state + 1;
  return 0;
}

bool is_pattern_free(std::span<const Symbol> word, const PatternConfig &cfg) {
  int state = 0;
  for (Symbol s : word) {
    state = pattern_step(state, s, cfg.marker_length);
    if (state == cfg.marker_length)
      return false;
  }
  return true;
}

BigInt class_size(const CountVector &m, const PatternConfig &cfg) {
  check_counts(m, cfg);
  return FreeCounter(cfg).free_words(m);
}

BigInt pattern_free_completions(const CountVector &m, int state, const PatternConfig &cfg) {
  check_counts(m, cfg);
  CountVector work = m;
  return FreeCounter(cfg).completions(work, state);
}

BigInt rank_in_class(std::span<const Symbol> word, const PatternConfig &cfg) {
  CountVector rem = count_symbols(word, cfg.alphabet);
  FreeCounter counter(cfg);
  BigInt rank = 0;
  int state = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const Symbol actual = word[i];
    for (Symbol c = 1; c < actual; ++c) {
      auto &slot = rem[static_cast<std::size_t>(c - 1)];
      if (slot == 0)
        continue;
      const int next = pattern_step(state, c, cfg.marker_length);
      if (next == cfg.marker_length)
        continue;
      --slot;
      rank += counter.completions(rem, next);
      ++slot;
    }
    state = pattern_step(state, actual, cfg.marker_length);
    if (state == cfg.marker_length)
      throw PatternPresent("word contains the marker pattern ending at position " +
                           std::to_string(i));
    --rem[static_cast<std::size_t>(actual - 1)];
  }
  return rank + 1;
}

SymbolWord unrank_in_class(const CountVector &m, const PatternConfig &cfg, const BigInt &rank) {
  check_counts(m, cfg);
  FreeCounter counter(cfg);
  CountVector rem = m;
  const BigInt total = counter.free_words(rem);
  if (rank < 1 || rank > total)
    throw InvalidArgument("rank " + rank.str() + " outside 1.." + total.str());

  const int n = std::accumulate(m.begin(), m.end(), 0);
  SymbolWord word;
  word.reserve(static_cast<std::size_t>(n));
  BigInt left = rank;
  int state = 0;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (Symbol c = 1; c <= cfg.alphabet && !placed; ++c) {
      auto &slot = rem[static_cast<std::size_t>(c - 1)];
      if (slot == 0)
        continue;
      const int next = pattern_step(state, c, cfg.marker_length);
      if (next == cfg.marker_length)
        continue;
      --slot;
      const BigInt here = counter.completions(rem, next);
      if (left <= here) {
        word.push_back(c);
        state = next;
        placed = true;
      } else {
        left -= here;
        ++slot;
      }
    }
    if (!placed)
      throw Error("unrank_in_class: inconsistent completion counts");
  }
  return word;
}

BigInt class_count(std::size_t n, int alphabet) {
  return binomial(n + static_cast<unsigned long>(alphabet) - 1,
                  static_cast<unsigned long>(alphabet) - 1);
}

BigInt class_index(const CountVector &m) {
  if (m.empty())
    throw InvalidArgument("count vector is empty");
  const int a = static_cast<int>(m.size());
  unsigned long rem = 0;
  for (int c : m) {
    if (c < 0)
      throw InvalidArgument("count vector entries must be non-negative");
    rem += static_cast<unsigned long>(c);
  }
  // Vectors preceding m that agree on the first i coordinates and have a
  // smaller i-th coordinate v: sum over v of compositions of rem - v into
  // a-i-1 parts, collapsed by the hockey-stick identity.
  BigInt index = 1;
  for (int i = 0; i + 1 < a; ++i) {
    const unsigned long k = static_cast<unsigned long>(a - i - 2);
    const unsigned long mi = static_cast<unsigned long>(m[static_cast<std::size_t>(i)]);
    index += binomial(rem + k + 1, k + 1) - binomial(rem - mi + k + 1, k + 1);
    rem -= mi;
  }
  return index;
}

CountVector class_from_index(std::size_t n, int alphabet, const BigInt &index) {
  if (alphabet < 1)
    throw InvalidArgument("alphabet size must be positive");
  if (index < 1 || index > class_count(n, alphabet))
    throw InvalidArgument("class index " + index.str() + " outside 1.." +
                          class_count(n, alphabet).str());
  CountVector m(static_cast<std::size_t>(alphabet), 0);
  BigInt left = index;
  unsigned long rem = n;
  for (int i = 0; i + 1 < alphabet; ++i) {
    const unsigned long k = static_cast<unsigned long>(alphabet - i - 2);
    unsigned long v = 0;
    for (;; ++v) {
      const BigInt here = binomial(rem - v + k, k);
      if (left <= here)
        break;
      left -= here;
    }
    m[static_cast<std::size_t>(i)] = static_cast<int>(v);
    rem -= v;
  }
  m.back() = static_cast<int>(rem);
  return m;
}

ExtractionTriple extract(std::span<const Symbol> word, const PatternConfig &cfg) {
  const CountVector m = count_symbols(word, cfg.alphabet);
  const BigInt rank = rank_in_class(word, cfg);
  const BigInt d = FreeCounter(cfg).free_words(m);

  ExtractionTriple out;
  out.class_index = class_index(m);
  BigInt cumulative = 0;
  for (long r = static_cast<long>(mpz_sizeinbase(raw(d), 2)) - 1; r >= 0; --r) {
    if (!mpz_tstbit(raw(d), static_cast<mp_bitcnt_t>(r)))
      continue;
    cumulative += BigInt(1) << r;
    if (cumulative >= rank) {
      const BigInt offset = cumulative - rank;
      out.bit_count = static_cast<std::size_t>(r);
      out.bits.resize(out.bit_count);
      for (std::size_t i = 0; i < out.bit_count; ++i)
        out.bits[i] = mpz_tstbit(raw(offset), out.bit_count - 1 - i) ? 1 : 0;
      return out;
    }
  }
  throw Error("extract: rank exceeds class size");
}

SymbolWord invert(std::size_t n, const PatternConfig &cfg, const ExtractionTriple &triple) {
  if (triple.bits.size() != triple.bit_count)
    throw InvalidArgument("bit string length does not match bit count");
  const CountVector m = class_from_index(n, cfg.alphabet, triple.class_index);
  const BigInt d = class_size(m, cfg);
  if (d == 0 || triple.bit_count >= mpz_sizeinbase(raw(d), 2) ||
      !mpz_tstbit(raw(d), triple.bit_count))
    throw InvalidArgument("no block of " + std::to_string(triple.bit_count) +
                          " bits in class " + triple.class_index.str());
  BigInt cumulative = 0;
  for (long r = static_cast<long>(mpz_sizeinbase(raw(d), 2)) - 1;
       r >= static_cast<long>(triple.bit_count); --r)
    if (mpz_tstbit(raw(d), static_cast<mp_bitcnt_t>(r)))
      cumulative += BigInt(1) << r;
  BigInt offset = 0;
  for (auto b : triple.bits) {
    if (b > 1)
      throw InvalidArgument("bit values must be 0 or 1");
    offset = (offset << 1) + b;
  }
  return unrank_in_class(m, cfg, cumulative - offset);
}

double expected_bits(const BigInt &class_size) {
  if (class_size <= 0)
    return 0.0;
  const long top = static_cast<long>(mpz_sizeinbase(raw(class_size), 2)) - 1;
  long exp2 = 0;
  const long double mantissa = 2.0L * mpz_get_d_2exp(&exp2, raw(class_size));
  long double sum = 0;
  for (long r = top; r >= 0 && r >= top - 80; --r)
    if (mpz_tstbit(raw(class_size), static_cast<mp_bitcnt_t>(r)))
      sum += static_cast<long double>(r) * std::ldexp(1.0L, static_cast<int>(r - top));
  return static_cast<double>(sum / mantissa);
}

double expected_bits_from_log2(long double log2_class_size) {
  if (!(log2_class_size >= 0))
    return 0.0;
  // Small sizes are recovered exactly; their low binary digits matter.
  if (log2_class_size < 62)
    return expected_bits(BigInt(std::llround(std::exp2(log2_class_size))));
  const long double top = std::floor(log2_class_size);
  const long double mantissa = std::exp2(log2_class_size - top);
  long double frac = mantissa - 1;
  long double sum = top;
  for (int i = 1; i <= 62; ++i) {
    frac *= 2;
    if (frac >= 1) {
      frac -= 1;
      sum += (top - i) * std::ldexp(1.0L, -i);
    }
  }
  return static_cast<double>(sum / mantissa);
}

long double log2_class_size(const CountVector &m, const PatternConfig &cfg) {
  check_counts(m, cfg);
  const long double nan = std::numeric_limits<long double>::quiet_NaN();
  long double n = 0;
  long double log_multinomial = 0;
  for (int c : m) {
    n += c;
    log_multinomial -= std::lgamma(static_cast<long double>(c) + 1);
  }
  log_multinomial += std::lgamma(n + 1);

  const long double s = cfg.marker_length - 1;
  const long double m1 = m[0];
  const long double m2 = m[1];
  long double term = 1;
  long double sum = 1;
  long double largest = 1;
  for (long double j = 0; j < m2; ++j) {
    if (m1 - j * s < s)
      break;
    long double ratio = (m2 - j) / (j + 1);
    for (long double r = 0; r < s; ++r)
      ratio *= (m1 - j * s - r) / (n - j * s - r);
    term *= ratio;
    sum += (static_cast<long>(j) % 2 == 0) ? -term : term;
    largest = std::max(largest, term);
    if (ratio < 1 && term < 1e-30L * std::fabs(sum))
      break;
  }
  if (!(sum > 0) || largest / sum > 1e10L)
    return nan;
  return (log_multinomial + std::log(sum)) / std::log(2.0L);
}

} // namespace finitary
