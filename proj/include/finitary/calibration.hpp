#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "finitary/core.hpp"
#include "finitary/extractor.hpp"

namespace finitary {

/// Seeded generator. Draws are exact: symbols of a rational distribution are
/// picked by rejection sampling a uniform integer below the common
/// denominator, so results depend only on (seed, call sequence).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

private:
  std::mt19937_64 engine_;
};

/// Precomputed exact sampler for a probability vector whose common
/// denominator fits in 63 bits.
class SymbolSampler {
public:
  explicit SymbolSampler(const ProbabilityVector &p);
  Symbol operator()(Rng &rng) const;
  int size() const { return static_cast<int>(upper_.size()); }

private:
  std::uint64_t den_;
  std::vector<std::uint64_t> upper_; // cumulative numerators over den_
};

/// n i.i.d. symbols from p.
SymbolWord sample_word(Rng &rng, const SymbolSampler &p, std::size_t n);

/// A block that follows a marker: symbols are drawn until the pattern
/// occurs again. `word` excludes that closing pattern; the block length is
/// word.size() + t.
SymbolWord sample_block_word(Rng &rng, const SymbolSampler &p, const PatternConfig &cfg);

/// Mean block length 1/(p(2) p(1)^(t-1)).
Rational expected_block_length(const ProbabilityVector &p, int t);

/// Marker-length selection with the constants spelled out.
///
/// delta is the largest value such that every p on a symbols with
/// h(p) >= h(q) + eps has max_i p(i) <= 1 - delta. A block of mean length u
/// carries a word whose bit count falls short of log2 of its probability by
/// at most deficit(u) / log 2, where
///   deficit(u) = g(u) + g(u log2 a) + sum_{i=1}^{a-1} log(u + i) - log((a-1)!)
///   g(mu)      = (mu + 1) log(mu + 1) - mu log mu
/// bounds the entropy of the block length, of the bit count and of the
/// class index. Then
///   f(u) = (eps / log 2) u - 6 - deficit(u) / log 2,
/// which is convex, and t is the smallest value with f(u_min) > margin and
/// f'(u_min) >= 0 at u_min = (1 - delta)^-(t-1).
struct MarkerSelection {
  int t = 0;
  double delta = 0;
  double u_min = 0;
  double f_at_u_min = 0;
  double slope_at_u_min = 0;
  double margin_bits = 0;
};

MarkerSelection select_marker_length_report(const ProbabilityVector &q, const Rational &eps,
                                            int alphabet, double margin_bits = 1.0);
int select_marker_length(const ProbabilityVector &q, const Rational &eps, int alphabet);

/// Value of f(u) above, exposed for tests.
double selection_bound(double u, double eps, int alphabet);
/// Maximum entropy (nats) of a distribution on a symbols whose largest
/// entry is m, for 1/a <= m <= 1.
double max_entropy_given_max(double m, int alphabet);

enum class Verdict { pass, fail, inconclusive };
const char *to_string(Verdict v);

struct CertificationOptions {
  /// Also run the extractor on every sampled word and record the raw bit
  /// counts next to the conditional means.
  bool direct_extraction = false;
  /// Words longer than this use the floating-point class size.
  std::size_t exact_length_limit = 4000;
};

struct CertificationReport {
  int t = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double mean_bits = 0;        // estimate of E(V): mean of E(V | count class)
  double stderr_bits = 0;
  double mean_direct_bits = 0; // mean of extracted V, when requested
  double bound = 0;            // (h(q)/log 2) E(lambda) + 6
  Rational expected_length;    // E(lambda)
  double mean_length = 0;      // empirical mean block length
  double stderr_length = 0;
  double margin = 0;           // mean_bits - bound
  Verdict verdict = Verdict::inconclusive;
};

/// Monte-Carlo check that blocks of marker length t yield more unbiased bits
/// on average than the simulation of q over the block consumes. Pass when
/// the margin exceeds 3 standard errors, fail when it is below -3, otherwise
/// inconclusive.
CertificationReport certify_marker_length(const ProbabilityVector &p, const ProbabilityVector &q,
                                          int t, std::size_t trials, std::uint64_t seed,
                                          const CertificationOptions &options = {});

struct GofReport {
  double statistic = 0;
  int df = 0;
  double p_value = 1;
};

/// Pearson chi-square of `counts` against N q(i).
GofReport chi_square(std::span<const std::uint64_t> counts, const ProbabilityVector &q);

/// Frequencies of symbols 1..b.
std::vector<std::uint64_t> symbol_counts(std::span<const Symbol> s, int b);
/// Frequencies of disjoint adjacent pairs (s[0],s[1]), (s[2],s[3]), ...,
/// pair (i,j) at index (i-1) b + (j-1).
std::vector<std::uint64_t> pair_counts(std::span<const Symbol> s, int b);
/// q x q on pairs, in the order used by pair_counts.
ProbabilityVector product_distribution(const ProbabilityVector &q, const ProbabilityVector &r);

struct TailFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  std::size_t points = 0;
  double median = 0;
  /// Largest log S(n) - (intercept + slope n) over fitted n >= median;
  /// the fitted curve dominates the survival function there iff <= 0.
  double max_excess_above_median = 0;
  /// Empirical survival S(n) = #{x >= n} / N at the fitted n.
  std::vector<std::pair<std::int64_t, double>> survival;
};

/// Least-squares fit of log S(n) against n over min(samples) <= n where
/// S(n) >= 10 / N.
TailFit tail_fit(std::span<const std::int64_t> samples);

struct Simu1Report {
  std::size_t kmax = 0;
  /// P(T > k), k = 0..kmax, from counting dyadic intervals that touch a
  /// partition point.
  std::vector<Rational> survival;
  bool agrees_with_tree_walk = false;
  bool tight_bound_holds = false;       // P(T>k) <= (b+1)/2^k
  std::size_t tight_bound_first_violation = 0;
  bool corrected_bound_holds = false;   // P(T>k) <= 2(b+1)/2^k
  /// Every q(j) minus the mass decided for j within depth kmax lies in
  /// [0, P(T > kmax)].
  bool law_accounted = false;
  Rational mean_lo;
  Rational mean_hi;
  double mean_bound = 0;                // h(q)/log 2 + 6
  bool mean_bound_holds = false;

  bool ok() const {
    return agrees_with_tree_walk && corrected_bound_holds && law_accounted && mean_bound_holds;
  }
};

/// Exact checks of the stopping-time tail and mean for q.
Simu1Report verify_simu1(const ProbabilityVector &q, std::size_t kmax);

struct ExtractorRow {
  std::size_t n = 0;
  std::size_t words = 0;    // |E_{n,t}|
  std::size_t classes = 0;  // non-empty count classes
  bool injective = true;
  bool round_trip = true;
  bool uniform = true;      // F uniform given N under every p
  bool size_bound = true;   // 2^N <= d_m and N <= n log2 a
  bool partition = true;    // sum of d_m equals |E_{n,t}|, each d_m matches
};

struct ExtractorReport {
  int alphabet = 0;
  int marker_length = 0;
  std::vector<ExtractorRow> rows;
  bool ok() const;
};

/// Exhaustive checks of the extractor on all words of length n <= nmax.
ExtractorReport verify_extractor(int alphabet, int marker_length, std::size_t nmax,
                                 std::span<const ProbabilityVector> p_list);

/// Distributions used when none are given: uniform(a) and a skewed one.
std::vector<ProbabilityVector> default_test_distributions(int alphabet);

} // namespace finitary
