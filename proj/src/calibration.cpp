#include "finitary/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/special_functions/gamma.hpp>

#include "finitary/dyadic_sim.hpp"

namespace finitary {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0)
    throw InvalidArgument("empty sampling range");
  // Largest multiple of n that fits in 2^64, minus one.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x <= limit)
      return x % n;
  }
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

SymbolSampler::SymbolSampler(const ProbabilityVector &p) {
  const BigInt &d = p.common_denominator();
  if (d > BigInt(std::numeric_limits<std::int64_t>::max()))
    throw InvalidArgument("denominator too large for the sampler");
  den_ = d.convert_to<std::uint64_t>();
  std::uint64_t acc = 0;
  for (const Rational &e : p.entries()) {
    acc += BigInt(mp::numerator(e) * (d / mp::denominator(e))).convert_to<std::uint64_t>();
    upper_.push_back(acc);
  }
}

Symbol SymbolSampler::operator()(Rng &rng) const {
  const std::uint64_t u = rng.below(den_);
  const auto it = std::upper_bound(upper_.begin(), upper_.end(), u);
  return static_cast<Symbol>(it - upper_.begin()) + 1;
}

SymbolWord sample_word(Rng &rng, const SymbolSampler &p, std::size_t n) {
  SymbolWord w(n);
  for (Symbol &s : w)
    s = p(rng);
  return w;
}

SymbolWord sample_block_word(Rng &rng, const SymbolSampler &p, const PatternConfig &cfg) {
  if (p.size() != cfg.alphabet)
    throw InvalidArgument("distribution size differs from the alphabet");
  SymbolWord w;
  int state = 0;
  while (state != cfg.marker_length) {
    const Symbol s = p(rng);
    w.push_back(s);
    state = pattern_step(state, s, cfg.marker_length);
  }
  w.resize(w.size() - static_cast<std::size_t>(cfg.marker_length));
  return w;
}

Rational expected_block_length(const ProbabilityVector &p, int t) {
  if (p.size() < 2)
    throw InvalidArgument("a must be >= 2");
  if (t < 1)
    throw InvalidArgument("marker length must be at least 1");
  Rational prob = p(2);
  for (int i = 1; i < t; ++i)
    prob *= p(1);
  return Rational(1) / prob;
}

namespace {

double h_geo(double mu) {
  if (mu <= 0)
    return 0;
  return (mu + 1) * std::log(mu + 1) - mu * std::log(mu);
}

double h_geo_slope(double mu) { return std::log1p(1 / mu); }

double deficit(double u, int a) {
  double d = h_geo(u) + h_geo(std::log2(a) * u) - std::lgamma(a);
  for (int i = 1; i < a; ++i)
    d += std::log(u + i);
  return d;
}

double deficit_slope(double u, int a) {
  const double la = std::log2(a);
  double d = h_geo_slope(u) + la * h_geo_slope(la * u);
  for (int i = 1; i < a; ++i)
    d += 1 / (u + i);
  return d;
}

} // namespace

double selection_bound(double u, double eps, int alphabet) {
  return eps / std::log(2.0) * u - 6 - deficit(u, alphabet) / std::log(2.0);
}

double max_entropy_given_max(double m, int alphabet) {
  if (m >= 1)
    return 0;
  const double rest = (1 - m) / (alphabet - 1);
  return -m * std::log(m) - (1 - m) * std::log(rest);
}

MarkerSelection select_marker_length_report(const ProbabilityVector &q, const Rational &eps,
                                            int alphabet, double margin_bits) {
  if (eps <= 0)
    throw InvalidArgument("eps must be > 0");
  if (alphabet < 2)
    throw InvalidArgument("a must be >= 2");
  const double e = eps.convert_to<double>();
  const double target = entropy(q) + e;
  const double a = alphabet;
  if (target > std::log(a))
    throw InvalidArgument("no distribution on " + std::to_string(alphabet) +
                          " symbols has entropy h(q) + eps");

  // max_entropy_given_max decreases on [1/a, 1]; find the largest m still
  // reaching the target.
  double lo = 1 / a;
  double hi = 1;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (max_entropy_given_max(mid, alphabet) >= target ? lo : hi) = mid;
  }
  MarkerSelection sel;
  sel.delta = 1 - hi;
  sel.margin_bits = margin_bits;
  const double slope = e / std::log(2.0);
  for (int t = 1; t <= 100000; ++t) {
    const double u = std::pow(1 - sel.delta, -(t - 1.0));
    if (!std::isfinite(u))
      break;
    const double f = selection_bound(u, e, alphabet);
    const double df = slope - deficit_slope(u, alphabet) / std::log(2.0);
    if (f > margin_bits && df >= 0) {
      sel.t = t;
      sel.u_min = u;
      sel.f_at_u_min = f;
      sel.slope_at_u_min = df;
      return sel;
    }
  }
  throw InvalidArgument("no marker length satisfies the selection bound");
}

int select_marker_length(const ProbabilityVector &q, const Rational &eps, int alphabet) {
  return select_marker_length_report(q, eps, alphabet).t;
}

const char *to_string(Verdict v) {
  switch (v) {
  case Verdict::pass:
    return "pass";
  case Verdict::fail:
    return "fail";
  case Verdict::inconclusive:
    break;
  }
  return "inconclusive";
}

namespace {

struct Moments {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double stderr_of_mean() const { return n > 1 ? std::sqrt(m2 / (n - 1) / n) : INFINITY; }
};

double conditional_mean_bits(const SymbolWord &w, const PatternConfig &cfg,
                             std::size_t exact_limit) {
  const CountVector m = count_symbols(w, cfg.alphabet);
  if (w.size() > exact_limit) {
    const long double l = log2_class_size(m, cfg);
    if (!std::isnan(l))
      return expected_bits_from_log2(l);
  }
  return expected_bits(class_size(m, cfg));
}

} // namespace

CertificationReport certify_marker_length(const ProbabilityVector &p, const ProbabilityVector &q,
                                          int t, std::size_t trials, std::uint64_t seed,
                                          const CertificationOptions &options) {
  if (trials < 2)
    throw InvalidArgument("need at least 2 trials");
  const PatternConfig cfg(p.size(), t);
  CertificationReport r;
  r.t = t;
  r.trials = trials;
  r.seed = seed;
  r.expected_length = expected_block_length(p, t);
  r.bound = entropy(q) / std::log(2.0) * r.expected_length.convert_to<double>() + 6;

  const SymbolSampler sampler(p);
  Rng rng(seed);
  Moments bits, direct, length;
  for (std::size_t i = 0; i < trials; ++i) {
    const SymbolWord w = sample_block_word(rng, sampler, cfg);
    length.add(static_cast<double>(w.size() + static_cast<std::size_t>(t)));
    bits.add(conditional_mean_bits(w, cfg, options.exact_length_limit));
    if (options.direct_extraction)
      direct.add(static_cast<double>(extract(w, cfg).bit_count));
  }
  r.mean_bits = bits.mean;
  r.stderr_bits = bits.stderr_of_mean();
  r.mean_direct_bits = direct.mean;
  r.mean_length = length.mean;
  r.stderr_length = length.stderr_of_mean();
  r.margin = r.mean_bits - r.bound;
  if (r.margin > 3 * r.stderr_bits)
    r.verdict = Verdict::pass;
  else if (r.margin < -3 * r.stderr_bits)
    r.verdict = Verdict::fail;
  else
    r.verdict = Verdict::inconclusive;
  return r;
}

GofReport chi_square(std::span<const std::uint64_t> counts, const ProbabilityVector &q) {
  if (counts.size() != static_cast<std::size_t>(q.size()))
    throw InvalidArgument("counts and distribution differ in size");
  double total = 0;
  for (auto c : counts)
    total += static_cast<double>(c);
  if (total <= 0)
    throw InvalidArgument("no observations");
  GofReport g;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = total * q.entries()[i].convert_to<double>();
    if (expected <= 0)
      throw InvalidArgument("zero expected cell");
    const double d = static_cast<double>(counts[i]) - expected;
    g.statistic += d * d / expected;
  }
  g.df = q.size() - 1;
  g.p_value = g.df > 0 ? boost::math::gamma_q(g.df / 2.0, g.statistic / 2) : 1.0;
  return g;
}

std::vector<std::uint64_t> symbol_counts(std::span<const Symbol> s, int b) {
  check_word(s, b);
  std::vector<std::uint64_t> c(static_cast<std::size_t>(b));
  for (Symbol x : s)
    ++c[static_cast<std::size_t>(x - 1)];
  return c;
}

std::vector<std::uint64_t> pair_counts(std::span<const Symbol> s, int b) {
  check_word(s, b);
  std::vector<std::uint64_t> c(static_cast<std::size_t>(b) * static_cast<std::size_t>(b));
  for (std::size_t i = 0; i + 1 < s.size(); i += 2)
    ++c[static_cast<std::size_t>((s[i] - 1) * b + (s[i + 1] - 1))];
  return c;
}

ProbabilityVector product_distribution(const ProbabilityVector &q, const ProbabilityVector &r) {
  std::vector<Rational> e;
  for (const Rational &x : q.entries())
    for (const Rational &y : r.entries())
      e.push_back(x * y);
  return ProbabilityVector(std::move(e));
}

TailFit tail_fit(std::span<const std::int64_t> samples) {
  if (samples.size() < 100)
    throw InvalidArgument("tail fit needs at least 100 samples");
  std::vector<std::int64_t> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  if (s.front() < 0)
    throw InvalidArgument("samples must be non-negative");
  if (s.front() == s.back())
    throw InvalidArgument("degenerate samples (all equal)");

  const double total = static_cast<double>(s.size());
  TailFit fit;
  fit.median = s.size() % 2 ? static_cast<double>(s[s.size() / 2])
                            : (static_cast<double>(s[s.size() / 2 - 1]) +
                               static_cast<double>(s[s.size() / 2])) / 2;
  for (std::int64_t n = s.front();; ++n) {
    const auto at_least = s.end() - std::lower_bound(s.begin(), s.end(), n);
    const double surv = static_cast<double>(at_least) / total;
    if (surv < 10 / total)
      break;
    fit.survival.emplace_back(n, surv);
  }
  fit.points = fit.survival.size();
  if (fit.points < 2)
    throw InvalidArgument("degenerate samples (fewer than two tail points)");

  double sx = 0, sy = 0;
  for (auto [n, v] : fit.survival) {
    sx += static_cast<double>(n);
    sy += std::log(v);
  }
  const double k = static_cast<double>(fit.points);
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (auto [n, v] : fit.survival) {
    const double dx = static_cast<double>(n) - mx, dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.max_excess_above_median = -INFINITY;
  for (auto [n, v] : fit.survival)
    if (static_cast<double>(n) >= fit.median)
      fit.max_excess_above_median =
          std::max(fit.max_excess_above_median,
                   std::log(v) - (fit.intercept + fit.slope * static_cast<double>(n)));
  return fit;
}

namespace {

BigInt pow2(std::size_t k) { return BigInt(1) << k; }

// Number of closed dyadic intervals of level k containing some partition
// point. The simulation is undecided after k bits exactly on those.
std::size_t touching_intervals(const std::vector<Rational> &points, std::size_t k) {
  const BigInt cells = pow2(k);
  std::set<BigInt> hit;
  for (const Rational &x : points) {
    const BigInt num(mp::numerator(x) * cells);
    const BigInt den(mp::denominator(x));
    const BigInt floor = num / den;
    if (floor < cells)
      hit.insert(floor);
    if (num % den == 0 && floor > 0)
      hit.insert(floor - 1);
  }
  return hit.size();
}

} // namespace

Simu1Report verify_simu1(const ProbabilityVector &q, std::size_t kmax) {
  if (kmax < 2)
    throw InvalidArgument("kmax must be at least 2");
  const auto points = cumulative(q);
  const std::size_t b = static_cast<std::size_t>(q.size());
  Simu1Report r;
  r.kmax = kmax;
  r.tight_bound_holds = true;
  r.corrected_bound_holds = true;
  r.survival.push_back(Rational(1));
  for (std::size_t k = 1; k <= kmax; ++k) {
    const Rational s(BigInt(touching_intervals(points, k)), pow2(k));
    r.survival.push_back(s);
    if (s > Rational(BigInt(b + 1), pow2(k)) && r.tight_bound_holds) {
      r.tight_bound_holds = false;
      r.tight_bound_first_violation = k;
    }
    if (s > Rational(BigInt(2 * (b + 1)), pow2(k)))
      r.corrected_bound_holds = false;
  }
  for (std::size_t k = 0; k < kmax; ++k)
    r.mean_lo += r.survival[k];
  r.mean_hi = r.mean_lo + Rational(BigInt(2 * (b + 1)), pow2(kmax - 1));

  const TailReport tree = exact_tail(q, kmax);
  r.agrees_with_tree_walk = tree.survival == r.survival && tree.mean_lo == r.mean_lo &&
                            tree.mean_hi == r.mean_hi;
  r.law_accounted = true;
  for (int j = 1; j <= q.size(); ++j) {
    const Rational missing = q(j) - tree.decided_mass[static_cast<std::size_t>(j - 1)];
    if (missing < 0 || missing > r.survival.back())
      r.law_accounted = false;
  }
  r.mean_bound = entropy(q) / std::log(2.0) + 6;
  // Round the enclosure up before comparing with the irrational bound.
  r.mean_bound_holds = std::nextafter(r.mean_hi.convert_to<double>(), INFINITY) <= r.mean_bound;
  return r;
}

bool ExtractorReport::ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const ExtractorRow &r) {
    return r.injective && r.round_trip && r.uniform && r.size_bound && r.partition;
  });
}

namespace {

std::vector<SymbolWord> all_words(std::size_t n, int a) {
  std::vector<SymbolWord> out{SymbolWord{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SymbolWord> next;
    next.reserve(out.size() * static_cast<std::size_t>(a));
    for (const SymbolWord &w : out)
      for (Symbol s = 1; s <= a; ++s) {
        next.push_back(w);
        next.back().push_back(s);
      }
    out = std::move(next);
  }
  return out;
}

} // namespace

ExtractorReport verify_extractor(int alphabet, int marker_length, std::size_t nmax,
                                 std::span<const ProbabilityVector> p_list) {
  const PatternConfig cfg(alphabet, marker_length);
  if (nmax > 16)
    throw InvalidArgument("nmax too large for exhaustive verification");
  for (const ProbabilityVector &p : p_list)
    if (p.size() != alphabet)
      throw InvalidArgument("distribution size differs from the alphabet");

  ExtractorReport report;
  report.alphabet = alphabet;
  report.marker_length = marker_length;
  const double log2a = std::log2(alphabet);
  for (std::size_t n = 0; n <= nmax; ++n) {
    ExtractorRow row;
    row.n = n;
    std::map<CountVector, std::size_t> per_class;
    std::set<std::tuple<std::size_t, BitString, BigInt>> triples;
    std::vector<std::pair<SymbolWord, ExtractionTriple>> extracted;
    for (const SymbolWord &w : all_words(n, alphabet)) {
      if (!is_pattern_free(w, cfg))
        continue;
      ++row.words;
      ++per_class[count_symbols(w, alphabet)];
      ExtractionTriple x = extract(w, cfg);
      if (!triples.emplace(x.bit_count, x.bits, x.class_index).second)
        row.injective = false;
      if (invert(n, cfg, x) != w)
        row.round_trip = false;
      if (pow2(x.bit_count) > class_size(count_symbols(w, alphabet), cfg) ||
          static_cast<double>(x.bit_count) > log2a * static_cast<double>(n) + 1e-9)
        row.size_bound = false;
      extracted.emplace_back(w, std::move(x));
    }
    row.classes = per_class.size();
    BigInt sum = 0;
    for (const auto &[m, count] : per_class) {
      const BigInt d = class_size(m, cfg);
      sum += d;
      if (d != BigInt(count))
        row.partition = false;
    }
    if (sum != BigInt(row.words))
      row.partition = false;

    for (const ProbabilityVector &p : p_list) {
      std::map<std::size_t, std::map<BitString, Rational>> mass;
      for (const auto &[w, x] : extracted) {
        Rational pr = 1;
        for (Symbol s : w)
          pr *= p(s);
        mass[x.bit_count][x.bits] += pr;
      }
      for (const auto &[k, by_bits] : mass) {
        if (by_bits.size() != (std::size_t{1} << k)) {
          row.uniform = false;
          continue;
        }
        const Rational &first = by_bits.begin()->second;
        for (const auto &[bits, m] : by_bits)
          if (m != first)
            row.uniform = false;
      }
    }
    report.rows.push_back(row);
  }
  return report;
}

std::vector<ProbabilityVector> default_test_distributions(int alphabet) {
  std::vector<ProbabilityVector> out{ProbabilityVector::uniform(alphabet)};
  // Skewed: weights 1, 2, ..., a normalized.
  std::vector<Rational> skew;
  const int total = alphabet * (alphabet + 1) / 2;
  for (int i = 1; i <= alphabet; ++i)
    skew.emplace_back(i, total);
  out.emplace_back(std::move(skew));
  return out;
}

} // namespace finitary
