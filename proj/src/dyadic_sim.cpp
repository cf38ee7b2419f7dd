#include "finitary/dyadic_sim.hpp"

namespace finitary {

namespace {

BigInt pow2(std::size_t k) { return BigInt(1) << k; }

} // namespace

DyadicCursor::DyadicCursor(const ProbabilityVector &q, std::size_t horizon)
    : horizon_(horizon) {
  if (horizon == 0)
    throw InvalidArgument("simulation horizon must be at least 1");
  auto part = std::make_shared<Partition>();
  part->den = q.common_denominator();
  for (const Rational &c : cumulative(q))
    part->bound.push_back(BigInt(mp::numerator(c) * (part->den / mp::denominator(c))));
  part_ = std::move(part);
  emitted_.reserve(horizon);
}

SymbolWord DyadicCursor::feed(int bit) {
  if (successful())
    throw InvalidArgument("cursor already successful; no further bits accepted");
  if (bit != 0 && bit != 1)
    throw InvalidArgument("bit must be 0 or 1");
  lo_num_ <<= 1;
  if (bit)
    lo_num_ += 1;
  ++bits_;
  const std::size_t before = emitted_.size();
  while (!successful() && try_emit()) {
  }
  return SymbolWord(emitted_.begin() + static_cast<std::ptrdiff_t>(before), emitted_.end());
}

bool DyadicCursor::try_emit() {
  const Partition &p = *part_;
  const BigInt next_pow = den_pow_ * p.den;
  const BigInt lo_scaled = lo_num_ * next_pow;
  const BigInt hi_scaled = (lo_num_ + 1) * next_pow;
  const BigInt base = cell_lo_num_ * p.den;

  // Sub-cell boundaries rescaled to the common denominator 2^k * D^(e+1).
  const auto boundary = [&](std::size_t j) {
    return BigInt((base + cell_width_num_ * p.bound[j]) << bits_);
  };

  const std::size_t b = p.bound.size() - 1;
  for (std::size_t j = 1; j <= b; ++j) {
    if (hi_scaled < boundary(j)) {
      if (!(boundary(j - 1) < lo_scaled))
        return false;
      cell_lo_num_ = base + cell_width_num_ * p.bound[j - 1];
      cell_width_num_ *= p.bound[j] - p.bound[j - 1];
      den_pow_ = next_pow;
      emitted_.push_back(static_cast<Symbol>(j));
      return true;
    }
  }
  return false;
}

Rational DyadicCursor::lo() const { return Rational(lo_num_, pow2(bits_)); }
Rational DyadicCursor::hi() const { return Rational(lo_num_ + 1, pow2(bits_)); }
Rational DyadicCursor::cell_lo() const { return Rational(cell_lo_num_, den_pow_); }
Rational DyadicCursor::cell_hi() const {
  return Rational(cell_lo_num_ + cell_width_num_, den_pow_);
}

bool is_successful(const DyadicCursor &c) { return c.successful(); }

DyadicCursor new_cursor(const ProbabilityVector &q, std::size_t horizon) {
  return DyadicCursor(q, horizon);
}

SimulationOutcome simulate_one(const ProbabilityVector &q, std::span<const std::uint8_t> bits) {
  DyadicCursor c(q, 1);
  for (auto bit : bits) {
    c.feed(bit);
    if (c.successful())
      return {c.bits_consumed(), c.emitted().front()};
  }
  throw InsufficientBits();
}

TailReport exact_tail(const ProbabilityVector &q, std::size_t kmax, std::size_t horizon) {
  if (kmax < 1)
    throw InvalidArgument("kmax must be at least 1");
  BigInt cells = 1;
  for (std::size_t i = 0; i < horizon; ++i)
    cells *= q.size();
  if (cells > 4096)
    throw InvalidArgument("exact_tail: b^horizon too large for exhaustive analysis");

  TailReport report;
  report.decided_mass.assign(cells.convert_to<std::size_t>(), Rational(0));
  report.survival.push_back(Rational(1));

  const auto cell_index = [&](const SymbolWord &w) {
    std::size_t idx = 0;
    for (Symbol s : w)
      idx = idx * static_cast<std::size_t>(q.size()) + static_cast<std::size_t>(s - 1);
    return idx;
  };

  std::vector<DyadicCursor> undecided{DyadicCursor(q, horizon)};
  for (std::size_t k = 1; k <= kmax; ++k) {
    const Rational weight(1, pow2(k));
    std::vector<DyadicCursor> next;
    next.reserve(undecided.size() * 2);
    for (const DyadicCursor &c : undecided) {
      for (int bit = 0; bit <= 1; ++bit) {
        DyadicCursor child = c;
        child.feed(bit);
        if (child.successful())
          report.decided_mass[cell_index(child.emitted())] += weight;
        else
          next.push_back(std::move(child));
      }
    }
    undecided = std::move(next);
    const Rational survival(BigInt(undecided.size()), pow2(k));
    report.survival.push_back(survival);

    if (survival > Rational(BigInt(cells + 1), pow2(k))) {
      if (report.tight_bound_holds)
        report.tight_bound_first_violation = k;
      report.tight_bound_holds = false;
    }
    if (survival > Rational(BigInt(2 * (cells + 1)), pow2(k)))
      report.corrected_bound_holds = false;
  }

  for (std::size_t k = 0; k < kmax; ++k)
    report.mean_lo += report.survival[k];
  report.mean_hi = report.mean_lo + Rational(BigInt(2 * (cells + 1)), pow2(kmax - 1));
  return report;
}

MeanEnclosure exact_mean_T(const ProbabilityVector &q, std::size_t depth) {
  if (depth < 2)
    throw InvalidArgument("depth must be at least 2");
  TailReport r = exact_tail(q, depth);
  return {r.mean_lo, r.mean_hi};
}

bool has_dyadic_interior_point(const ProbabilityVector &q) {
  const auto qs = cumulative(q);
  for (std::size_t j = 1; j + 1 < qs.size(); ++j) {
    const BigInt den(mp::denominator(qs[j]));
    if ((den & (den - 1)) == 0)
      return true;
  }
  return false;
}

} // namespace finitary
