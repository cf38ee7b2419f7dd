#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "finitary/core.hpp"

namespace finitary {

/// Raised when a bit string ends before the simulation reaches its stopping
/// time.
class InsufficientBits : public Error {
public:
  InsufficientBits() : Error("insufficient bits") {}
};

/// Incremental simulation of q^horizon from unbiased bits.
///
/// The bits read so far are the binary expansion of a dyadic interval
/// [lo, lo + 2^-k]. The cursor keeps the product cell of the symbols already
/// determined and emits the next symbol as soon as the interval lies strictly
/// inside one of that cell's sub-cells, rescaled from the cumulative
/// partition of q. Ties with a cell boundary mean "not yet determined".
/// Emission cascades, so a single bit can determine several symbols. With
/// horizon 1 this is exactly the stopping rule
///   Q_{j-1} < sum_i x_i 2^-i < Q_j - 2^-k,
/// and for larger horizons it equals the same rule applied to the
/// lexicographically ordered partition of B^horizon.
class DyadicCursor {
public:
  DyadicCursor(const ProbabilityVector &q, std::size_t horizon);

  /// Consumes one bit and returns the symbols it determined (possibly none).
  /// Throws InvalidArgument if the cursor is already successful.
  SymbolWord feed(int bit);

  bool successful() const { return emitted_.size() == horizon_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t bits_consumed() const { return bits_; }
  const SymbolWord &emitted() const { return emitted_; }

  Rational lo() const;
  Rational hi() const;
  Rational cell_lo() const;
  Rational cell_hi() const;

private:
  struct Partition {
    BigInt den;                // common denominator D of q
    std::vector<BigInt> bound; // Q_j * D, j = 0..b
  };

  bool try_emit();

  std::shared_ptr<const Partition> part_;
  std::size_t horizon_;
  std::size_t bits_ = 0;
  BigInt lo_num_ = 0;         // lo = lo_num_ / 2^bits_
  BigInt cell_lo_num_ = 0;    // cell_lo = cell_lo_num_ / D^e
  BigInt cell_width_num_ = 1; // cell_hi - cell_lo = cell_width_num_ / D^e
  BigInt den_pow_ = 1;        // D^e, e = emitted_.size()
  SymbolWord emitted_;
};

bool is_successful(const DyadicCursor &c);
DyadicCursor new_cursor(const ProbabilityVector &q, std::size_t horizon);

struct SimulationOutcome {
  std::size_t stopping_time;
  Symbol symbol;
  bool operator==(const SimulationOutcome &) const = default;
};

/// Runs the single-symbol simulation on `bits`; throws InsufficientBits when
/// the bits run out first.
SimulationOutcome simulate_one(const ProbabilityVector &q, std::span<const std::uint8_t> bits);

/// Exact law of the stopping time, computed by walking only the undecided
/// prefixes of the bit tree.
struct TailReport {
  /// survival[k] = P(T > k) for k = 0..kmax.
  std::vector<Rational> survival;
  /// Dyadic mass of decided prefixes of length <= kmax, per output cell
  /// (indexed 0..cells-1, cells = b^horizon in lexicographic order).
  std::vector<Rational> decided_mass;
  /// Enclosure of E(T): sum_{k<kmax} P(T>k) plus the tail bound
  /// 2(cells+1) 2^(1-kmax).
  Rational mean_lo;
  Rational mean_hi;
  /// P(T>k) <= (cells+1)/2^k for every 1 <= k <= kmax.
  bool tight_bound_holds = true;
  /// P(T>k) <= 2(cells+1)/2^k for every 1 <= k <= kmax.
  bool corrected_bound_holds = true;
  /// First k at which the (cells+1)/2^k bound fails, 0 if none.
  std::size_t tight_bound_first_violation = 0;
};

TailReport exact_tail(const ProbabilityVector &q, std::size_t kmax, std::size_t horizon = 1);

struct MeanEnclosure {
  Rational lo;
  Rational hi;
};

/// Rigorous two-sided enclosure of E(T) from the exact tail to `depth`.
MeanEnclosure exact_mean_T(const ProbabilityVector &q, std::size_t depth);

/// True when some interior partition point Q_1..Q_{b-1} is a dyadic rational.
bool has_dyadic_interior_point(const ProbabilityVector &q);

} // namespace finitary
