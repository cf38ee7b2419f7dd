#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "finitary/core.hpp"
#include "finitary/dyadic_sim.hpp"
#include "finitary/extractor.hpp"

namespace finitary {

/// One marker-delimited block. Positions are indices into the input window;
/// the block covers start_marker < i <= end_marker.
struct BlockRecord {
  std::int64_t index = 0;
  std::int64_t start_marker = 0;
  std::int64_t end_marker = 0;
  SymbolWord word; // symbols strictly between the start marker's pattern and end_marker
  BitString bits;  // unbiased bits extracted from `word`

  std::int64_t length() const { return end_marker - start_marker; }
  std::size_t word_length() const { return word.size(); }
  std::size_t bit_count() const { return bits.size(); }
};

/// Raised when a target cannot be completed inside the permitted window.
class WindowExhausted : public Error {
public:
  using Error::Error;
};

/// Raised when a schedule invariant (disjoint consumption, lockstep
/// advancement, ordered reads) is violated. Never expected to fire.
class InvariantViolation : public Error {
public:
  using Error::Error;
};

/// Starting positions of every complete marker occurrence in `segment`.
std::vector<std::int64_t> scan_markers(std::span<const Symbol> segment, const PatternConfig &cfg);

/// One record per pair of consecutive markers, numbered from `first_index`.
std::vector<BlockRecord> segment_blocks(std::span<const Symbol> segment, const PatternConfig &cfg,
                                        std::int64_t first_index = 0);

/// Bit `bit` (1-based) of block `block`.
struct BitPosition {
  std::int64_t block = 0;
  std::size_t bit = 1;
  auto operator<=>(const BitPosition &) const = default;
};

/// Successor of a bit position, skipping blocks without bits. Returns
/// nullopt when no block to the right in `blocks` has bits. `blocks` must be
/// contiguous by index. Throws InvalidArgument for an invalid position.
std::optional<BitPosition> next_position(BitPosition pos, std::span<const BlockRecord> blocks);

enum class SimulatorStatus { running, computed, departed };

struct SimulatorState {
  std::int64_t block = 0;
  SimulatorStatus status = SimulatorStatus::running;
  std::optional<BitPosition> position;
  BitString read;                     // bits read so far, in position order
  std::vector<BitPosition> consumed;  // where they came from
  DyadicCursor cursor;
  SymbolWord result;
  std::size_t computed_at_step = 0;
  std::int64_t rightmost_block = 0;   // block of the last consumed bit
};

struct Consumption {
  std::size_t step;
  std::int64_t simulator;
  BitPosition position;
};

struct ScheduleStats {
  std::size_t steps = 0;
  std::size_t consumptions = 0;
  std::size_t queue_ups = 0;
  std::size_t used_skips = 0;
  std::size_t invariant_checks = 0;

  ScheduleStats &operator+=(const ScheduleStats &o);
};

/// Lockstep schedule of the per-block simulators over a finite window.
///
/// Each step reads only the previous step's state and then commits. A
/// running simulator whose position was already used advances; if a
/// simulator of a larger block sits on the same position it yields
/// (queue-up) and advances; otherwise it consumes the bit, and either
/// completes (keeping its position) or advances. A simulator that would
/// advance past the last block departs: its result depends on input
/// outside the window. Simulators of blocks below `first_simulator` are not
/// instantiated; they never affect larger blocks.
class Schedule {
public:
  Schedule(std::span<const BlockRecord> blocks, const ProbabilityVector &q,
           std::int64_t first_simulator, bool record_log = false);

  /// Performs one step. Returns false once no simulator is running.
  bool step();
  void run();

  std::size_t steps_done() const { return stats_.steps; }
  const std::vector<SimulatorState> &simulators() const { return sims_; }
  const SimulatorState &simulator(std::int64_t block) const;
  const std::vector<Consumption> &log() const { return log_; }
  const ScheduleStats &stats() const { return stats_; }
  bool used(BitPosition pos) const;

private:
  const BlockRecord &block(std::int64_t index) const;
  void advance(SimulatorState &sim);
  void check(bool ok, const char *what);

  std::span<const BlockRecord> blocks_;
  std::vector<SimulatorState> sims_;
  std::vector<std::vector<std::uint8_t>> used_;
  std::vector<std::size_t> running_;
  std::vector<Consumption> log_;
  bool record_log_;
  ScheduleStats stats_;
};

struct ScheduleResult {
  std::map<std::int64_t, SymbolWord> results;
  std::map<std::int64_t, std::int64_t> rightmost_block;
  std::vector<Consumption> log;
  ScheduleStats stats;
};

/// Runs the schedule until every target completes. Simulators start at
/// `first_simulator` (default: the smallest target). Throws WindowExhausted
/// if a target needs bits beyond the last block.
ScheduleResult run_schedule(std::span<const BlockRecord> blocks, const ProbabilityVector &q,
                            std::span<const std::int64_t> targets,
                            std::optional<std::int64_t> first_simulator = std::nullopt);

struct EngineOptions {
  /// Symbols the engine may read beyond a target index.
  std::size_t max_window = 1'000'000;
};

/// Window that certifies one output symbol: the symbol is a function of the
/// input on [left_marker, right_extent].
struct CodingReport {
  std::int64_t index = 0;
  std::int64_t block = 0;
  std::int64_t left_marker = 0;
  std::int64_t rightmost_block = 0;
  std::int64_t right_extent = 0;
  std::int64_t radius = 0;
};

struct OutputSymbol {
  std::int64_t index;
  Symbol symbol;
  CodingReport report;
};

struct RangeOutput {
  std::vector<OutputSymbol> determined;    // ascending index
  std::vector<std::int64_t> undetermined;  // ascending index
  ScheduleStats stats;
};

/// Output of the code on indices [first, last] of the finite input `x`
/// (index 0 is x[0]). Indices whose block or schedule reaches past either
/// edge of the input are reported undetermined. Throws WindowExhausted when
/// an index needs more than options.max_window symbols beyond it while the
/// input continues past that limit.
RangeOutput map_range(std::span<const Symbol> x, const PatternConfig &cfg,
                      const ProbabilityVector &q, std::int64_t first, std::int64_t last,
                      const EngineOptions &options = {});

/// Certified coding radius max(i - R_K(i), R_{J+1} + t - i) at index i.
/// Throws Error if the output at i is not determined by x.
std::int64_t certified_radius(std::span<const Symbol> x, const PatternConfig &cfg,
                              const ProbabilityVector &q, std::int64_t i,
                              const EngineOptions &options = {});

} // namespace finitary
