#include "finitary/engine.hpp"

#include <algorithm>
#include <unordered_map>

namespace finitary {

ScheduleStats &ScheduleStats::operator+=(const ScheduleStats &o) {
  steps += o.steps;
  consumptions += o.consumptions;
  queue_ups += o.queue_ups;
  used_skips += o.used_skips;
  invariant_checks += o.invariant_checks;
  return *this;
}

std::vector<std::int64_t> scan_markers(std::span<const Symbol> segment, const PatternConfig &cfg) {
  std::vector<std::int64_t> markers;
  int state = 0;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    state = pattern_step(state, segment[i], cfg.marker_length);
    if (state == cfg.marker_length) {
      markers.push_back(static_cast<std::int64_t>(i) - cfg.marker_length + 1);
      state = 0;
    }
  }
  return markers;
}

std::vector<BlockRecord> segment_blocks(std::span<const Symbol> segment, const PatternConfig &cfg,
                                        std::int64_t first_index) {
  check_word(segment, cfg.alphabet);
  const auto markers = scan_markers(segment, cfg);
  std::vector<BlockRecord> blocks;
  if (markers.size() < 2)
    return blocks;
  blocks.reserve(markers.size() - 1);
  for (std::size_t j = 0; j + 1 < markers.size(); ++j) {
    BlockRecord b;
    b.index = first_index + static_cast<std::int64_t>(j);
    b.start_marker = markers[j];
    b.end_marker = markers[j + 1];
    b.word.assign(segment.begin() + markers[j] + cfg.marker_length,
                  segment.begin() + markers[j + 1]);
    b.bits = extract(b.word, cfg).bits;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

namespace {

const BlockRecord *find_block(std::span<const BlockRecord> blocks, std::int64_t index) {
  if (blocks.empty())
    return nullptr;
  const std::int64_t offset = index - blocks.front().index;
  if (offset < 0 || offset >= static_cast<std::int64_t>(blocks.size()))
    return nullptr;
  return &blocks[static_cast<std::size_t>(offset)];
}

std::optional<BitPosition> first_position_from(std::span<const BlockRecord> blocks,
                                               std::int64_t index) {
  for (const BlockRecord *b = find_block(blocks, index); b != nullptr;
       b = find_block(blocks, b->index + 1))
    if (b->bit_count() > 0)
      return BitPosition{b->index, 1};
  return std::nullopt;
}

struct PositionHash {
  std::size_t operator()(const BitPosition &p) const {
    return std::hash<std::int64_t>()(p.block) * 1000003u ^ std::hash<std::size_t>()(p.bit);
  }
};

} // namespace

std::optional<BitPosition> next_position(BitPosition pos, std::span<const BlockRecord> blocks) {
  const BlockRecord *b = find_block(blocks, pos.block);
  if (b == nullptr || pos.bit < 1 || pos.bit > b->bit_count())
    throw InvalidArgument("invalid bit position (" + std::to_string(pos.block) + "," +
                          std::to_string(pos.bit) + ")");
  if (pos.bit < b->bit_count())
    return BitPosition{pos.block, pos.bit + 1};
  return first_position_from(blocks, pos.block + 1);
}

Schedule::Schedule(std::span<const BlockRecord> blocks, const ProbabilityVector &q,
                   std::int64_t first_simulator, bool record_log)
    : blocks_(blocks), record_log_(record_log) {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].index != blocks.front().index + static_cast<std::int64_t>(i))
      throw InvalidArgument("blocks must be contiguous by index");
  if (blocks.empty())
    return;
  if (first_simulator < blocks.front().index)
    throw InvalidArgument("first simulator lies left of the available blocks");

  used_.reserve(blocks.size());
  for (const BlockRecord &b : blocks)
    used_.emplace_back(b.bit_count(), 0);

  for (const BlockRecord &b : blocks) {
    if (b.index < first_simulator)
      continue;
    SimulatorState sim{.block = b.index,
                       .status = SimulatorStatus::running,
                       .position = first_position_from(blocks, b.index),
                       .read = {},
                       .consumed = {},
                       .cursor = DyadicCursor(q, static_cast<std::size_t>(b.length())),
                       .result = {},
                       .computed_at_step = 0,
                       .rightmost_block = b.index};
    if (!sim.position)
      sim.status = SimulatorStatus::departed;
    sims_.push_back(std::move(sim));
  }
  for (std::size_t i = 0; i < sims_.size(); ++i)
    if (sims_[i].status == SimulatorStatus::running)
      running_.push_back(i);
}

const BlockRecord &Schedule::block(std::int64_t index) const {
  const BlockRecord *b = find_block(blocks_, index);
  if (b == nullptr)
    throw InvalidArgument("block " + std::to_string(index) + " outside the window");
  return *b;
}

const SimulatorState &Schedule::simulator(std::int64_t block) const {
  for (const SimulatorState &s : sims_)
    if (s.block == block)
      return s;
  throw InvalidArgument("no simulator for block " + std::to_string(block));
}

bool Schedule::used(BitPosition pos) const {
  const auto offset = static_cast<std::size_t>(pos.block - blocks_.front().index);
  return used_.at(offset).at(pos.bit - 1) != 0;
}

void Schedule::check(bool ok, const char *what) {
  ++stats_.invariant_checks;
  if (!ok)
    throw InvariantViolation(std::string("schedule invariant violated: ") + what + " at step " +
                             std::to_string(stats_.steps));
}

void Schedule::advance(SimulatorState &sim) {
  sim.position = next_position(*sim.position, blocks_);
  if (!sim.position)
    sim.status = SimulatorStatus::departed;
}

bool Schedule::step() {
  if (running_.empty())
    return false;
  ++stats_.steps;

  enum class Action { consume, skip_used, skip_queued };

  // Decisions read only the state left by the previous step.
  std::unordered_map<BitPosition, std::int64_t, PositionHash> largest_at;
  largest_at.reserve(running_.size() * 2);
  for (std::size_t i : running_) {
    auto [it, fresh] = largest_at.emplace(*sims_[i].position, sims_[i].block);
    if (!fresh)
      it->second = std::max(it->second, sims_[i].block);
  }
  std::vector<Action> actions;
  actions.reserve(running_.size());
  for (std::size_t i : running_) {
    const SimulatorState &sim = sims_[i];
    if (used(*sim.position))
      actions.push_back(Action::skip_used);
    else if (largest_at.at(*sim.position) > sim.block)
      actions.push_back(Action::skip_queued);
    else
      actions.push_back(Action::consume);
  }

  std::vector<BitPosition> before;
  before.reserve(running_.size());
  for (std::size_t i : running_)
    before.push_back(*sims_[i].position);

  for (std::size_t r = 0; r < running_.size(); ++r) {
    SimulatorState &sim = sims_[running_[r]];
    const BitPosition pos = *sim.position;
    switch (actions[r]) {
    case Action::skip_used:
      ++stats_.used_skips;
      advance(sim);
      break;
    case Action::skip_queued:
      ++stats_.queue_ups;
      advance(sim);
      break;
    case Action::consume: {
      check(!used(pos), "disjoint consumption");
      check(sim.consumed.empty() || sim.consumed.back() < pos, "reads in position order");
      used_[static_cast<std::size_t>(pos.block - blocks_.front().index)][pos.bit - 1] = 1;
      const std::uint8_t bit = block(pos.block).bits[pos.bit - 1];
      sim.read.push_back(bit);
      sim.consumed.push_back(pos);
      ++stats_.consumptions;
      if (record_log_)
        log_.push_back({stats_.steps, sim.block, pos});
      sim.cursor.feed(bit);
      if (sim.cursor.successful()) {
        sim.status = SimulatorStatus::computed;
        sim.result = sim.cursor.emitted();
        sim.computed_at_step = stats_.steps;
        sim.rightmost_block = pos.block;
        check(static_cast<std::int64_t>(sim.result.size()) == block(sim.block).length(),
              "result length equals block length");
      } else {
        advance(sim);
      }
      break;
    }
    }
  }

  // Lockstep: one NEXT per step for everyone except a simulator that just
  // completed, which keeps its position.
  std::vector<std::size_t> still_running;
  std::int64_t previous_block = 0;
  std::optional<BitPosition> previous_position;
  for (std::size_t r = 0; r < running_.size(); ++r) {
    const SimulatorState &sim = sims_[running_[r]];
    const auto expected = next_position(before[r], blocks_);
    if (sim.status == SimulatorStatus::computed)
      check(sim.position == before[r], "completed simulator keeps its position");
    else
      check(sim.position == expected, "lockstep advancement");
    if (sim.status == SimulatorStatus::running) {
      if (previous_position)
        check(previous_block < sim.block && *previous_position <= *sim.position,
              "positions ordered by block index");
      previous_block = sim.block;
      previous_position = sim.position;
      still_running.push_back(running_[r]);
    }
  }
  running_ = std::move(still_running);
  return !running_.empty();
}

void Schedule::run() {
  while (step()) {
  }
}

ScheduleResult run_schedule(std::span<const BlockRecord> blocks, const ProbabilityVector &q,
                            std::span<const std::int64_t> targets,
                            std::optional<std::int64_t> first_simulator) {
  if (targets.empty())
    return {};
  const std::int64_t lowest = *std::min_element(targets.begin(), targets.end());
  for (std::int64_t k : targets)
    if (find_block(blocks, k) == nullptr)
      throw InvalidArgument("target block " + std::to_string(k) + " outside the window");
  const std::int64_t first = first_simulator.value_or(lowest);
  if (first > lowest)
    throw InvalidArgument("targets below the first instantiated simulator");

  Schedule schedule(blocks, q, first, true);
  schedule.run();

  ScheduleResult out;
  for (std::int64_t k : targets) {
    const SimulatorState &sim = schedule.simulator(k);
    if (sim.status != SimulatorStatus::computed)
      throw WindowExhausted("window exhausted: simulator " + std::to_string(k) +
                            " needs bits beyond block " + std::to_string(blocks.back().index));
    out.results[k] = sim.result;
    out.rightmost_block[k] = sim.rightmost_block;
  }
  out.log = schedule.log();
  out.stats = schedule.stats();
  return out;
}

RangeOutput map_range(std::span<const Symbol> x, const PatternConfig &cfg,
                      const ProbabilityVector &q, std::int64_t first, std::int64_t last,
                      const EngineOptions &options) {
  if (first < 0 || last < first)
    throw InvalidArgument("invalid index range");
  check_word(x, cfg.alphabet);
  const auto n = static_cast<std::int64_t>(x.size());
  const auto cap = static_cast<std::int64_t>(options.max_window);

  // Nothing beyond last + max_window may influence any target.
  const std::int64_t visible = std::min(n, last + cap + 1);
  const auto window = x.first(static_cast<std::size_t>(std::max<std::int64_t>(visible, 0)));

  RangeOutput out;
  const auto markers = scan_markers(window, cfg);
  const auto blocks = segment_blocks(window, cfg, 0);
  std::optional<Schedule> schedule;
  if (!blocks.empty()) {
    schedule.emplace(blocks, q, 0);
    schedule->run();
    out.stats = schedule->stats();
  }

  for (std::int64_t i = first; i <= last; ++i) {
    // Block k covers markers[k] < i <= markers[k+1].
    const auto upper = std::lower_bound(markers.begin(), markers.end(), i);
    const bool leading = upper == markers.begin();
    const bool inside = !leading && upper != markers.end();
    std::optional<OutputSymbol> symbol;
    if (inside) {
      const auto k = static_cast<std::int64_t>(upper - markers.begin()) - 1;
      const SimulatorState &sim = schedule->simulator(k);
      if (sim.status == SimulatorStatus::computed) {
        const std::int64_t r_k = markers[static_cast<std::size_t>(k)];
        const std::int64_t r_next = markers[static_cast<std::size_t>(sim.rightmost_block + 1)];
        CodingReport rep;
        rep.index = i;
        rep.block = k;
        rep.left_marker = r_k;
        rep.rightmost_block = sim.rightmost_block;
        rep.right_extent = r_next + cfg.marker_length - 1;
        rep.radius = std::max(i - r_k, r_next + cfg.marker_length - i);
        if (rep.right_extent - i <= cap)
          symbol = OutputSymbol{i, sim.result[static_cast<std::size_t>(i - r_k - 1)], rep};
      }
    }
    if (symbol) {
      out.determined.push_back(*symbol);
      continue;
    }
    if (!leading && n - 1 > i + cap)
      throw WindowExhausted("window exhausted: index " + std::to_string(i) +
                            " is not determined within " + std::to_string(cap) +
                            " symbols to its right");
    out.undetermined.push_back(i);
  }
  return out;
}

std::int64_t certified_radius(std::span<const Symbol> x, const PatternConfig &cfg,
                              const ProbabilityVector &q, std::int64_t i,
                              const EngineOptions &options) {
  const RangeOutput r = map_range(x, cfg, q, i, i, options);
  if (r.determined.empty())
    throw Error("output at index " + std::to_string(i) + " is not determined by the input");
  return r.determined.front().report.radius;
}

} // namespace finitary
