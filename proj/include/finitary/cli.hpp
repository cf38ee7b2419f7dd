#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finitary/core.hpp"

namespace finitary {

/// Settings read from a key=value file. Blank lines and lines starting with
/// '#' are ignored; keys are a, q, eps, t, seed, max_window.
struct ConfigValues {
  std::optional<int> a;
  std::optional<ProbabilityVector> q;
  std::optional<Rational> eps;
  std::optional<int> t;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_window;
};

struct Config {
  int a = 2;
  ProbabilityVector q = ProbabilityVector::uniform(2);
  std::optional<Rational> eps;
  std::optional<int> t;
  std::optional<std::uint64_t> seed;
  std::size_t max_window = 1'000'000;
};

/// Parses without requiring any key. Values are validated as they are read.
ConfigValues parse_config_values(std::string_view text);

/// Checks that a and q are present, a >= 2, and that eps > 0 is given
/// unless t is.
Config finalize_config(const ConfigValues &v);

Config parse_config(std::string_view text);

enum ExitCode : int {
  exit_ok = 0,
  exit_input_error = 1,
  exit_window_exhausted = 2,
  exit_verification_failed = 3,
};

/// Runs one command line (without the program name). Data goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string> &args, std::istream &in, std::ostream &out,
        std::ostream &err);

} // namespace finitary
