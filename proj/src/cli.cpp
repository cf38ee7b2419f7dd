#include "finitary/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "finitary/calibration.hpp"
#include "finitary/dyadic_sim.hpp"
#include "finitary/engine.hpp"
#include "finitary/extractor.hpp"

namespace finitary {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T> T parse_integer(const std::string &key, const std::string &value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != value.size() || value.empty())
    throw InvalidArgument("malformed integer for '" + key + "': '" + value + "'");
  if (v < 0 && std::is_unsigned_v<T>)
    throw InvalidArgument("'" + key + "' must be non-negative");
  return static_cast<T>(v);
}

void check_alphabet(int a) {
  if (a < 2)
    throw InvalidArgument("a must be ≥ 2");
}

} // namespace

ConfigValues parse_config_values(std::string_view text) {
  ConfigValues v;
  std::istringstream lines{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    const std::string l = trim(line);
    if (l.empty() || l.front() == '#')
      continue;
    const auto eq = l.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("line " + std::to_string(number) + ": expected key=value");
    const std::string key = trim(std::string_view(l).substr(0, eq));
    const std::string value = trim(std::string_view(l).substr(eq + 1));
    if (key == "a") {
      v.a = parse_integer<int>(key, value);
      check_alphabet(*v.a);
    } else if (key == "q") {
      v.q = parse_probability_vector(value);
    } else if (key == "eps") {
      v.eps = parse_rational(value);
    } else if (key == "t") {
      v.t = parse_integer<int>(key, value);
    } else if (key == "seed") {
      v.seed = parse_integer<std::uint64_t>(key, value);
    } else if (key == "max_window") {
      v.max_window = parse_integer<std::size_t>(key, value);
    } else {
      throw InvalidArgument("unknown key '" + key + "'");
    }
  }
  return v;
}

Config finalize_config(const ConfigValues &v) {
  if (!v.a)
    throw InvalidArgument("missing required key 'a'");
  check_alphabet(*v.a);
  if (!v.q)
    throw InvalidArgument("missing required key 'q'");
  if (v.t && *v.t < 1)
    throw InvalidArgument("t must be ≥ 1");
  if (!v.t) {
    if (!v.eps)
      throw InvalidArgument("missing required key 'eps' (or an explicit 't')");
    if (*v.eps <= 0)
      throw InvalidArgument("eps must be > 0");
  }
  Config c;
  c.a = *v.a;
  c.q = *v.q;
  c.eps = v.eps;
  c.t = v.t;
  c.seed = v.seed;
  if (v.max_window)
    c.max_window = *v.max_window;
  return c;
}

Config parse_config(std::string_view text) { return finalize_config(parse_config_values(text)); }

namespace {

struct Flags {
  std::string config, q, eps, p, word;
  std::optional<int> t, a;
  std::size_t kmax = 20, trials = 10000;
  std::optional<std::size_t> nmax;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_window;
  bool report = false;
};

std::string read_all(std::istream &in) {
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ConfigValues gather(const Flags &f) {
  ConfigValues v;
  if (!f.config.empty()) {
    std::ifstream file(f.config);
    if (!file)
      throw InvalidArgument("cannot read config file '" + f.config + "'");
    v = parse_config_values(read_all(file));
  }
  if (f.a) {
    check_alphabet(*f.a);
    v.a = f.a;
  }
  if (!f.q.empty())
    v.q = parse_probability_vector(f.q);
  if (!f.eps.empty())
    v.eps = parse_rational(f.eps);
  if (f.t)
    v.t = f.t;
  if (f.seed)
    v.seed = f.seed;
  if (f.max_window)
    v.max_window = f.max_window;
  return v;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t> &seed) {
  if (seed)
    return *seed;
  if (const char *env = std::getenv("FINITARY_SEED"))
    return parse_integer<std::uint64_t>("FINITARY_SEED", trim(env));
  return 0;
}

int marker_length(const Config &c) {
  return c.t ? *c.t : select_marker_length(c.q, *c.eps, c.a);
}

const ProbabilityVector &need_q(const ConfigValues &v) {
  if (!v.q)
    throw InvalidArgument("missing --q");
  return *v.q;
}

RangeOutput encode_stdin(const Config &c, std::istream &in, int &t) {
  t = marker_length(c);
  const SymbolWord x = parse_word(read_all(in));
  if (x.empty())
    return {};
  const PatternConfig cfg(c.a, t);
  return map_range(x, cfg, c.q, 0, static_cast<std::int64_t>(x.size()) - 1,
                   EngineOptions{c.max_window});
}

int cmd_encode(const Flags &f, std::istream &in, std::ostream &out) {
  const Config c = finalize_config(gather(f));
  int t = 0;
  const RangeOutput r = encode_stdin(c, in, t);
  for (std::size_t i = 0; i < r.determined.size(); ++i)
    out << (i ? " " : "") << r.determined[i].symbol;
  out << '\n';
  if (f.report)
    for (const OutputSymbol &s : r.determined)
      out << s.index << '\t' << s.symbol << '\t' << s.report.radius << '\n';
  return exit_ok;
}

int cmd_simulate(const Flags &f, std::istream &in, std::ostream &out) {
  const ConfigValues v = gather(f);
  const ProbabilityVector &q = need_q(v);
  const BitString bits = parse_bits(read_all(in));
  const SimulationOutcome o = simulate_one(q, bits);
  out << "T=" << o.stopping_time << " S=" << o.symbol << '\n';
  return exit_ok;
}

int cmd_extract(const Flags &f, std::istream &in, std::ostream &out) {
  const ConfigValues v = gather(f);
  if (!v.a || !v.t)
    throw InvalidArgument("extract needs --a and --t");
  const PatternConfig cfg(*v.a, *v.t);
  const SymbolWord w = parse_word(f.word.empty() ? read_all(in) : f.word);
  check_word(w, cfg.alphabet);
  const ExtractionTriple x = extract(w, cfg);
  out << "N=" << x.bit_count << " F=" << to_string(x.bits) << " G=" << x.class_index << '\n';
  return exit_ok;
}

int cmd_select(const Flags &f, std::ostream &out) {
  const ConfigValues v = gather(f);
  if (!v.a || !v.eps)
    throw InvalidArgument("select-t needs --a, --q and --eps");
  const MarkerSelection s = select_marker_length_report(need_q(v), *v.eps, *v.a);
  out << "t\t" << s.t << '\n'
      << "delta\t" << s.delta << '\n'
      << "u_min\t" << s.u_min << '\n'
      << "f_u_min\t" << s.f_at_u_min << '\n'
      << "slope_u_min\t" << s.slope_at_u_min << '\n'
      << "margin_bits\t" << s.margin_bits << '\n';
  return exit_ok;
}

int cmd_certify(const Flags &f, std::ostream &out) {
  const ConfigValues v = gather(f);
  const ProbabilityVector &q = need_q(v);
  int a = v.a.value_or(0);
  std::optional<ProbabilityVector> p;
  if (!f.p.empty()) {
    p = parse_probability_vector(f.p);
    if (v.a && p->size() != a)
      throw InvalidArgument("--p has " + std::to_string(p->size()) + " entries but a=" +
                            std::to_string(a));
    a = p->size();
  }
  check_alphabet(a);
  if (!p)
    p = ProbabilityVector::uniform(a);
  int t = 0;
  if (v.t)
    t = *v.t;
  else if (v.eps)
    t = select_marker_length(q, *v.eps, a);
  else
    throw InvalidArgument("certify-t needs --t or --eps");
  const CertificationReport r =
      certify_marker_length(*p, q, t, f.trials, resolve_seed(v.seed));
  out << "t\t" << r.t << '\n'
      << "trials\t" << r.trials << '\n'
      << "seed\t" << r.seed << '\n'
      << "expected_block_length\t" << to_string(r.expected_length) << '\n'
      << "mean_block_length\t" << r.mean_length << '\n'
      << "mean_bits\t" << r.mean_bits << '\n'
      << "stderr\t" << r.stderr_bits << '\n'
      << "bound\t" << r.bound << '\n'
      << "margin\t" << r.margin << '\n'
      << "verdict\t" << to_string(r.verdict) << '\n';
  return r.verdict == Verdict::pass ? exit_ok : exit_verification_failed;
}

const char *yes_no(bool b) { return b ? "yes" : "no"; }

int cmd_verify(const Flags &f, std::ostream &out) {
  const ConfigValues v = gather(f);
  bool ok = true;
  bool ran = false;
  if (v.q) {
    ran = true;
    const Simu1Report r = verify_simu1(*v.q, f.kmax);
    out << "check\tsimulation\n"
        << "q\t" << to_string(*v.q) << '\n'
        << "kmax\t" << r.kmax << '\n';
    for (std::size_t k = 1; k <= r.kmax; ++k)
      out << "tail\t" << k << '\t' << to_string(r.survival[k]) << '\n';
    out << "agrees_with_tree_walk\t" << yes_no(r.agrees_with_tree_walk) << '\n'
        << "bound_b_plus_1\t" << yes_no(r.tight_bound_holds) << '\n';
    if (!r.tight_bound_holds)
      out << "bound_b_plus_1_first_violation\t" << r.tight_bound_first_violation << '\n';
    out << "bound_2_b_plus_1\t" << yes_no(r.corrected_bound_holds) << '\n'
        << "law_accounted\t" << yes_no(r.law_accounted) << '\n'
        << "mean_lo\t" << r.mean_lo.convert_to<double>() << '\n'
        << "mean_hi\t" << r.mean_hi.convert_to<double>() << '\n'
        << "mean_bound\t" << r.mean_bound << '\n'
        << "mean_bound_holds\t" << yes_no(r.mean_bound_holds) << '\n';
    ok = ok && r.ok();
  }
  if (v.a && v.t) {
    ran = true;
    std::vector<ProbabilityVector> ps;
    if (!f.p.empty())
      ps.push_back(parse_probability_vector(f.p));
    else
      ps = default_test_distributions(*v.a);
    const ExtractorReport r = verify_extractor(*v.a, *v.t, f.nmax.value_or(6), ps);
    out << "check\textractor\n"
        << "a\t" << r.alphabet << '\n'
        << "t\t" << r.marker_length << '\n';
    for (const ExtractorRow &row : r.rows)
      out << "n\t" << row.n << "\twords\t" << row.words << "\tclasses\t" << row.classes
          << "\tinjective\t" << yes_no(row.injective) << "\tround_trip\t"
          << yes_no(row.round_trip) << "\tuniform\t" << yes_no(row.uniform) << "\tsize_bound\t"
          << yes_no(row.size_bound) << "\tpartition\t" << yes_no(row.partition) << '\n';
    out << "extractor_ok\t" << yes_no(r.ok()) << '\n';
    ok = ok && r.ok();
  }
  if (!ran)
    throw InvalidArgument("verify-bounds needs --q (simulation) or --a and --t (extractor)");
  return ok ? exit_ok : exit_verification_failed;
}

void print_gof(std::ostream &out, const std::string &name, const GofReport &g) {
  out << name << "_statistic\t" << g.statistic << '\n'
      << name << "_df\t" << g.df << '\n'
      << name << "_p\t" << g.p_value << '\n';
}

void print_tail(std::ostream &out, const TailFit &t) {
  out << "tail_slope\t" << t.slope << '\n'
      << "tail_intercept\t" << t.intercept << '\n'
      << "tail_r2\t" << t.r_squared << '\n'
      << "tail_points\t" << t.points << '\n';
}

int cmd_analyze(const Flags &f, std::istream &in, std::ostream &out, std::ostream &err) {
  const Config c = finalize_config(gather(f));
  int t = 0;
  const RangeOutput r = encode_stdin(c, in, t);
  SymbolWord y;
  std::vector<std::int64_t> radii;
  for (const OutputSymbol &s : r.determined) {
    y.push_back(s.symbol);
    radii.push_back(s.report.radius);
  }
  out << "t\t" << t << '\n'
      << "determined\t" << r.determined.size() << '\n'
      << "undetermined\t" << r.undetermined.size() << '\n';
  if (y.empty()) {
    err << "no determined output symbols\n";
    return exit_ok;
  }
  const int b = c.q.size();
  print_gof(out, "single", chi_square(symbol_counts(y, b), c.q));
  if (y.size() >= 2)
    print_gof(out, "pair", chi_square(pair_counts(y, b), product_distribution(c.q, c.q)));
  try {
    print_tail(out, tail_fit(radii));
  } catch (const InvalidArgument &e) {
    err << "tail fit skipped: " << e.what() << '\n';
  }
  return exit_ok;
}

int cmd_tails(std::istream &in, std::ostream &out) {
  std::vector<std::int64_t> samples;
  std::string token;
  while (in >> token)
    samples.push_back(parse_integer<std::int64_t>("sample", token));
  print_tail(out, tail_fit(samples));
  return exit_ok;
}

} // namespace

int run(const std::vector<std::string> &args, std::istream &in, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Finitary coding between i.i.d. symbol streams", "finitary"};
  app.require_subcommand(1);
  Flags f;

  const auto add_common = [&](CLI::App *s) {
    s->add_option("--config", f.config, "key=value config file");
    s->add_option("--q", f.q, "target distribution, comma-separated rationals");
    s->add_option("--eps", f.eps, "entropy gap");
    s->add_option("--t", f.t, "marker length")->check(CLI::PositiveNumber);
    s->add_option("--a", f.a, "source alphabet size");
    s->add_option("--seed", f.seed, "random seed (default: FINITARY_SEED, else 0)");
    s->add_option("--max-window", f.max_window, "symbols readable beyond an index");
  };

  auto *encode = app.add_subcommand("encode", "map a symbol stream from stdin");
  add_common(encode);
  encode->add_flag("--report", f.report, "add i, symbol, W lines");
  auto *simulate = app.add_subcommand("simulate", "simulate one q-symbol from bits on stdin");
  add_common(simulate);
  auto *extract_cmd = app.add_subcommand("extract", "extract unbiased bits from a word");
  add_common(extract_cmd);
  extract_cmd->add_option("--word", f.word, "word (default: stdin)");
  auto *select = app.add_subcommand("select-t", "choose a marker length");
  add_common(select);
  auto *certify = app.add_subcommand("certify-t", "Monte-Carlo check of a marker length");
  add_common(certify);
  certify->add_option("--trials", f.trials, "sampled blocks")->check(CLI::PositiveNumber);
  certify->add_option("--p", f.p, "source distribution (default: uniform)");
  auto *verify = app.add_subcommand("verify-bounds", "exact checks of the primitives");
  add_common(verify);
  verify->add_option("--kmax", f.kmax, "tail depth")->check(CLI::Range(2, 4000));
  verify->add_option("--nmax", f.nmax, "largest word length")->check(CLI::Range(0, 12));
  verify->add_option("--p", f.p, "distribution for the uniformity check");
  auto *analyze = app.add_subcommand("analyze", "encode, then test the output law");
  add_common(analyze);
  auto *tails = app.add_subcommand("tails", "exponential fit of samples on stdin");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return exit_input_error;
  }

  try {
    if (encode->parsed())
      return cmd_encode(f, in, out);
    if (simulate->parsed())
      return cmd_simulate(f, in, out);
    if (extract_cmd->parsed())
      return cmd_extract(f, in, out);
    if (select->parsed())
      return cmd_select(f, out);
    if (certify->parsed())
      return cmd_certify(f, out);
    if (verify->parsed())
      return cmd_verify(f, out);
    if (analyze->parsed())
      return cmd_analyze(f, in, out, err);
    if (tails->parsed())
      return cmd_tails(in, out);
  } catch (const WindowExhausted &e) {
    err << "error: " << e.what() << '\n';
    return exit_window_exhausted;
  } catch (const InvariantViolation &e) {
    err << "error: " << e.what() << '\n';
    return exit_verification_failed;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return exit_input_error;
  }
  return exit_input_error;
}

} // namespace finitary
