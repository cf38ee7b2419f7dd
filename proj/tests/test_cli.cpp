#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "finitary/cli.hpp"

using namespace finitary;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(std::vector<std::string> args, const std::string &input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string config_error(const char *text) {
  try {
    parse_config(text);
  } catch (const InvalidArgument &e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("config parsing") {
  const Config c = parse_config("a=3\nq=1/2,1/2\neps=2/5");
  CHECK(c.a == 3);
  CHECK(c.q == parse_probability_vector("1/2,1/2"));
  CHECK(*c.eps == Rational(2, 5));
  CHECK_FALSE(c.t.has_value());
  CHECK(c.max_window == 1000000);

  const Config d = parse_config("# comment\n a = 2 \n\nq=1/3,2/3\nt=4\nseed=11\nmax_window=50\n");
  CHECK(*d.t == 4);
  CHECK(*d.seed == 11);
  CHECK(d.max_window == 50);

  CHECK(config_error("a=1\nq=1").find("a must be ≥ 2") != std::string::npos);
  CHECK(config_error("q=1/2,1/3").find("sum ≠ 1") != std::string::npos);
  CHECK(config_error("a=2\nq=1/2,1/2\neps=2/5\ncolour=red").find("unknown key") != std::string::npos);
  CHECK(config_error("a=2\nq=1/2,x").find("malformed rational") != std::string::npos);
  CHECK(config_error("q=1/2,1/2\neps=1/3").find("missing required key 'a'") != std::string::npos);
  CHECK(config_error("a=2\neps=1/3").find("'q'") != std::string::npos);
  CHECK(config_error("a=2\nq=1/2,1/2").find("eps") != std::string::npos);
  CHECK(config_error("a=2\nq=1/2,1/2\neps=0").find("eps must be > 0") != std::string::npos);
  CHECK(config_error("a=2\nq=1/2,1/2\nt") != "");
}

TEST_CASE("extract command") {
  const Outcome o = call({"extract", "--a", "2", "--t", "3", "--word", "1 1 2"});
  CHECK(o.code == 0);
  CHECK(o.out == "N=1 F=1 G=3\n");
  CHECK(call({"extract", "--a", "2", "--t", "3"}, "2 2 1").out == "N=0 F= G=2\n");
  const Outcome bad = call({"extract", "--a", "2", "--t", "3", "--word", "2 1 1"});
  CHECK(bad.code == 1);
  CHECK(bad.out.empty());
  CHECK(bad.err.find("error") != std::string::npos);
}

TEST_CASE("simulate command") {
  CHECK(call({"simulate", "--q", "1/2,1/2"}, "0 0 1").out == "T=3 S=1\n");
  CHECK(call({"simulate", "--q", "1/3,2/3"}, "10").out == "T=2 S=2\n");
  CHECK(call({"simulate", "--q", "1/2,1/2"}, "0 1").code == 1);
}

TEST_CASE("verify-bounds command") {
  const Outcome o = call({"verify-bounds", "--q", "1/3,2/3", "--kmax", "20"});
  CHECK(o.code == 0);
  CHECK(o.out.find("bound_b_plus_1\tyes") != std::string::npos);
  CHECK(o.out.find("tail\t20\t") != std::string::npos);
  const Outcome fair = call({"verify-bounds", "--q", "1/2,1/2"});
  CHECK(fair.code == 0);
  CHECK(fair.out.find("bound_b_plus_1_first_violation\t2") != std::string::npos);
  const Outcome ex = call({"verify-bounds", "--a", "2", "--t", "3", "--nmax", "5"});
  CHECK(ex.code == 0);
  CHECK(ex.out.find("extractor_ok\tyes") != std::string::npos);
  CHECK(call({"verify-bounds"}).code == 1);
}

TEST_CASE("selection and certification commands") {
  const Outcome s = call({"select-t", "--q", "1/2,1/2", "--eps", "2/5", "--a", "3"});
  CHECK(s.code == 0);
  CHECK(s.out.rfind("t\t6\n", 0) == 0);
  const Outcome c = call({"certify-t", "--q", "1/2,1/2", "--a", "3", "--t", "6", "--trials",
                          "4000", "--seed", "5"});
  CHECK(c.code == 0);
  CHECK(c.out.find("verdict\tpass") != std::string::npos);
  CHECK(c.out.find("seed\t5") != std::string::npos);
  const Outcome f = call({"certify-t", "--q", "1/2,1/2", "--p", "1/2,1/2", "--t", "3",
                          "--trials", "4000", "--seed", "5"});
  CHECK(f.code == 3);
  CHECK(f.out.find("verdict\tfail") != std::string::npos);
}

TEST_CASE("seed falls back to the environment") {
  const std::vector<std::string> args{"certify-t", "--q", "1/2,1/2", "--a", "3", "--t", "4",
                                      "--trials", "500"};
  ::setenv("FINITARY_SEED", "31", 1);
  const Outcome from_env = call(args);
  ::unsetenv("FINITARY_SEED");
  CHECK(from_env.out.find("seed\t31") != std::string::npos);
  std::vector<std::string> explicit_seed = args;
  explicit_seed.insert(explicit_seed.end(), {"--seed", "31"});
  CHECK(call(explicit_seed).out == from_env.out);
}

TEST_CASE("encode command") {
  const std::string input = "1 2 1 3 3 1 3 2 2 3 3 1 2 3 3 3 1 3 3 2 2 3 1 3 3 2 1 3";
  const Outcome o = call({"encode", "--a", "3", "--q", "1/2,1/2", "--t", "2", "--report"}, input);
  CHECK(o.code == 0);
  std::istringstream lines(o.out);
  std::string symbols;
  std::getline(lines, symbols);
  std::string line;
  std::size_t reports = 0;
  while (std::getline(lines, line)) {
    ++reports;
    CHECK(std::count(line.begin(), line.end(), '\t') == 2);
  }
  CHECK(reports == static_cast<std::size_t>(std::count(symbols.begin(), symbols.end(), ' ') +
                                            (symbols.empty() ? 0 : 1)));
  CHECK(call({"encode", "--a", "3", "--q", "1/2,1/2", "--t", "2"}, input).out ==
        o.out.substr(0, o.out.find('\n') + 1));

  const Outcome exhausted =
      call({"encode", "--a", "2", "--q", "1/2,1/2", "--t", "2", "--max-window", "1"},
           "2 1 2 1 1 1 1 1 1 1 1 1");
  CHECK(exhausted.code == 2);
  CHECK(exhausted.out.empty());
  CHECK(call({"encode", "--a", "2", "--q", "1/2,1/2", "--t", "2"}, "1 3").code == 1);
}

TEST_CASE("encode reads a config file") {
  const std::string path = "finitary_test.cfg";
  {
    std::ofstream f(path);
    f << "a=2\nq=1/2,1/2\nt=2\nmax_window=1\n";
  }
  CHECK(call({"encode", "--config", path}, "2 1 2 1 1 1 1 1 1 1 1 1").code == 2);
  CHECK(call({"encode", "--config", path, "--max-window", "1000"}, "2 1 2 1 1 1 1 1 1 1 1 1")
            .code == 0);
  std::remove(path.c_str());
  CHECK(call({"encode", "--config", "no/such/file"}).code == 1);
}

TEST_CASE("analyze and tails commands") {
  std::string input;
  unsigned state = 12345;
  for (int i = 0; i < 6000; ++i) {
    state = state * 1103515245u + 12345u;
    input += std::to_string((state >> 16) % 3 + 1) + " ";
  }
  const Outcome a = call({"analyze", "--a", "3", "--q", "1/2,1/2", "--t", "3"}, input);
  CHECK(a.code == 0);
  CHECK(a.out.find("single_p\t") != std::string::npos);
  CHECK(a.out.find("pair_df\t3") != std::string::npos);
  CHECK(a.out.find("tail_slope\t") != std::string::npos);

  std::string samples;
  for (int i = 0; i < 400; ++i)
    samples += std::to_string(i % 7 == 0 ? 5 : i % 3) + "\n";
  const Outcome t = call({"tails"}, samples);
  CHECK(t.code == 0);
  CHECK(t.out.find("tail_r2\t") != std::string::npos);
  CHECK(call({"tails"}, "1 1 1").code == 1);
}

TEST_CASE("usage errors") {
  CHECK(call({}).code == 1);
  CHECK(call({"bogus"}).code == 1);
  CHECK(call({"extract", "--a", "two"}).code == 1);
  CHECK(call({"--help"}).code == 0);
}
