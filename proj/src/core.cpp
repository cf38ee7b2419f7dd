#include "finitary/core.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace finitary {

namespace {

bool is_integer_literal(std::string_view s) {
  if (s.empty())
    return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size())
    return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      return false;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

} // namespace

ProbabilityVector::ProbabilityVector(std::vector<Rational> entries)
    : entries_(std::move(entries)), common_den_(1) {
  if (entries_.empty())
    throw InvalidArgument("probability vector is empty");
  Rational sum = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Rational &e = entries_[i];
    if (e == 0)
      throw InvalidArgument("zero entry at index " + std::to_string(i + 1));
    if (e < 0)
      throw InvalidArgument("negative entry " + to_string(e) + " at index " +
                            std::to_string(i + 1));
    sum += e;
    common_den_ = mp::lcm(common_den_, BigInt(mp::denominator(e)));
  }
  if (sum != 1)
    throw InvalidArgument("entries sum to " + to_string(sum) + ", not 1 (sum ≠ 1)");
}

ProbabilityVector ProbabilityVector::uniform(int m) {
  if (m < 1)
    throw InvalidArgument("uniform distribution needs at least one symbol");
  return ProbabilityVector(std::vector<Rational>(m, Rational(1, m)));
}

ProbabilityVector validate_distribution(std::vector<Rational> entries) {
  return ProbabilityVector(std::move(entries));
}

double entropy(const ProbabilityVector &p) {
  long double h = 0;
  for (const Rational &e : p.entries()) {
    const long double x = e.convert_to<long double>();
    h -= x * std::log(x);
  }
  return static_cast<double>(h);
}

std::vector<Rational> cumulative(const ProbabilityVector &q) {
  std::vector<Rational> out;
  out.reserve(q.size() + 1);
  out.emplace_back(0);
  for (const Rational &e : q.entries())
    out.push_back(out.back() + e);
  return out;
}

Rational parse_rational(std::string_view text) {
  const std::string_view s = trim(text);
  const auto slash = s.find('/');
  const std::string_view num = slash == std::string_view::npos ? s : s.substr(0, slash);
  const std::string_view den = slash == std::string_view::npos ? "1" : s.substr(slash + 1);
  if (!is_integer_literal(num) || !is_integer_literal(den) || den[0] == '-' || den[0] == '+')
    throw InvalidArgument("malformed rational '" + std::string(s) +
                          "' (expected a/b or an integer)");
  const BigInt d{std::string(den)};
  if (d == 0)
    throw InvalidArgument("zero denominator in '" + std::string(s) + "'");
  std::string n(num);
  if (n[0] == '+')
    n.erase(0, 1);
  return Rational(BigInt(n), d);
}

ProbabilityVector parse_probability_vector(std::string_view text) {
  std::vector<Rational> entries;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    entries.push_back(parse_rational(text.substr(start, comma - start)));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return ProbabilityVector(std::move(entries));
}

SymbolWord parse_word(std::string_view text) {
  SymbolWord out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    if (!is_integer_literal(tok) || tok[0] == '-' || tok[0] == '+')
      throw InvalidArgument("malformed symbol '" + tok + "'");
    if (tok.size() > 9)
      throw InvalidArgument("symbol '" + tok + "' out of range");
    const int v = std::stoi(tok);
    if (v < 1)
      throw InvalidArgument("symbols are 1-based, got " + tok);
    out.push_back(v);
  }
  return out;
}

BitString parse_bits(std::string_view text) {
  BitString out;
  for (char c : text) {
    if (c == '0' || c == '1')
      out.push_back(static_cast<std::uint8_t>(c - '0'));
    else if (!std::isspace(static_cast<unsigned char>(c)))
      throw InvalidArgument(std::string("invalid bit character '") + c + "'");
  }
  return out;
}

std::string to_string(const Rational &r) {
  if (mp::denominator(r) == 1)
    return mp::numerator(r).str();
  return mp::numerator(r).str() + "/" + mp::denominator(r).str();
}

std::string to_string(const ProbabilityVector &p) {
  std::string out;
  for (const Rational &e : p.entries()) {
    if (!out.empty())
      out += ',';
    out += to_string(e);
  }
  return out;
}

std::string to_string(const BitString &bits) {
  std::string out;
  out.reserve(bits.size());
  for (auto b : bits)
    out += b ? '1' : '0';
  return out;
}

std::string to_string(std::span<const Symbol> word) {
  std::string out;
  for (Symbol s : word) {
    if (!out.empty())
      out += ' ';
    out += std::to_string(s);
  }
  return out;
}

void check_word(std::span<const Symbol> word, int alphabet_size) {
  for (std::size_t i = 0; i < word.size(); ++i)
    if (word[i] < 1 || word[i] > alphabet_size)
      throw InvalidArgument("symbol " + std::to_string(word[i]) + " at position " +
                            std::to_string(i) + " outside alphabet 1.." +
                            std::to_string(alphabet_size));
}

} // namespace finitary
