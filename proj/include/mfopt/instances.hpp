#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "mfopt/error.hpp"
#include "mfopt/polynomial.hpp"
#include "mfopt/problem.hpp"

namespace mfopt {

// ---------------------------------------------------------------------------
// Generators.

// Strongly correlated knapsack: w_i ~ U{1..R}, q_i = w_i + R/10,
// d = floor(capacity_fraction * sum w).
struct KpGenSpec {
  std::size_t n = 100;
  std::int64_t weight_range = 1000;
  double capacity_fraction = 0.25;
  std::uint64_t seed = 0;

  std::int64_t correlation_offset() const { return weight_range / 10; }
};

// Quadratic knapsack in the style of the classic QKP generator: every
// diagonal profit present, each off-diagonal pair present with probability
// `density`; profits ~ U{profit_lo..profit_hi}, weights ~ U{weight_lo..
// weight_hi}, capacity ~ U{capacity_lo..sum w}.
struct QkpGenSpec {
  std::size_t n = 100;
  double density = 1.0;
  std::int64_t profit_lo = 1;
  std::int64_t profit_hi = 100;
  std::int64_t weight_lo = 1;
  std::int64_t weight_hi = 50;
  std::int64_t capacity_lo = 50;
  std::uint64_t seed = 0;
};

inline ProblemInstance gen_kp_strong(const KpGenSpec& spec) {
  if (spec.weight_range < 1) throw DomainError("weight range must be >= 1");
  if (!(spec.capacity_fraction > 0.0 && spec.capacity_fraction < 1.0)) {
    throw DomainError("capacity fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::int64_t> weight(1, spec.weight_range);
  std::vector<double> w(spec.n);
  std::vector<double> q(spec.n);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::int64_t wi = weight(rng);
    w[i] = static_cast<double>(wi);
    q[i] = static_cast<double>(wi + spec.correlation_offset());
    total += wi;
  }
  const auto d = static_cast<double>(static_cast<std::int64_t>(
      spec.capacity_fraction * static_cast<double>(total)));
  return ProblemInstance::knapsack(std::move(q), std::move(w), d);
}

inline ProblemInstance gen_qkp(const QkpGenSpec& spec) {
  if (!(spec.density > 0.0 && spec.density <= 1.0)) {
    throw DomainError("density must lie in (0, 1]");
  }
  if (spec.profit_lo < 0 || spec.profit_hi < spec.profit_lo ||
      spec.weight_lo < 1 || spec.weight_hi < spec.weight_lo) {
    throw DomainError("bad QKP coefficient ranges");
  }
  const std::size_t n = spec.n;
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::int64_t> profit(spec.profit_lo,
                                                     spec.profit_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> full(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    full[i * n + i] = static_cast<double>(profit(rng));
    for (std::size_t j = i + 1; j < n; ++j) {
      if (unit(rng) < spec.density) {
        const auto p = static_cast<double>(profit(rng));
        full[i * n + j] = p;
        full[j * n + i] = p;
      }
    }
  }
  std::uniform_int_distribution<std::int64_t> weight(spec.weight_lo,
                                                     spec.weight_hi);
  std::vector<double> w(n);
  std::int64_t total = 0;
  for (auto& wi : w) {
    const std::int64_t v = weight(rng);
    wi = static_cast<double>(v);
    total += v;
  }
  const std::int64_t lo = std::min(spec.capacity_lo, total);
  std::uniform_int_distribution<std::int64_t> cap(lo, total);
  const auto d = static_cast<double>(cap(rng));
  return ProblemInstance::quadratic_knapsack(std::move(full), std::move(w), d);
}

// ---------------------------------------------------------------------------
// Native text format, version 1.
//
//   mfopt-instance 1
//   n_vars <N>
//   kind <kp|qkp|generic>
//   kp:      gains <N values> / weights <N values> / capacity <d>
//   qkp:     weights <N values> / capacity <d> / quadratic, then N rows,
//            row i holding q_ii ... q_i,N-1
//   generic: objective <T> then T term lines "<coeff> <k> <i_1> ... <i_k>",
//            inequalities <K> then K blocks "constraint <T>" + T term lines,
//            equalities <L> in the same form
//   end
//
// Blank lines and lines starting with '#' are ignored. Numbers are written
// in shortest round-trip form.

inline constexpr std::string_view kFormatTag = "mfopt-instance";
inline constexpr int kFormatVersion = 1;

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_values(std::ostream& out, std::string_view key,
                         std::span<const double> values) {
  out << key;
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

inline void write_terms(std::ostream& out, const MultilinearPolynomial& p) {
  for (const auto& t : p.terms()) {
    out << format_double(t.coeff) << ' ' << t.vars.size();
    for (Index v : t.vars) out << ' ' << v;
    out << '\n';
  }
}

// Line reader that skips blanks and comments and remembers line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.empty() || tokens.front().starts_with('#')) continue;
      return tokens;
    }
    throw ParseError(line_no_ + 1, "unexpected end of file");
  }

  // Next line, which must start with `key`; returns the remaining tokens.
  std::vector<std::string> expect(std::string_view key) {
    auto tokens = next();
    if (tokens.front() != key) {
      fail("expected '" + std::string(key) + "', found '" + tokens.front() +
           "'");
    }
    tokens.erase(tokens.begin());
    return tokens;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_no_, what);
  }

  double number(const std::string& tok) const {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("not a number: '" + tok + "'");
    }
    return v;
  }

  std::size_t count(const std::string& tok) const {
    std::size_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("not a count: '" + tok + "'");
    }
    return v;
  }

  std::vector<double> numbers(const std::vector<std::string>& tokens,
                              std::size_t expected) const {
    if (tokens.size() != expected) {
      fail("expected " + std::to_string(expected) + " values, found " +
           std::to_string(tokens.size()));
    }
    std::vector<double> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(number(t));
    return out;
  }

  std::size_t single_count(std::string_view key) {
    const auto tokens = expect(key);
    if (tokens.size() != 1) fail("expected one value after " + std::string(key));
    return count(tokens[0]);
  }

  MultilinearPolynomial terms(std::size_t n_vars, std::size_t n_terms) {
    MultilinearPolynomial p(n_vars);
    for (std::size_t t = 0; t < n_terms; ++t) {
      const auto tokens = next();
      if (tokens.size() < 2) fail("term needs a coefficient and a degree");
      const double coeff = number(tokens[0]);
      const std::size_t k = count(tokens[1]);
      if (tokens.size() != k + 2) fail("term degree does not match indices");
      std::vector<Index> vars;
      for (std::size_t a = 0; a < k; ++a) {
        const std::size_t v = count(tokens[a + 2]);
        if (v >= n_vars) fail("variable index out of range");
        vars.push_back(static_cast<Index>(v));
      }
      p.add_term(coeff, std::move(vars));
    }
    return p;
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace detail

inline void write_instance(const ProblemInstance& inst, std::ostream& out) {
  out << kFormatTag << ' ' << kFormatVersion << '\n';
  out << "n_vars " << inst.n_vars() << '\n';
  out << "kind " << to_string(inst.kind()) << '\n';
  const std::size_t n = inst.n_vars();
  switch (inst.kind()) {
    case ProblemKind::kKp:
      detail::write_values(out, "gains", inst.gains());
      detail::write_values(out, "weights", inst.weights());
      out << "capacity " << detail::format_double(inst.capacity()) << '\n';
      break;
    case ProblemKind::kQkp:
      detail::write_values(out, "weights", inst.weights());
      out << "capacity " << detail::format_double(inst.capacity()) << '\n';
      out << "quadratic\n";
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = inst.quadratic_row(i).subspan(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
          if (j) out << ' ';
          out << detail::format_double(row[j]);
        }
        out << '\n';
      }
      break;
    case ProblemKind::kGeneric:
      out << "objective " << inst.objective().size() << '\n';
      detail::write_terms(out, inst.objective());
      out << "inequalities " << inst.inequalities().size() << '\n';
      for (const auto& g : inst.inequalities()) {
        out << "constraint " << g.size() << '\n';
        detail::write_terms(out, g);
      }
      out << "equalities " << inst.equalities().size() << '\n';
      for (const auto& h : inst.equalities()) {
        out << "constraint " << h.size() << '\n';
        detail::write_terms(out, h);
      }
      break;
  }
  out << "end\n";
}

inline ProblemInstance read_instance(std::istream& in) {
  detail::LineReader reader(in);
  {
    const auto header = reader.next();
    if (header.size() != 2 || header[0] != kFormatTag) {
      reader.fail("missing '" + std::string(kFormatTag) + "' header");
    }
    if (reader.count(header[1]) != static_cast<std::size_t>(kFormatVersion)) {
      reader.fail("unsupported format version " + header[1]);
    }
  }
  const std::size_t n = reader.single_count("n_vars");
  const auto kind_tokens = reader.expect("kind");
  if (kind_tokens.size() != 1) reader.fail("expected one kind");
  ProblemKind kind{};
  try {
    kind = parse_kind(kind_tokens[0]);
  } catch (const MalformedInstance& e) {
    reader.fail(e.what());
  }

  auto scalar = [&](std::string_view key) {
    const auto tokens = reader.expect(key);
    return reader.numbers(tokens, 1)[0];
  };

  ProblemInstance inst;
  switch (kind) {
    case ProblemKind::kKp: {
      auto q = reader.numbers(reader.expect("gains"), n);
      auto w = reader.numbers(reader.expect("weights"), n);
      const double d = scalar("capacity");
      inst = ProblemInstance::knapsack(std::move(q), std::move(w), d);
      break;
    }
    case ProblemKind::kQkp: {
      auto w = reader.numbers(reader.expect("weights"), n);
      const double d = scalar("capacity");
      if (!reader.expect("quadratic").empty()) {
        reader.fail("unexpected values after 'quadratic'");
      }
      std::vector<double> upper;
      upper.reserve(n * (n + 1) / 2);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = reader.numbers(reader.next(), n - i);
        upper.insert(upper.end(), row.begin(), row.end());
      }
      inst = ProblemInstance::quadratic_knapsack_upper(upper, std::move(w), d);
      break;
    }
    case ProblemKind::kGeneric: {
      const std::size_t t = reader.single_count("objective");
      const auto f = reader.terms(n, t);
      std::vector<MultilinearPolynomial> ineq;
      std::vector<MultilinearPolynomial> eq;
      const std::size_t k = reader.single_count("inequalities");
      for (std::size_t c = 0; c < k; ++c) {
        ineq.push_back(reader.terms(n, reader.single_count("constraint")));
      }
      const std::size_t l = reader.single_count("equalities");
      for (std::size_t c = 0; c < l; ++c) {
        eq.push_back(reader.terms(n, reader.single_count("constraint")));
      }
      inst = ProblemInstance::generic(n, f, ineq, eq);
      break;
    }
  }
  if (!reader.expect("end").empty()) reader.fail("unexpected values after 'end'");
  return inst;
}

inline void write_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_instance(inst, out);
  if (!out) throw Error("write to '" + path + "' failed");
}

inline ProblemInstance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_instance(in);
}

// ---------------------------------------------------------------------------
// Billionet-Soutif QKP benchmark layout: optional instance name, n, n linear
// coefficients, the n(n-1)/2 strictly upper quadratic coefficients row by
// row, constraint type (0 for <=), capacity, n weights. Whitespace and line
// breaks between numbers are free.

inline ProblemInstance read_billionet_soutif(std::istream& in) {
  struct Token {
    std::string text;
    std::size_t line;
  };
  std::vector<Token> tokens;
  {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back({tok, line_no});
    }
  }
  const std::size_t last_line = tokens.empty() ? 1 : tokens.back().line;
  std::size_t pos = 0;
  auto next_number = [&](std::string_view what) {
    if (pos >= tokens.size()) {
      throw ParseError(last_line, "unexpected end of file while reading " +
                                      std::string(what));
    }
    const auto& tok = tokens[pos++];
    double v = 0.0;
    const auto res =
        std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.text.data() + tok.text.size()) {
      throw ParseError(tok.line, "expected " + std::string(what) + ", found '" +
                                     tok.text + "'");
    }
    return std::pair<double, std::size_t>{v, tok.line};
  };

  // Leading instance reference, if present.
  if (!tokens.empty()) {
    double probe = 0.0;
    const auto& t = tokens.front().text;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), probe);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) ++pos;
  }

  const auto [n_raw, n_line] = next_number("variable count");
  if (!(n_raw >= 1.0) || std::nearbyint(n_raw) != n_raw) {
    throw ParseError(n_line, "variable count must be a positive integer");
  }
  const auto n = static_cast<std::size_t>(n_raw);

  std::vector<double> full(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    full[i * n + i] = next_number("linear coefficient").first;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = next_number("quadratic coefficient").first;
      full[i * n + j] = v;
      full[j * n + i] = v;
    }
  }
  const auto [type, type_line] = next_number("constraint type");
  if (type != 0.0) {
    throw ParseError(type_line, "only '<=' capacity constraints (type 0) are supported");
  }
  const double d = next_number("capacity").first;
  std::vector<double> w(n);
  for (auto& wi : w) wi = next_number("weight").first;
  if (pos != tokens.size()) {
    throw ParseError(tokens[pos].line, "trailing data after weights");
  }
  try {
    return ProblemInstance::quadratic_knapsack(std::move(full), std::move(w), d);
  } catch (const MalformedInstance& e) {
    throw ParseError(last_line, e.what());
  }
}

inline ProblemInstance read_billionet_soutif(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_billionet_soutif(in);
}

}  // namespace mfopt
