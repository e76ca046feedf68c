#include "supergeo/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "format.hpp"
#include "supergeo/error.hpp"

namespace supergeo {

using nlohmann::json;

SuperConnection Scenario::active_connection() const {
  if (connection) return *connection;
  return levi_civita(*metric, {});
}

std::size_t Scenario::sample_count() const {
  return samples ? *samples : default_sample_count();
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

class Reader {
 public:
  Reader(const json& value, std::string pointer)
      : value_(value), pointer_(std::move(pointer)) {}

  const json& value() const { return value_; }
  const std::string& pointer() const { return pointer_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(pointer_.empty() ? "/" : pointer_, what);
  }

  bool has(const std::string& key) const {
    return value_.is_object() && value_.contains(key);
  }

  Reader at(const std::string& key) const {
    if (!value_.is_object()) fail("expected an object");
    if (!value_.contains(key)) {
      throw InputError(pointer_ + "/" + escape_pointer(key), "missing required field");
    }
    return Reader(value_.at(key), pointer_ + "/" + escape_pointer(key));
  }

  Reader at(std::size_t index) const {
    return Reader(value_.at(index), pointer_ + "/" + std::to_string(index));
  }

  void require_object() const {
    if (!value_.is_object()) fail("expected an object");
  }

  std::size_t array_size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  long long integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<long long>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  std::vector<double> vector(std::size_t expected) const {
    const std::size_t size = array_size();
    if (size != expected) {
      fail("expected " + std::to_string(expected) + " entries, got " +
           std::to_string(size));
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < size; ++k) out.push_back(at(k).number());
    return out;
  }

 private:
  const json& value_;
  std::string pointer_;
};

std::vector<int> parse_label_list(const Reader& where, const std::string& key,
                                  const ChartSpec& chart, std::size_t expected) {
  std::vector<int> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = key.find(',', start);
    std::string part = key.substr(start, comma == std::string::npos ? std::string::npos
                                                                     : comma - start);
    part.erase(0, part.find_first_not_of(' '));
    part.erase(part.find_last_not_of(' ') + 1);
    try {
      out.push_back(CoordIndex::parse(part, chart).flat(chart));
    } catch (const Error& e) {
      throw InputError(where.pointer() + "/" + escape_pointer(key), e.what());
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.size() != expected) {
    throw InputError(where.pointer() + "/" + escape_pointer(key),
                     "expected " + std::to_string(expected) + " coordinate labels");
  }
  return out;
}

SuperFunction parse_text(const Reader& where, const std::string& key,
                         const std::string& text, const ChartSpec& chart) {
  try {
    return parse_superfunction(text, chart);
  } catch (const Error& e) {
    throw InputError(where.pointer() + "/" + escape_pointer(key), e.what());
  }
}

std::vector<std::pair<std::string, std::string>> read_text_table(const Reader& table) {
  table.require_object();
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, value] : table.value().items()) {
    out.emplace_back(key, Reader(value, table.pointer() + "/" + escape_pointer(key)).string());
  }
  return out;
}

void read_metric(const Reader& block, Scenario& s) {
  block.require_object();
  const long long parity = block.at("parity").integer();
  if (parity != 0 && parity != 1) block.at("parity").fail("parity must be 0 or 1");
  if (parity == 1 && s.chart.n != s.chart.q) {
    block.at("parity").fail("odd metric requires n=q");
  }
  if (parity == 0 && s.chart.q % 2 != 0) {
    block.at("parity").fail("even metric requires an even number of odd coordinates");
  }
  s.metric_parity = static_cast<int>(parity);
  const Reader table = block.at("coefficients");
  s.metric_texts = read_text_table(table);
  std::vector<SuperMetric::Entry> entries;
  for (const auto& [key, text] : s.metric_texts) {
    const auto idx = parse_label_list(table, key, s.chart, 2);
    entries.push_back({idx[0], idx[1], parse_text(table, key, text, s.chart)});
  }
  try {
    s.metric = SuperMetric::from_entries(s.chart, s.metric_parity.value(), entries);
  } catch (const Error& e) {
    throw InputError(table.pointer(), e.what());
  }
  const auto points = halton_points(s.box, s.sample_count());
  if (const double v = s.metric->supersymmetry_violation(points); v > 1e-12) {
    throw InputError(table.pointer(), "metric is not supersymmetric (violation " +
                                          detail::format_double(v) + ")");
  }
  const NondegeneracyReport nd = metric_nondegenerate(*s.metric, points);
  if (!nd.nondegenerate) {
    throw InputError(table.pointer(), "metric is degenerate on the chart box");
  }
}

void read_connection(const Reader& block, Scenario& s) {
  block.require_object();
  const Reader table = block.at("christoffel");
  s.connection_texts = read_text_table(table);
  const int N = s.chart.total();
  std::vector<SuperFunction> symbols(static_cast<std::size_t>(N * N * N),
                                     SuperFunction(s.chart));
  for (const auto& [key, text] : s.connection_texts) {
    const auto idx = parse_label_list(table, key, s.chart, 3);
    symbols[static_cast<std::size_t>((idx[0] * N + idx[1]) * N + idx[2])] =
        parse_text(table, key, text, s.chart);
  }
  try {
    s.connection = SuperConnection::symbolic(s.chart, std::move(symbols));
  } catch (const Error& e) {
    throw InputError(table.pointer(), e.what());
  }
}

Scenario from_json(const json& root) {
  const Reader doc(root, "");
  doc.require_object();
  Scenario s;
  if (doc.has("name")) s.name = doc.at("name").string();

  const Reader chart = doc.at("chart");
  chart.require_object();
  const long long n = chart.at("n").integer();
  const long long q = chart.at("q").integer();
  if (n < 1 || n > 64) chart.at("n").fail("n must be between 1 and 64");
  if (q < 1 || q > kMaxGenerators) chart.at("q").fail("q must be between 1 and 16");
  s.chart = ChartSpec{static_cast<int>(n), static_cast<int>(q), s.name};
  if (chart.has("box")) {
    const Reader box = chart.at("box");
    s.box.lower = box.at("lower").vector(static_cast<std::size_t>(n));
    s.box.upper = box.at("upper").vector(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < s.box.lower.size(); ++i) {
      if (!(s.box.lower[i] < s.box.upper[i])) box.fail("lower must be below upper");
    }
  } else {
    s.box = symmetric_box(static_cast<std::size_t>(n));
  }

  if (doc.has("seed")) {
    const long long seed = doc.at("seed").integer();
    if (seed < 0) doc.at("seed").fail("seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (doc.has("samples")) {
    const long long count = doc.at("samples").integer();
    if (count < 1) doc.at("samples").fail("samples must be positive");
    s.samples = static_cast<std::size_t>(count);
  }

  const bool has_metric = doc.has("metric");
  const bool has_connection = doc.has("connection");
  if (has_metric == has_connection) {
    doc.fail("exactly one of \"metric\" and \"connection\" is required");
  }
  if (has_metric) {
    read_metric(doc.at("metric"), s);
  } else {
    read_connection(doc.at("connection"), s);
  }

  if (doc.has("initial_conditions")) {
    const Reader list = doc.at("initial_conditions");
    for (std::size_t k = 0; k < list.array_size(); ++k) {
      const Reader ic = list.at(k);
      InitialCondition c;
      c.x0 = ic.at("x0").vector(static_cast<std::size_t>(n));
      c.v0 = ic.at("v0").vector(static_cast<std::size_t>(n));
      c.e0 = ic.at("e0").vector(static_cast<std::size_t>(q));
      c.w0 = ic.at("w0").vector(static_cast<std::size_t>(q));
      if (!s.box.contains(c.x0)) ic.at("x0").fail("initial point outside the chart box");
      s.initial_conditions.push_back(std::move(c));
    }
  }
  if (doc.has("integration")) {
    const Reader integ = doc.at("integration");
    integ.require_object();
    if (integ.has("dt")) s.dt = integ.at("dt").number();
    if (integ.has("t_end")) s.t_end = integ.at("t_end").number();
    if (!(s.dt > 0.0)) integ.at("dt").fail("dt must be positive");
    if (!(s.t_end > 0.0)) integ.at("t_end").fail("t_end must be positive");
  }
  if (doc.has("checks")) {
    const Reader list = doc.at("checks");
    for (std::size_t k = 0; k < list.array_size(); ++k) {
      s.checks.push_back(list.at(k).string());
    }
  }
  if (doc.has("tolerances")) {
    const Reader table = doc.at("tolerances");
    table.require_object();
    for (const auto& [key, value] : table.value().items()) {
      const double tol = Reader(value, table.pointer() + "/" + escape_pointer(key)).number();
      if (!(tol >= 0.0)) {
        throw InputError(table.pointer() + "/" + escape_pointer(key),
                         "tolerance must be non-negative");
      }
      s.tolerances[key] = tol;
    }
  }
  if (doc.has("frames")) {
    const Reader list = doc.at("frames");
    for (std::size_t k = 0; k < list.array_size(); ++k) {
      const Reader frame = list.at(k);
      const auto qq = static_cast<std::size_t>(q * q);
      if (frame.array_size() != qq) {
        frame.fail("frame needs " + std::to_string(qq) + " row-major entries");
      }
      std::vector<std::string> texts;
      std::vector<Expr> exprs;
      for (std::size_t e = 0; e < qq; ++e) {
        texts.push_back(frame.at(e).string());
        try {
          exprs.push_back(parse_expr(texts.back(), static_cast<int>(n)));
        } catch (const Error& err) {
          frame.at(e).fail(err.what());
        }
      }
      s.frame_texts.push_back(std::move(texts));
      s.frames.push_back(std::move(exprs));
    }
  }
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError("/", std::string("invalid JSON: ") + e.what());
  }
  return from_json(root);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("/", "cannot open scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string scenario_to_json(const Scenario& s) {
  json root = json::object();
  if (!s.name.empty()) root["name"] = s.name;
  root["chart"] = {{"n", s.chart.n},
                   {"q", s.chart.q},
                   {"box", {{"lower", s.box.lower}, {"upper", s.box.upper}}}};
  const auto table = [](const std::vector<std::pair<std::string, std::string>>& texts) {
    json t = json::object();
    for (const auto& [k, v] : texts) t[k] = v;
    return t;
  };
  if (s.metric_parity) {
    root["metric"] = {{"parity", *s.metric_parity}, {"coefficients", table(s.metric_texts)}};
  } else {
    root["connection"] = {{"christoffel", table(s.connection_texts)}};
  }
  json ics = json::array();
  for (const auto& ic : s.initial_conditions) {
    ics.push_back({{"x0", ic.x0}, {"v0", ic.v0}, {"e0", ic.e0}, {"w0", ic.w0}});
  }
  root["initial_conditions"] = ics;
  root["integration"] = {{"dt", s.dt}, {"t_end", s.t_end}};
  if (!s.checks.empty()) root["checks"] = s.checks;
  root["seed"] = s.seed;
  if (s.samples) root["samples"] = *s.samples;
  if (!s.tolerances.empty()) root["tolerances"] = s.tolerances;
  if (!s.frame_texts.empty()) root["frames"] = s.frame_texts;
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Random scenarios

namespace {

// Uniform doubles from the raw engine output, so that generated files do not
// depend on the standard library's distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1p-53;
    return lo + (hi - lo) * u;
  }
  int index(int count) {
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(count));
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed * 0x9E3779B97F4A7C15ULL + stream;
}

double round4(double v) {
  const double r = std::round(v * 1e4) / 1e4;
  return r == 0.0 ? 0.0 : r;
}

struct Term {
  double coefficient;
  std::string monomial;  // empty for the constant
};

std::string join(const std::vector<Term>& terms) {
  std::string out;
  for (const auto& t : terms) {
    if (t.coefficient == 0.0) continue;
    const double mag = std::abs(t.coefficient);
    if (out.empty()) {
      if (t.coefficient < 0) out += "-";
    } else {
      out += t.coefficient < 0 ? " - " : " + ";
    }
    if (t.monomial.empty()) {
      out += detail::format_double(mag);
    } else if (mag == 1.0) {
      out += t.monomial;
    } else {
      out += detail::format_double(mag) + "*" + t.monomial;
    }
  }
  return out;
}

// Polynomial of degree <= 2 in x with sum |c| <= bound, so |p| <= bound on
// [-1, 1]^n.
std::vector<Term> polynomial(Rng& rng, int n, double bound) {
  std::vector<Term> terms;
  const int i = rng.index(n) + 1;
  const int j = rng.index(n) + 1;
  const std::string xi = "x" + std::to_string(i);
  const std::string xj = "x" + std::to_string(j);
  terms.push_back({rng.uniform(-1, 1), ""});
  terms.push_back({rng.uniform(-1, 1), xi});
  terms.push_back({rng.uniform(-1, 1), i == j ? xi + "^2" : xi + "*" + xj});
  double total = 0.0;
  for (const auto& t : terms) total += std::abs(t.coefficient);
  for (auto& t : terms) {
    // truncate toward zero so rounding never exceeds the bound
    const double c = t.coefficient / total * bound;
    t.coefficient = std::trunc(c * 1e4) / 1e4;
    if (t.coefficient == 0.0) t.coefficient = 0.0;
  }
  return terms;
}

std::string generator_label(int a) { return "e[" + std::to_string(a) + "]"; }
std::string generator_pair(int a, int b) {
  return "e[" + std::to_string(std::min(a, b)) + "," + std::to_string(std::max(a, b)) + "]";
}

// (poly)*e[...] for an odd entry.
std::string odd_text(Rng& rng, int n, double scale, const std::string& generator) {
  const std::string p = join(polynomial(rng, n, scale));
  if (p.empty()) return "";
  return "(" + p + ")*" + generator;
}

void append(std::string& text, const std::string& more) {
  if (more.empty()) return;
  if (text.empty()) {
    text = more;
  } else if (more[0] == '-') {
    text += " - " + more.substr(1);
  } else {
    text += " + " + more;
  }
}

std::string x_label(int i) { return "x" + std::to_string(i); }
std::string e_label(int a) { return "e" + std::to_string(a); }

}  // namespace

std::vector<InitialCondition> random_initial_conditions(int n, int q, std::uint64_t seed,
                                                        std::size_t count) {
  Rng rng(stream_seed(seed, 2));
  std::vector<InitialCondition> out;
  for (std::size_t k = 0; k < count; ++k) {
    InitialCondition ic;
    for (int i = 0; i < n; ++i) ic.x0.push_back(round4(rng.uniform(-0.3, 0.3)));
    for (int i = 0; i < n; ++i) ic.v0.push_back(round4(rng.uniform(-0.5, 0.5)));
    for (int a = 0; a < q; ++a) ic.e0.push_back(round4(rng.uniform(-1, 1)));
    for (int a = 0; a < q; ++a) ic.w0.push_back(round4(rng.uniform(-1, 1)));
    out.push_back(std::move(ic));
  }
  return out;
}

std::vector<std::string> random_frame(int n, int q, std::uint64_t seed) {
  Rng rng(stream_seed(seed, 3));
  // row sums of |G - I| stay below 1/2 on the box
  const double bound = 0.5 / q;
  std::vector<std::string> out;
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      std::vector<Term> p = polynomial(rng, n, bound);
      if (p[1].coefficient == 0.0) p[1].coefficient = bound / 2;  // keep x-dependence
      if (a == b) p[0].coefficient = round4(p[0].coefficient + 1.0);
      const std::string text = join(p);
      out.push_back(text.empty() ? "0" : text);
    }
  }
  return out;
}

Scenario random_scenario(int n, int q, int parity, std::uint64_t seed,
                         const RandomScenarioOptions& options) {
  ChartSpec chart{n, q, ""};
  chart.validate();
  if (parity != 0 && parity != 1) throw DomainError("parity must be 0 or 1");
  if (parity == 1 && n != q) throw DomainError("odd metric requires n=q");
  if (parity == 0 && q % 2 != 0) {
    throw DomainError("even metric requires an even number of odd coordinates");
  }
  const double scale = options.scale;
  if (scale < 0.0 || scale * (n + q) >= 1.0) {
    throw DomainError("perturbation scale must lie in [0, 1/(n+q))");
  }

  Rng rng(stream_seed(seed, 1));
  std::vector<std::pair<std::string, std::string>> texts;
  const auto put = [&](const std::string& a, const std::string& b, const std::string& text) {
    if (!text.empty()) texts.emplace_back(a + "," + b, text);
  };
  const auto even_entry = [&](bool unit, bool with_soul) {
    std::vector<Term> p = polynomial(rng, n, scale);
    if (unit) p[0].coefficient = round4(p[0].coefficient + 1.0);
    std::string text = join(p);
    if (with_soul && q >= 2 && scale > 0.0) {
      const int a = rng.index(q) + 1;
      int b = rng.index(q - 1) + 1;
      if (b >= a) ++b;
      const double c = round4(rng.uniform(-scale, scale));
      if (c != 0.0) {
        append(text, (c < 0 ? "-" : "") + detail::format_double(std::abs(c)) + "*" +
                         generator_pair(a, b));
      }
    }
    return text;
  };

  if (parity == 0) {
    for (int i = 1; i <= n; ++i) {
      for (int j = i; j <= n; ++j) put(x_label(i), x_label(j), even_entry(i == j, true));
    }
    for (int a = 1; a <= q; ++a) {
      for (int b = a + 1; b <= q; ++b) {
        put(e_label(a), e_label(b), even_entry(a % 2 == 1 && b == a + 1, true));
      }
    }
    for (int i = 1; i <= n; ++i) {
      for (int a = 1; a <= q; ++a) {
        put(x_label(i), e_label(a), odd_text(rng, n, scale, generator_label(rng.index(q) + 1)));
      }
    }
  } else {
    for (int i = 1; i <= n; ++i) {
      for (int j = i; j <= n; ++j) {
        put(x_label(i), x_label(j), odd_text(rng, n, scale, generator_label(rng.index(q) + 1)));
      }
    }
    for (int i = 1; i <= n; ++i) {
      for (int a = 1; a <= q; ++a) put(x_label(i), e_label(a), even_entry(i == a, true));
    }
    for (int a = 1; a <= q; ++a) {
      for (int b = a + 1; b <= q; ++b) {
        put(e_label(a), e_label(b), odd_text(rng, n, scale, generator_label(rng.index(q) + 1)));
      }
    }
  }

  json root = json::object();
  root["name"] = "random-n" + std::to_string(n) + "-q" + std::to_string(q) + "-g" +
                 std::to_string(parity) + "-seed" + std::to_string(seed);
  root["chart"] = {{"n", n}, {"q", q},
                   {"box", {{"lower", std::vector<double>(static_cast<std::size_t>(n), -1.0)},
                            {"upper", std::vector<double>(static_cast<std::size_t>(n), 1.0)}}}};
  json coefficients = json::object();
  for (const auto& [k, v] : texts) coefficients[k] = v;
  root["metric"] = {{"parity", parity}, {"coefficients", coefficients}};
  json ics = json::array();
  for (const auto& ic : random_initial_conditions(n, q, seed, options.initial_conditions)) {
    ics.push_back({{"x0", ic.x0}, {"v0", ic.v0}, {"e0", ic.e0}, {"w0", ic.w0}});
  }
  root["initial_conditions"] = ics;
  root["integration"] = {{"dt", 1e-3}, {"t_end", 1.0}};
  root["seed"] = seed;
  json frames = json::array();
  for (std::size_t k = 0; k < options.frames; ++k) {
    frames.push_back(random_frame(n, q, stream_seed(seed, 10 + k)));
  }
  root["frames"] = frames;
  return from_json(root);
}

}  // namespace supergeo
