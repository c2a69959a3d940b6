// orthomix command-line front end.
//
// Exit codes: 0 success, 1 usage / invalid parameters, 2 capacity,
// 3 verification failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "orthomix/orthomix.hpp"
#include "orthomix/verify.hpp"

namespace om = orthomix;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitCapacity = 2;
constexpr int kExitVerify = 3;
constexpr int kSchemaVersion = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Report model: header block + named tables, rendered as CSV or JSON.

struct Exact {
  om::Rational value;
};
using Cell = std::variant<std::monostate, long long, double, std::string, Exact, bool>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, Cell>> meta;
  std::vector<Table> tables;
};

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(double v) const { return fmt_double(v); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    std::string operator()(const Exact& e) const { return om::rational_string(e.value); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  };
  return std::visit(V{}, c);
}

ordered_json json_cell(const Cell& c) {
  struct V {
    ordered_json operator()(std::monostate) const { return nullptr; }
    ordered_json operator()(long long v) const { return v; }
    ordered_json operator()(double v) const {
      if (!std::isfinite(v)) return fmt_double(v);
      return v;
    }
    ordered_json operator()(const std::string& s) const { return s; }
    ordered_json operator()(const Exact& e) const { return om::rational_string(e.value); }
    ordered_json operator()(bool b) const { return b; }
  };
  return std::visit(V{}, c);
}

void write_csv(std::ostream& os, const Report& r) {
  os << "# orthomix " << om::kVersion << "\n# command: " << r.command << "\n";
  for (const auto& [k, v] : r.config) os << "# config." << k << ": " << v << "\n";
  for (const auto& [k, v] : r.meta) os << "# meta." << k << ": " << csv_cell(v) << "\n";
  bool first = true;
  for (const auto& t : r.tables) {
    if (!first) os << "\n";
    first = false;
    os << "# table: " << t.name << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << "\n";
    }
  }
}

void write_json(std::ostream& os, const Report& r) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["artifact"] = "orthomix";
  j["version"] = om::kVersion;
  j["command"] = r.command;
  j["config"] = ordered_json::object();
  for (const auto& [k, v] : r.config) j["config"][k] = v;
  j["meta"] = ordered_json::object();
  for (const auto& [k, v] : r.meta) j["meta"][k] = json_cell(v);
  j["tables"] = ordered_json::object();
  for (const auto& t : r.tables) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json o = ordered_json::object();
      for (std::size_t i = 0; i < row.size(); ++i) o[t.columns[i]] = json_cell(row[i]);
      rows.push_back(std::move(o));
    }
    j["tables"][t.name] = {{"columns", t.columns}, {"rows", std::move(rows)}};
  }
  os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Flags

struct Flags {
  std::string chain;
  int N = -1;
  int d = -1;
  std::string alpha, p, m, caps, A_file, sigma_file, start, out, format = "csv";
  int s = -1;
  std::uint64_t seed = 1;
  bool exact = false;
};

void add_shared(CLI::App* sub, Flags& f) {
  sub->add_option("--chain", f.chain,
                  "polya-level | polya-downup | polya-updown | moran | hubbell | gibbs-dm | bl-level | bl-downup | "
                  "bl-updown | ehrenfest | normal-ar");
  sub->add_option("--N", f.N, "population size");
  sub->add_option("--d", f.d, "number of types");
  sub->add_option("--alpha", f.alpha, "Dirichlet parameters, e.g. 0.2x5 or 1/2,1,3/2");
  sub->add_option("--p", f.p, "type probabilities, e.g. 0.2x5");
  sub->add_option("--m", f.m, "mutation / immigration rate");
  sub->add_option("--s", f.s, "number of individuals replaced per step");
  sub->add_option("--l", f.caps, "urn capacities l_1,...,l_d");
  sub->add_option("--A", f.A_file, "autoregression matrix file");
  sub->add_option("--sigma-file", f.sigma_file, "stationary covariance file");
  sub->add_option("--start", f.start, "Ne<k>, explicit counts a,b,..., or zero");
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--out", f.out, "output path (default stdout)");
  sub->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--exact", f.exact, "exact rational evaluation");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t"), e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

/// "a,b,c" with "vxk" expanding to k copies of v.
std::vector<std::string> expand_list(const std::string& text, const char* what) {
  std::vector<std::string> out;
  for (const auto& tok : split(text, ',')) {
    if (tok.empty()) throw UsageError(std::string("empty entry in --") + what);
    const auto x = tok.find('x');
    if (x == std::string::npos) {
      out.push_back(tok);
      continue;
    }
    const std::string count = tok.substr(x + 1);
    if (count.empty() || count.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError(std::string("bad repeat in --") + what + ": " + tok);
    for (int k = std::stoi(count); k > 0; --k) out.push_back(tok.substr(0, x));
  }
  return out;
}

int parse_int(const std::string& s, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw UsageError(std::string("expected an integer for ") + what + ": " + s);
  return v;
}

template <class T>
std::vector<T> broadcast(std::vector<T> v, int d, const char* what) {
  if (d > 0 && v.size() == 1 && d > 1) v.assign(static_cast<std::size_t>(d), v[0]);
  if (d > 0 && static_cast<int>(v.size()) != d)
    throw UsageError(std::string("--") + what + " has " + std::to_string(v.size()) + " entries but --d is " +
                     std::to_string(d));
  return v;
}

std::vector<om::Rational> rationals(const std::string& text, int d, const char* what) {
  std::vector<om::Rational> v;
  for (const auto& t : expand_list(text, what)) v.push_back(om::parse_rational(t));
  return broadcast(std::move(v), d, what);
}

om::Caps int_list(const std::string& text, int d, const char* what) {
  om::Caps v;
  for (const auto& t : expand_list(text, what)) v.push_back(parse_int(t, what));
  return broadcast(std::move(v), d, what);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open matrix file " + path);
  long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) throw UsageError(path + ": first line must be 'rows cols'");
  Eigen::MatrixXd M(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j)
      if (!(in >> M(i, j))) throw UsageError(path + ": expected " + std::to_string(rows * cols) + " numbers");
  double extra = 0;
  if (in >> extra) throw UsageError(path + ": trailing data");
  return M;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

om::ChainSpec build_spec(const Flags& f) {
  const std::string& c = f.chain;
  require(!c.empty(), "--chain is required");
  if (c == "normal-ar") {
    require(!f.A_file.empty() && !f.sigma_file.empty(), "normal-ar needs --A and --sigma-file");
    om::ChainSpec spec = om::NormalAR{read_matrix(f.A_file), read_matrix(f.sigma_file)};
    om::validate(spec);
    return spec;
  }
  require(f.N >= 0, "--N is required");
  auto need_s = [&] {
    require(f.s >= 0, "--s is required for " + c);
    return f.s;
  };
  auto need = [&](const std::string& v, const char* name) {
    require(!v.empty(), std::string("--") + name + " is required for " + c);
    return v;
  };
  om::ChainSpec spec;
  if (c == "polya-level" || c == "polya-downup" || c == "polya-updown" || c == "gibbs-dm") {
    auto a = rationals(need(f.alpha, "alpha"), f.d, "alpha");
    if (c == "polya-level") spec = om::PolyaLevel{f.N, a, need_s()};
    else if (c == "polya-downup") spec = om::PolyaDownUp{f.N, a, need_s()};
    else if (c == "polya-updown") spec = om::PolyaUpDown{f.N, a, need_s()};
    else spec = om::GibbsDM{f.N, a};
  } else if (c == "moran" || c == "hubbell") {
    if (!f.alpha.empty()) {
      require(f.m.empty() && f.p.empty(), "give either --alpha or --m with --p, not both");
      auto a = rationals(f.alpha, f.d, "alpha");
      if (c == "moran") spec = om::Moran::from_alpha(f.N, a);
      else spec = om::Hubbell::from_alpha(f.N, a);
    } else {
      const auto m = om::parse_rational(need(f.m, "m"));
      auto p = rationals(need(f.p, "p"), f.d, "p");
      if (c == "moran") spec = om::Moran{f.N, m, p};
      else spec = om::Hubbell{f.N, m, p};
    }
  } else if (c == "bl-level" || c == "bl-downup" || c == "bl-updown") {
    auto l = int_list(need(f.caps, "l"), f.d, "l");
    if (c == "bl-level") spec = om::BLLevel{l, f.N, need_s()};
    else if (c == "bl-downup") spec = om::BLDownUp{l, f.N, need_s()};
    else spec = om::BLUpDown{l, f.N, need_s()};
  } else if (c == "ehrenfest") {
    spec = om::Ehrenfest{f.N, rationals(need(f.p, "p"), f.d, "p"), need_s()};
  } else {
    throw UsageError("unknown chain: " + c);
  }
  om::validate(spec);
  return spec;
}

om::Composition parse_start(const om::ChainSpec& spec, const std::string& text) {
  const int N = om::population(spec), d = om::dimension(spec);
  om::Composition x;
  if (text.empty() || text == "Ne1") {
    x = om::Composition::corner(N, d, 0);
  } else if (text.rfind("Ne", 0) == 0) {
    const int k = parse_int(text.substr(2), "--start");
    require(1 <= k && k <= d, "--start Ne<k> needs 1 <= k <= d");
    x = om::Composition::corner(N, d, k - 1);
  } else {
    std::vector<int> counts;
    for (const auto& t : split(text, ',')) counts.push_back(parse_int(t, "--start"));
    x = om::Composition(counts);
  }
  require(om::in_state_space(spec, x), "start " + x.to_string() + " is not a state of " + om::chain_name(spec));
  return x;
}

Eigen::VectorXd parse_vector_start(const om::ChainSpec& spec, const std::string& text) {
  const auto dim = om::dimension(spec);
  if (text.empty() || text == "zero" || text == "0") return Eigen::VectorXd::Zero(dim);
  const auto parts = split(text, ',');
  require(static_cast<int>(parts.size()) == dim, "--start needs " + std::to_string(dim) + " coordinates");
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = std::stod(parts[static_cast<std::size_t>(i)]);
  return x;
}

std::string join_rationals(const std::vector<om::Rational>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + om::rational_string(v[i]);
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

/// Resolved chain parameters for the header block.
void echo_spec(Report& r, const om::ChainSpec& spec) {
  r.config.emplace_back("chain", om::chain_name(spec));
  std::visit(
      [&](const auto& c) {
        using F = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<F, om::NormalAR>) {
          r.config.emplace_back("d", std::to_string(c.A.rows()));
        } else {
          r.config.emplace_back("N", std::to_string(c.N));
          r.config.emplace_back("d", std::to_string(om::dimension(spec)));
          if constexpr (std::is_same_v<F, om::Moran> || std::is_same_v<F, om::Hubbell>) {
            r.config.emplace_back("m", om::rational_string(c.m));
            r.config.emplace_back("p", join_rationals(c.p));
          }
          if constexpr (std::is_same_v<F, om::Ehrenfest>) r.config.emplace_back("p", join_rationals(c.p));
          if constexpr (om::is_bl_family_v<F>) r.config.emplace_back("l", join_ints(c.l));
          if constexpr (om::is_polya_family_v<F>) r.config.emplace_back("alpha", join_rationals(om::dm_alpha(spec)));
          if constexpr (requires { c.s; }) r.config.emplace_back("s", std::to_string(c.s));
        }
      },
      spec);
}

void emit(const Flags& f, const Report& r) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw UsageError("cannot write " + f.out);
    os = &file;
  }
  if (f.format == "json") write_json(*os, r);
  else write_csv(*os, r);
}

// ---------------------------------------------------------------------------
// Commands

void cmd_spectrum(const Flags& f) {
  const auto spec = build_spec(f);
  Report r{"spectrum", {}, {}, {}};
  echo_spec(r, spec);
  r.config.emplace_back("exact", f.exact ? "true" : "false");
  if (!om::is_finite(spec)) {
    const auto sp = om::normal_ar_spectrum(std::get<om::NormalAR>(spec));
    Table t{"spectrum", {"i", "lambda"}, {}};
    for (Eigen::Index i = 0; i < sp.lambdas.size(); ++i)
      t.rows.push_back({static_cast<long long>(i + 1), sp.lambdas[i]});
    r.tables.push_back(std::move(t));
    emit(f, r);
    return;
  }
  Table t{"spectrum", {"n", "beta", "beta_decimal", "multiplicity"}, {}};
  const bool exact = f.exact || om::population(spec) <= 1000;
  if (exact) {
    for (const auto& term : om::eigenvalues(spec))
      t.rows.push_back({static_cast<long long>(term.degree), Exact{term.beta}, term.beta.get_d(),
                        term.multiplicity.get_str()});
  } else {
    const auto v = om::eigenvalue_values(spec);
    for (int n = 0; n < static_cast<int>(v.size()); ++n) {
      const auto mult = om::multiplicity(spec, n);
      if (mult == 0) continue;
      t.rows.push_back({static_cast<long long>(n), std::monostate{}, v[static_cast<std::size_t>(n)], mult.get_str()});
    }
  }
  r.tables.push_back(std::move(t));
  emit(f, r);
}

struct ChisqFlags {
  long l_max = 100;
  long stride = 1;
  std::optional<double> eps;
  std::optional<double> c;
  bool oracle = false;
};

void add_bound_meta(Report& r, const om::MixingBound& b) {
  r.meta.emplace_back("bound.c", b.c);
  r.meta.emplace_back("bound.upper", b.upper);
  r.meta.emplace_back("bound.upper_level", b.upper_level);
  r.meta.emplace_back("bound.upper_applies", b.upper_applies);
  r.meta.emplace_back("bound.lower", b.lower);
  r.meta.emplace_back("bound.lower_level", b.lower_level);
  r.meta.emplace_back("bound.lower_applies", b.lower_applies);
}

void cmd_chisq(const Flags& f, const ChisqFlags& cf) {
  require(cf.l_max >= 0, "--l-max must be >= 0");
  require(cf.stride >= 1, "--stride must be >= 1");
  if (cf.eps) require(*cf.eps > 0, "--eps must be positive");
  const auto spec = build_spec(f);
  Report r{"chisq", {}, {}, {}};
  echo_spec(r, spec);
  r.config.emplace_back("exact", f.exact ? "true" : "false");
  r.config.emplace_back("oracle", cf.oracle ? "true" : "false");
  r.config.emplace_back("l_max", std::to_string(cf.l_max));
  r.config.emplace_back("stride", std::to_string(cf.stride));
  Table t{"curve", {"l", "chisq", "tv_upper", "chisq_exact"}, {}};

  if (!om::is_finite(spec)) {
    require(!f.exact && !cf.oracle, "--exact and --oracle need a finite family");
    const auto& ar = std::get<om::NormalAR>(spec);
    const auto x = parse_vector_start(spec, f.start);
    r.config.emplace_back("start", f.start.empty() ? "zero" : f.start);
    const om::NormalARChiSquare chi(ar.A, ar.Sigma, x);
    if (cf.eps) r.meta.emplace_back("steps_to_epsilon", static_cast<long long>(om::steps_to_epsilon(chi, *cf.eps)));
    if (cf.c) add_bound_meta(r, om::mixing_bounds_normal_ar(ar.A, ar.Sigma, *cf.c));
    for (long l = 0; l <= cf.l_max; l += cf.stride) {
      const double v = chi(l);
      t.rows.push_back({static_cast<long long>(l), v, om::tv_upper(v), std::monostate{}});
    }
    r.tables.push_back(std::move(t));
    emit(f, r);
    return;
  }

  const auto x = parse_start(spec, f.start);
  r.config.emplace_back("start", x.to_string());
  if (cf.c) {
    try {
      add_bound_meta(r, om::mixing_bounds(spec, x, *cf.c));
      r.meta.emplace_back("asymptotic_threshold", om::asymptotic_threshold(spec, x));
    } catch (const om::DomainError& e) {
      r.meta.emplace_back("bound", std::string("unavailable: ") + e.what());
    }
  }
  if (cf.oracle) {
    require(cf.l_max <= 100000, "--oracle limited to l_max <= 100000");
    const auto bf = om::brute_force_curve(spec, x, static_cast<int>(cf.l_max));
    if (cf.eps) {
      long hit = -1;
      for (long l = 0; l <= cf.l_max && hit < 0; ++l)
        if (bf.chisq[static_cast<std::size_t>(l)].get_d() <= *cf.eps) hit = l;
      r.meta.emplace_back("steps_to_epsilon", hit < 0 ? Cell{std::string("not reached")} : Cell{hit * 1LL});
    }
    for (long l = 0; l <= cf.l_max; l += cf.stride) {
      const auto& q = bf.chisq[static_cast<std::size_t>(l)];
      t.rows.push_back({static_cast<long long>(l), q.get_d(), om::tv_upper(q.get_d()), Exact{q}});
    }
  } else {
    const om::ChiSquareEvaluator ev(spec, x);
    if (cf.eps) r.meta.emplace_back("steps_to_epsilon", static_cast<long long>(om::steps_to_epsilon(ev, *cf.eps)));
    for (long l = 0; l <= cf.l_max; l += cf.stride) {
      if (f.exact) {
        const auto q = om::chisq_exact_rational(spec, x, l);
        t.rows.push_back({static_cast<long long>(l), q.get_d(), om::tv_upper(q.get_d()), Exact{q}});
      } else {
        const double v = ev(l);
        t.rows.push_back({static_cast<long long>(l), v, om::tv_upper(v), std::monostate{}});
      }
    }
  }
  r.tables.push_back(std::move(t));
  emit(f, r);
}

struct SimFlags {
  long replicas = 5000;
  long steps = 1000;
  std::string checkpoints;
  int bins = 16;
  std::string stat = "watterson";
};

std::vector<long> resolve_checkpoints(const SimFlags& sf) {
  std::set<long> cps;
  if (sf.checkpoints.empty()) {
    for (long c : {1L, 10L, 50L, 100L, 200L, 500L, 1000L})
      if (c <= sf.steps) cps.insert(c);
    cps.insert(sf.steps);
  } else {
    for (const auto& t : split(sf.checkpoints, ',')) {
      const long c = parse_int(t, "--checkpoints");
      require(0 <= c && c <= sf.steps, "checkpoints must lie in [0, steps]");
      cps.insert(c);
    }
  }
  return {cps.begin(), cps.end()};
}

int bin_of(double v, double lo, double hi, int bins) {
  const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

void cmd_simulate(const Flags& f, const SimFlags& sf) {
  require(sf.replicas >= 1, "--replicas must be >= 1");
  require(sf.steps >= 0, "--steps must be >= 0");
  require(sf.bins >= 1, "--bins must be >= 1");
  const auto spec = build_spec(f);
  const auto cps = resolve_checkpoints(sf);
  Report r{"simulate", {}, {}, {}};
  echo_spec(r, spec);
  r.config.emplace_back("seed", std::to_string(f.seed));
  r.config.emplace_back("replicas", std::to_string(sf.replicas));
  r.config.emplace_back("steps", std::to_string(sf.steps));
  std::string cp_text;
  for (std::size_t i = 0; i < cps.size(); ++i) cp_text += (i ? "," : "") + std::to_string(cps[i]);
  r.config.emplace_back("checkpoints", cp_text);
  const om::ChainSampler sampler(spec);
  const double R = static_cast<double>(sf.replicas);

  if (!om::is_finite(spec)) {
    // Histogram of the first coordinate on +-4 stationary sd.
    const auto& ar = std::get<om::NormalAR>(spec);
    const auto x0 = parse_vector_start(spec, f.start);
    r.config.emplace_back("start", f.start.empty() ? "zero" : f.start);
    r.config.emplace_back("stat", "x1");
    r.config.emplace_back("bins", std::to_string(sf.bins));
    const double sd = std::sqrt(ar.Sigma(0, 0)), lo = -4 * sd, hi = 4 * sd;
    std::vector<std::vector<long>> counts(cps.size(), std::vector<long>(static_cast<std::size_t>(sf.bins), 0));
    for (long rep = 0; rep < sf.replicas; ++rep) {
      Eigen::VectorXd x = x0;
      std::size_t next = 0;
      for (long t = 0; t <= sf.steps && next < cps.size(); ++t) {
        if (t > 0) {
          om::RandomStream rng(f.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t));
          x = sampler.step_vector(x, rng);
        }
        if (cps[next] == t) ++counts[next++][static_cast<std::size_t>(bin_of(x[0], lo, hi, sf.bins))];
      }
    }
    auto cdf = [&](double v) { return 0.5 * std::erfc(-v / (sd * std::sqrt(2.0))); };
    Table t{"histogram", {"step", "bin", "lo", "hi", "count", "frequency", "stationary", "se"}, {}};
    for (std::size_t c = 0; c < cps.size(); ++c) {
      for (int b = 0; b < sf.bins; ++b) {
        const double a = lo + (hi - lo) * b / sf.bins, e = lo + (hi - lo) * (b + 1) / sf.bins;
        const double q = (b == sf.bins - 1 ? 1.0 : cdf(e)) - (b == 0 ? 0.0 : cdf(a));
        const long n = counts[c][static_cast<std::size_t>(b)];
        t.rows.push_back({static_cast<long long>(cps[c]), static_cast<long long>(b), a, e, static_cast<long long>(n),
                          n / R, q, std::sqrt(q * (1 - q) / R)});
      }
    }
    r.tables.push_back(std::move(t));
    emit(f, r);
    return;
  }

  const auto x0 = parse_start(spec, f.start);
  r.config.emplace_back("start", x0.to_string());
  r.config.emplace_back("stat", sf.stat);
  const bool have_law = om::state_space_size(spec) <= 2e5;

  if (sf.stat == "counts") {
    std::vector<std::map<om::Composition, long>> seen(cps.size());
    for (long rep = 0; rep < sf.replicas; ++rep) {
      om::Composition x = x0;
      std::size_t next = 0;
      for (long t = 0; t <= sf.steps && next < cps.size(); ++t) {
        if (t > 0) {
          om::RandomStream rng(f.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t));
          x = sampler.step(x, rng);
        }
        if (cps[next] == t) ++seen[next++][x];
      }
    }
    Table t{"counts", {"step", "state", "count", "frequency", "stationary"}, {}};
    for (std::size_t c = 0; c < cps.size(); ++c)
      for (const auto& [x, n] : seen[c])
        t.rows.push_back({static_cast<long long>(cps[c]), x.to_string(), static_cast<long long>(n), n / R,
                          have_law ? Cell{om::stationary_pmf(spec, x).get_d()} : Cell{}});
    r.tables.push_back(std::move(t));
    emit(f, r);
    return;
  }
  require(sf.stat == "watterson", "--stat must be watterson or counts");

  const int d = om::dimension(spec);
  const double lo = 1.0 / d, hi = 1.0;
  r.config.emplace_back("bins", std::to_string(sf.bins));
  std::vector<std::vector<long>> counts(cps.size(), std::vector<long>(static_cast<std::size_t>(sf.bins), 0));
  for (long rep = 0; rep < sf.replicas; ++rep) {
    om::Composition x = x0;
    std::size_t next = 0;
    for (long t = 0; t <= sf.steps && next < cps.size(); ++t) {
      if (t > 0) {
        om::RandomStream rng(f.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(t));
        x = sampler.step(x, rng);
      }
      if (cps[next] == t) ++counts[next++][static_cast<std::size_t>(bin_of(om::watterson(x), lo, hi, sf.bins))];
    }
  }
  std::vector<double> law(static_cast<std::size_t>(sf.bins), 0.0);
  if (have_law)
    for (const auto& y : om::state_space(spec))
      law[static_cast<std::size_t>(bin_of(om::watterson(y), lo, hi, sf.bins))] += om::stationary_pmf(spec, y).get_d();
  Table t{"histogram", {"step", "bin", "lo", "hi", "count", "frequency", "stationary", "se"}, {}};
  for (std::size_t c = 0; c < cps.size(); ++c) {
    for (int b = 0; b < sf.bins; ++b) {
      const double q = law[static_cast<std::size_t>(b)];
      const long n = counts[c][static_cast<std::size_t>(b)];
      t.rows.push_back({static_cast<long long>(cps[c]), static_cast<long long>(b), lo + (hi - lo) * b / sf.bins,
                        lo + (hi - lo) * (b + 1) / sf.bins, static_cast<long long>(n), n / R,
                        have_law ? Cell{q} : Cell{}, have_law ? Cell{std::sqrt(q * (1 - q) / R)} : Cell{}});
    }
  }
  r.tables.push_back(std::move(t));
  emit(f, r);
}

struct VerifyFlags {
  std::string scope = "all";
  std::string perturb;
  int l_max = 10;
};

/// Returns the process exit code.
int cmd_verify(Flags f, const VerifyFlags& vf) {
  static const std::set<std::string> scopes{"orthogonality", "eigenfunctions", "kernels", "balance", "oracle", "all"};
  require(scopes.count(vf.scope) > 0, "unknown verify scope: " + vf.scope);
  std::vector<om::ChainSpec> specs;
  Report r{"verify", {}, {}, {}};
  r.config.emplace_back("scope", vf.scope);
  if (!f.chain.empty()) {
    specs.push_back(build_spec(f));
    echo_spec(r, specs.back());
  } else {
    if (f.N < 0) f.N = 3;
    if (f.d < 0) f.d = 3;
    specs = om::verification_specs(f.N, f.d);
    r.config.emplace_back("N", std::to_string(f.N));
    r.config.emplace_back("d", std::to_string(f.d));
  }
  om::EigenCheckOptions opt;
  if (!vf.perturb.empty()) {
    const auto parts = split(vf.perturb, ':');
    require(parts.size() == 2, "--perturb expects degree:offset");
    opt.perturb = std::make_pair(parse_int(parts[0], "--perturb"), om::parse_rational(parts[1]));
    r.config.emplace_back("perturb", vf.perturb);
  }
  auto want = [&](const char* s) { return vf.scope == "all" || vf.scope == s; };
  Table t{"checks", {"check", "chain", "passed", "detail"}, {}};
  const om::CheckResult* first_fail = nullptr;
  std::vector<om::CheckResult> results;
  for (const auto& spec : specs) {
    if (want("orthogonality")) results.push_back(om::check_orthogonality(spec));
    if (want("kernels")) results.push_back(om::check_kernels(spec));
    if (want("balance")) results.push_back(om::check_balance(spec));
    if (want("eigenfunctions")) results.push_back(om::check_eigenfunctions(spec, opt));
    if (want("oracle")) results.push_back(om::check_chisq_oracle(spec, vf.l_max));
  }
  bool all = true;
  for (const auto& c : results) {
    t.rows.push_back({c.check, c.chain, c.passed, c.detail});
    if (!c.passed && !first_fail) first_fail = &c;
    all = all && c.passed;
  }
  r.meta.emplace_back("checks", static_cast<long long>(results.size()));
  r.meta.emplace_back("passed", all);
  r.tables.push_back(std::move(t));
  emit(f, r);
  if (first_fail) {
    std::cerr << "verification failed: " << first_fail->check << " on " << first_fail->chain << ": "
              << first_fail->detail << "\n";
    return kExitVerify;
  }
  return 0;
}

struct ImageFlags {
  double delta = 100.0;
  double sigma = 0.5;
  std::string grid = "16x16";
  long l_max = 60;
};

void cmd_image_demo(const Flags& f, const ImageFlags& img) {
  require(img.delta >= 0, "--delta must be >= 0");
  require(img.sigma > 0, "--sigma must be > 0");
  const auto dims = split(img.grid, 'x');
  require(dims.size() == 2, "--grid expects RxC");
  const int rows = parse_int(dims[0], "--grid"), cols = parse_int(dims[1], "--grid");
  require(rows >= 1 && cols >= 1 && rows * cols <= 4096, "--grid must have between 1 and 4096 pixels");
  const auto model = om::image_gibbs_model(img.delta, img.sigma, rows, cols);
  const auto sp = om::normal_ar_spectrum(model.A, model.Sigma);
  const auto b0 = om::mixing_bounds_normal_ar(model.A, model.Sigma, 0.0);
  Report r{"image-demo", {}, {}, {}};
  r.config.emplace_back("delta", fmt_double(img.delta));
  r.config.emplace_back("sigma", fmt_double(img.sigma));
  r.config.emplace_back("grid", std::to_string(rows) + "x" + std::to_string(cols));
  r.config.emplace_back("l_max", std::to_string(img.l_max));
  r.config.emplace_back("start", "zero");
  const double lam = std::abs(sp.lambdas[0]);
  r.meta.emplace_back("lambda1", lam);
  r.meta.emplace_back("threshold_intercept", b0.upper);
  r.meta.emplace_back("threshold_slope", std::isinf(b0.rate) ? 0.0 : 1.0 / b0.rate);
  r.meta.emplace_back("upper_needs_c_at_least", std::log(rows * cols / 2.0));
  r.meta.emplace_back("mini_steps_per_step", static_cast<long long>(2 * rows * cols));
  r.meta.emplace_back("mini_steps_at_l8", static_cast<long long>(8 * 2 * rows * cols));
  r.meta.emplace_back("mini_steps_note", std::string("one step of the blocked sampler = 2 sweeps over all pixels"));
  const om::NormalARChiSquare chi(model.A, model.Sigma, Eigen::VectorXd::Zero(rows * cols));
  Table curve{"curve", {"l", "chisq", "tv_upper", "chisq_exact"}, {}};
  for (long l = 0; l <= img.l_max; ++l) {
    const double v = chi(l);
    curve.rows.push_back({static_cast<long long>(l), v, om::tv_upper(v), std::monostate{}});
  }
  Table spec_t{"spectrum", {"i", "lambda"}, {}};
  for (Eigen::Index i = 0; i < sp.lambdas.size(); ++i)
    spec_t.rows.push_back({static_cast<long long>(i + 1), sp.lambdas[i]});
  r.tables.push_back(std::move(curve));
  r.tables.push_back(std::move(spec_t));
  emit(f, r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact chi-square convergence for multivariate urn and Gibbs chains"};
  app.set_version_flag("--version", std::string(om::kVersion));
  app.require_subcommand(1);
  Flags f;

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues and multiplicities");
  add_shared(spectrum, f);

  ChisqFlags cf;
  auto* chisq = app.add_subcommand("chisq", "chi-square curve from a start state");
  add_shared(chisq, f);
  chisq->add_option("--l-max", cf.l_max, "last step");
  chisq->add_option("--stride", cf.stride, "step spacing");
  chisq->add_option("--eps", cf.eps, "also report the first l with chisq <= eps");
  chisq->add_option("--c", cf.c, "also report the mixing-time thresholds at this c");
  chisq->add_flag("--oracle", cf.oracle, "matrix-power brute force (small chains)");

  SimFlags sf;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo histograms");
  add_shared(simulate, f);
  simulate->add_option("--replicas", sf.replicas, "independent replicas");
  simulate->add_option("--steps", sf.steps, "steps per replica");
  simulate->add_option("--checkpoints", sf.checkpoints, "comma-separated steps");
  simulate->add_option("--bins", sf.bins, "histogram bins");
  simulate->add_option("--stat", sf.stat, "watterson or counts");

  VerifyFlags vf;
  auto* verify = app.add_subcommand("verify", "exact self-checks");
  add_shared(verify, f);
  verify->add_option("scope", vf.scope, "orthogonality | eigenfunctions | kernels | balance | oracle | all");
  verify->add_option("--perturb", vf.perturb, "degree:offset added to the claimed eigenvalue (negative control)");
  verify->add_option("--l-max", vf.l_max, "steps for the oracle check");

  ImageFlags img;
  auto* image = app.add_subcommand("image-demo", "Gaussian image-restoration sampler");
  image->add_option("--delta", img.delta, "smoothing strength");
  image->add_option("--sigma", img.sigma, "noise sd");
  image->add_option("--grid", img.grid, "RxC");
  image->add_option("--l-max", img.l_max, "last step");
  image->add_option("--out", f.out, "output path (default stdout)");
  image->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*spectrum) cmd_spectrum(f);
    else if (*chisq) cmd_chisq(f, cf);
    else if (*simulate) cmd_simulate(f, sf);
    else if (*verify) return cmd_verify(f, vf);
    else if (*image) cmd_image_demo(f, img);
  } catch (const om::CapacityError& e) {
    std::cerr << "capacity: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
