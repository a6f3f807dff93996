#include "cipm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include "cipm/errors.hpp"
#include "cipm/format.hpp"

namespace cipm {

const char* to_string(Method m) {
  switch (m) {
    case Method::Exact: return "exact";
    case Method::Inexact: return "inexact";
    case Method::Baseline: return "baseline";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "exact") return Method::Exact;
  if (text == "inexact") return Method::Inexact;
  if (text == "baseline") return Method::Baseline;
  throw ConfigError("unknown method '" + text + "'");
}

RunConfig::RunConfig() { inexact.stop = inexact::StopRule::Shared; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_integer(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

template <typename Member>
Field dbl(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = to_double(k, v); },
          [m](const RunConfig& c) { return format_double(m(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field integer(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = to_int(k, v); },
          [m](const RunConfig& c) { return std::to_string(m(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field boolean(Member m) {
  return {[m](RunConfig& c, const std::string& k, const std::string& v) { m(c) = to_bool(k, v); },
          [m](const RunConfig& c) { return std::string(m(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

using Table = std::map<std::string, std::map<std::string, Field>>;

const Table& table() {
  static const Table t = [] {
    Table t;
    auto& run = t["run"];
    run["method"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.method = parse_method(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.method)); }};
    run["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                     const auto s = to_integer(k, v);
                     if (s < 0) throw ConfigError("seed must be nonnegative");
                     c.seed = static_cast<std::uint64_t>(s);
                   },
                   [](const RunConfig& c) { return std::to_string(c.seed); }};
    run["threads"] = integer([](RunConfig& c) -> int& { return c.threads; });
    run["trace"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                      if (v == "outer")
                        c.trace = TraceLevel::Outer;
                      else if (v == "inner")
                        c.trace = TraceLevel::Inner;
                      else
                        throw ConfigError("trace must be outer or inner");
                    },
                    [](const RunConfig& c) { return std::string(c.trace == TraceLevel::Outer ? "outer" : "inner"); }};

    auto& pr = t["problem"];
    pr["num_agents"] = integer([](RunConfig& c) -> int& { return c.problem.num_agents; });
    pr["local_size_min"] = integer([](RunConfig& c) -> int& { return c.problem.local_size.lo; });
    pr["local_size_max"] = integer([](RunConfig& c) -> int& { return c.problem.local_size.hi; });
    pr["num_eq_min"] = integer([](RunConfig& c) -> int& { return c.problem.num_eq.lo; });
    pr["num_eq_max"] = integer([](RunConfig& c) -> int& { return c.problem.num_eq.hi; });
    pr["num_ineq_min"] = integer([](RunConfig& c) -> int& { return c.problem.num_ineq.lo; });
    pr["num_ineq_max"] = integer([](RunConfig& c) -> int& { return c.problem.num_ineq.hi; });
    pr["index_pool"] = integer([](RunConfig& c) -> int& { return c.problem.index_pool; });
    pr["x_lo"] = dbl([](RunConfig& c) -> double& { return c.problem.x_lo; });
    pr["x_hi"] = dbl([](RunConfig& c) -> double& { return c.problem.x_hi; });
    pr["slack_lo"] = dbl([](RunConfig& c) -> double& { return c.problem.slack_lo; });
    pr["slack_hi"] = dbl([](RunConfig& c) -> double& { return c.problem.slack_hi; });
    pr["e_lo"] = dbl([](RunConfig& c) -> double& { return c.problem.e_lo; });
    pr["e_hi"] = dbl([](RunConfig& c) -> double& { return c.problem.e_hi; });
    pr["max_redraws"] = integer([](RunConfig& c) -> int& { return c.problem.max_redraws; });

    auto& ex = t["exact"];
    ex["sigma"] = dbl([](RunConfig& c) -> double& { return c.exact.sigma; });
    ex["beta"] = dbl([](RunConfig& c) -> double& { return c.exact.beta; });
    ex["gamma_ls"] = dbl([](RunConfig& c) -> double& { return c.exact.gamma_ls; });
    ex["eps"] = dbl([](RunConfig& c) -> double& { return c.exact.eps; });
    ex["eps_feas"] = dbl([](RunConfig& c) -> double& { return c.exact.eps_feas; });
    ex["rho"] = dbl([](RunConfig& c) -> double& { return c.exact.rho; });
    ex["alpha_or"] = dbl([](RunConfig& c) -> double& { return c.exact.alpha_or; });
    ex["eps_pri"] = dbl([](RunConfig& c) -> double& { return c.exact.eps_pri; });
    ex["eps_dual"] = dbl([](RunConfig& c) -> double& { return c.exact.eps_dual; });
    ex["max_outer"] = integer([](RunConfig& c) -> int& { return c.exact.max_outer; });
    ex["max_inner"] = integer([](RunConfig& c) -> int& { return c.exact.max_inner; });
    ex["warm_start"] = boolean([](RunConfig& c) -> bool& { return c.exact.warm_start; });

    auto& in = t["inexact"];
    in["eta_max"] = dbl([](RunConfig& c) -> double& { return c.inexact.eta_max; });
    in["gamma0"] = dbl([](RunConfig& c) -> double& { return c.inexact.gamma0; });
    in["beta"] = dbl([](RunConfig& c) -> double& { return c.inexact.beta; });
    in["theta"] = dbl([](RunConfig& c) -> double& { return c.inexact.theta; });
    in["eps_sigma"] = dbl([](RunConfig& c) -> double& { return c.inexact.eps_sigma; });
    in["sigma_margin"] = dbl([](RunConfig& c) -> double& { return c.inexact.sigma_margin; });
    in["rho"] = dbl([](RunConfig& c) -> double& { return c.inexact.rho; });
    in["alpha_or"] = dbl([](RunConfig& c) -> double& { return c.inexact.alpha_or; });
    in["eps"] = dbl([](RunConfig& c) -> double& { return c.inexact.eps; });
    in["eps_feas"] = dbl([](RunConfig& c) -> double& { return c.inexact.eps_feas; });
    in["max_outer"] = integer([](RunConfig& c) -> int& { return c.inexact.max_outer; });
    in["max_inner"] = integer([](RunConfig& c) -> int& { return c.inexact.max_inner; });
    in["warm_start"] = boolean([](RunConfig& c) -> bool& { return c.inexact.warm_start; });
    in["stop"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                    if (v == "merit")
                      c.inexact.stop = inexact::StopRule::Merit;
                    else if (v == "shared")
                      c.inexact.stop = inexact::StopRule::Shared;
                    else
                      throw ConfigError("inexact.stop must be merit or shared");
                  },
                  [](const RunConfig& c) {
                    return std::string(c.inexact.stop == inexact::StopRule::Merit ? "merit" : "shared");
                  }};

    auto& bl = t["baseline"];
    bl["rho"] = dbl([](RunConfig& c) -> double& { return c.baseline.rho; });
    bl["eps"] = dbl([](RunConfig& c) -> double& { return c.baseline.eps; });
    bl["eps_feas"] = dbl([](RunConfig& c) -> double& { return c.baseline.eps_feas; });
    bl["max_iter"] = integer([](RunConfig& c) -> int& { return c.baseline.max_iter; });
    bl["local_tol"] = dbl([](RunConfig& c) -> double& { return c.baseline.local.tol; });
    bl["local_max_iter"] = integer([](RunConfig& c) -> int& { return c.baseline.local.max_iter; });
    return t;
  }();
  return t;
}

void validate(const RunConfig& c) {
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  c.problem.validate();
  c.exact.validate();
  c.inexact.validate();
  c.baseline.validate();
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string section;
  std::string line;
  bool have_version = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (!table().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (value.empty()) throw ConfigError(where + "empty value for " + key);
    if (section.empty()) {
      if (key != "version") throw ConfigError(where + "unknown top-level key '" + key + "'");
      if (to_int(key, value) != kConfigVersion) throw ConfigError(where + "unsupported config version " + value);
      have_version = true;
      continue;
    }
    const auto& fields = table().at(section);
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    it->second.set(cfg, section + "." + key, value);
  }
  if (!have_version) throw ConfigError("config is missing 'version = 1'");
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& config) {
  out << "version = " << kConfigVersion << '\n';
  for (const char* section : {"run", "problem", "exact", "inexact", "baseline"}) {
    out << '\n' << '[' << section << "]\n";
    for (const auto& [key, field] : table().at(section)) out << key << " = " << field.get(config) << '\n';
  }
}

}  // namespace cipm
