#include "obstacle/evalio/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "obstacle/problems/problem.hpp"

namespace obstacle::evalio {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  std::size_t line;
  std::size_t column;  // of the value
};

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a number");
  return out;
}

template <class I>
I to_int(const std::string& v) {
  I out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected an integer");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false");
}

Algorithm algorithm_from_name(const std::string& v) {
  if (v == "bilevel") return Algorithm::bilevel;
  if (v == "single_level") return Algorithm::single_level;
  throw std::invalid_argument("expected bilevel or single_level");
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"problem", {{"id", [](ExperimentConfig& c, const std::string& v) { c.problem = v; }}}},
      {"network",
       {{"blocks", [](ExperimentConfig& c, const std::string& v) { c.blocks = to_int<int>(v); }},
        {"width", [](ExperimentConfig& c, const std::string& v) { c.width = to_int<int>(v); }},
        {"activation",
         [](ExperimentConfig& c, const std::string& v) { c.activation = ad::activation_from_name(v); }}}},
      {"optimizer",
       {{"algorithm", [](ExperimentConfig& c, const std::string& v) { c.algorithm = algorithm_from_name(v); }},
        {"weight", [](ExperimentConfig& c, const std::string& v) { c.weight = to_double(v); }},
        {"gamma", [](ExperimentConfig& c, const std::string& v) { c.hp.gamma = to_double(v); }},
        {"c0", [](ExperimentConfig& c, const std::string& v) { c.hp.penalty.c0 = to_double(v); }},
        {"c_exp", [](ExperimentConfig& c, const std::string& v) { c.hp.penalty.exponent = to_double(v); }},
        {"step_mode",
         [](ExperimentConfig& c, const std::string& v) { c.hp.steps.mode = opt::step_mode_from_name(v); }},
        {"alpha", [](ExperimentConfig& c, const std::string& v) { c.hp.steps.alpha0 = to_double(v); }},
        {"beta", [](ExperimentConfig& c, const std::string& v) { c.hp.steps.beta0 = to_double(v); }},
        {"eta", [](ExperimentConfig& c, const std::string& v) { c.hp.steps.eta0 = to_double(v); }},
        {"decay", [](ExperimentConfig& c, const std::string& v) { c.hp.steps.decay = to_double(v); }},
        {"decay_every",
         [](ExperimentConfig& c, const std::string& v) { c.hp.steps.decay_every = to_int<std::uint64_t>(v); }},
        {"p", [](ExperimentConfig& c, const std::string& v) { c.hp.steps.p = to_double(v); }},
        {"q", [](ExperimentConfig& c, const std::string& v) { c.hp.steps.q = to_double(v); }},
        {"batch", [](ExperimentConfig& c, const std::string& v) { c.hp.batch = to_int<std::size_t>(v); }},
        {"iterations",
         [](ExperimentConfig& c, const std::string& v) { c.hp.iterations = to_int<std::uint64_t>(v); }},
        {"seed", [](ExperimentConfig& c, const std::string& v) { c.hp.seed = to_int<std::uint64_t>(v); }},
        {"update", [](ExperimentConfig& c, const std::string& v) { c.hp.update = opt::update_rule_from_name(v); }},
        {"divergence_limit",
         [](ExperimentConfig& c, const std::string& v) { c.hp.divergence_limit = to_double(v); }},
        {"backend", [](ExperimentConfig& c, const std::string& v) { c.backend = opt::backend_from_name(v); }}}},
      {"stage2",
       {{"enabled", [](ExperimentConfig& c, const std::string& v) { c.stage2 = to_bool(v); }},
        {"lr", [](ExperimentConfig& c, const std::string& v) { c.adam.lr = to_double(v); }},
        {"beta1", [](ExperimentConfig& c, const std::string& v) { c.adam.beta1 = to_double(v); }},
        {"beta2", [](ExperimentConfig& c, const std::string& v) { c.adam.beta2 = to_double(v); }},
        {"eps", [](ExperimentConfig& c, const std::string& v) { c.adam.eps = to_double(v); }},
        {"iterations",
         [](ExperimentConfig& c, const std::string& v) { c.adam.iterations = to_int<std::uint64_t>(v); }}}},
      {"output",
       {{"dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
        {"grid", [](ExperimentConfig& c, const std::string& v) { c.grid = to_int<int>(v); }},
        {"fields", [](ExperimentConfig& c, const std::string& v) { c.fields = to_bool(v); }}}},
  };
  return s;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) { return a == Algorithm::bilevel ? "bilevel" : "single_level"; }

ExperimentConfig default_config(const std::string& problem) {
  const problems::ExampleDefaults d = problems::example_defaults(problem);
  ExperimentConfig c;
  c.problem = problem;
  c.hp.gamma = d.gamma;
  c.hp.penalty = {d.c0, d.c_exp};
  c.hp.steps.alpha0 = c.hp.steps.beta0 = c.hp.steps.eta0 = d.step;
  c.hp.iterations = static_cast<std::uint64_t>(d.iterations);
  c.out_dir = "runs/" + problem;
  return c;
}

void ExperimentConfig::validate() const {
  const auto ids = problems::catalog_ids();
  if (std::find(ids.begin(), ids.end(), problem) == ids.end())
    throw ad::InputError("unknown problem '" + problem + "'");
  if (blocks < 1 || width < 1) throw ad::InputError("network blocks and width must be >= 1");
  hp.validate();
  adam.validate();
  if (algorithm == Algorithm::single_level && !(weight > 0.0))
    throw ad::InputError("single-level weight must be positive");
  if (grid < 2) throw ad::InputError("evaluation grid must be >= 2");
}

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
  std::map<std::string, std::map<std::string, Entry>> entries;
  std::string section;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::size_t indent = raw.find_first_not_of(" \t") + 1;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, lineno, indent, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!schema().count(section)) throw ParseError(source, lineno, indent, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, indent, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (section.empty()) throw ParseError(source, lineno, indent, "key '" + key + "' outside of any section");
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& keys = schema().at(section);
    if (!keys.count(key))
      throw ParseError(source, lineno, indent, "unknown key '" + key + "' in section [" + section + "]");
    const std::size_t eq_raw = raw.find('=');
    const std::size_t vpos = raw.find_first_not_of(" \t", eq_raw + 1);
    const std::size_t vcol = (vpos == std::string::npos ? eq_raw + 1 : vpos) + 1;
    if (!entries[section].emplace(key, Entry{value, lineno, vcol}).second)
      throw ParseError(source, lineno, indent, "duplicate key '" + key + "' in section [" + section + "]");
  }
  std::string problem = "example1";
  if (auto s = entries.find("problem"); s != entries.end())
    if (auto k = s->second.find("id"); k != s->second.end()) problem = k->second.value;
  ExperimentConfig c;
  try {
    c = default_config(problem);
  } catch (const std::exception& e) {
    const Entry& id = entries["problem"]["id"];
    throw ParseError(source, id.line, id.column, e.what());
  }
  for (const auto& [sec, keys] : entries)
    for (const auto& [key, entry] : keys) {
      try {
        schema().at(sec).at(key)(c, entry.value);
      } catch (const std::exception& e) {
        throw ParseError(source, entry.line, entry.column,
                         "[" + sec + "] " + key + " = '" + entry.value + "': " + e.what());
      }
    }
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw ad::InputError(source + ": invalid configuration: " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  return parse_config(is, path.string());
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  auto d = format_double;
  os << "[problem]\nid = " << c.problem << "\n\n";
  os << "[network]\nblocks = " << c.blocks << "\nwidth = " << c.width
     << "\nactivation = " << ad::activation_name(c.activation) << "\n\n";
  os << "[optimizer]\nalgorithm = " << algorithm_name(c.algorithm) << "\nweight = " << d(c.weight)
     << "\ngamma = " << d(c.hp.gamma) << "\nc0 = " << d(c.hp.penalty.c0) << "\nc_exp = " << d(c.hp.penalty.exponent)
     << "\nstep_mode = " << opt::step_mode_name(c.hp.steps.mode) << "\nalpha = " << d(c.hp.steps.alpha0)
     << "\nbeta = " << d(c.hp.steps.beta0) << "\neta = " << d(c.hp.steps.eta0) << "\ndecay = " << d(c.hp.steps.decay)
     << "\ndecay_every = " << c.hp.steps.decay_every << "\np = " << d(c.hp.steps.p) << "\nq = " << d(c.hp.steps.q)
     << "\nbatch = " << c.hp.batch << "\niterations = " << c.hp.iterations << "\nseed = " << c.hp.seed
     << "\nupdate = " << opt::update_rule_name(c.hp.update) << "\ndivergence_limit = " << d(c.hp.divergence_limit) << "\nbackend = " << opt::backend_name(c.backend)
     << "\n\n";
  os << "[stage2]\nenabled = " << (c.stage2 ? "true" : "false") << "\nlr = " << d(c.adam.lr)
     << "\nbeta1 = " << d(c.adam.beta1) << "\nbeta2 = " << d(c.adam.beta2) << "\neps = " << d(c.adam.eps)
     << "\niterations = " << c.adam.iterations << "\n\n";
  os << "[output]\ndir = " << c.out_dir << "\ngrid = " << c.grid << "\nfields = " << (c.fields ? "true" : "false")
     << "\n";
}

void write_config(const std::filesystem::path& path, const ExperimentConfig& c) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_config(os, c);
}

}  // namespace obstacle::evalio
