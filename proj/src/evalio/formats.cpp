#include "obstacle/evalio/formats.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace obstacle::evalio {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw IoError(std::string("refusing to write non-finite ") + what);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line_, std::size_t column_, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line_) + ":" + std::to_string(column_) + ": " + what),
      line(line_),
      column(column_) {}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory(std::ostream& os, const std::vector<opt::TrajectoryRow>& rows) {
  os << kTrajectoryHeader << '\n';
  for (const auto& r : rows) {
    for (double v : {r.upper_loss, r.lower_loss, r.alpha, r.beta, r.eta, r.c_k, r.wall_ms})
      require_finite(v, "trajectory value");
    os << r.iter << ',' << format_double(r.upper_loss) << ',' << format_double(r.lower_loss) << ','
       << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << format_double(r.eta) << ','
       << format_double(r.c_k) << ',' << format_double(r.wall_ms) << '\n';
  }
}

void write_trajectory(const std::filesystem::path& path, const std::vector<opt::TrajectoryRow>& rows) {
  auto os = open_out(path);
  write_trajectory(os, rows);
}

std::vector<opt::TrajectoryRow> read_trajectory(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError(source, 1, 1, "empty file, expected header");
  ++lineno;
  strip_cr(line);
  if (line != kTrajectoryHeader)
    throw ParseError(source, 1, 1, std::string("expected header '") + kTrajectoryHeader + "'");
  std::vector<opt::TrajectoryRow> rows;
  while (std::getline(is, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::pair<std::size_t, std::string_view>> fields;
    std::size_t start = 0;
    const std::string_view sv(line);
    while (true) {
      const std::size_t comma = sv.find(',', start);
      fields.emplace_back(start, sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 8)
      throw ParseError(source, lineno, 1, "expected 8 fields, found " + std::to_string(fields.size()));
    opt::TrajectoryRow r;
    if (!parse_number(fields[0].second, r.iter))
      throw ParseError(source, lineno, fields[0].first + 1, "bad iteration '" + std::string(fields[0].second) + "'");
    double* slots[7] = {&r.upper_loss, &r.lower_loss, &r.alpha, &r.beta, &r.eta, &r.c_k, &r.wall_ms};
    for (std::size_t i = 0; i < 7; ++i) {
      const auto& [col, text] = fields[i + 1];
      if (!parse_number(text, *slots[i]) || !std::isfinite(*slots[i]))
        throw ParseError(source, lineno, col + 1, "bad number '" + std::string(text) + "'");
    }
    if (!rows.empty() && r.iter <= rows.back().iter)
      throw ParseError(source, lineno, 1, "iteration numbers must strictly increase");
    rows.push_back(r);
  }
  return rows;
}

std::vector<opt::TrajectoryRow> read_trajectory(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_trajectory(is, path.string());
}

void write_field(std::ostream& os, const oracle::GridField& f, const std::string& name) {
  os << "# x1 x2 " << name << '\n';
  for (int i = 1; i < f.n; ++i)
    for (int j = 1; j < f.n; ++j) {
      require_finite(f.at(i, j), "field value");
      os << format_double(f.coord(i)) << ' ' << format_double(f.coord(j)) << ' ' << format_double(f.at(i, j))
         << '\n';
    }
}

void write_field(const std::filesystem::path& path, const oracle::GridField& f, const std::string& name) {
  auto os = open_out(path);
  write_field(os, f, name);
}

oracle::GridField read_field(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# x1 x2 ", 0) != 0)
    throw ParseError(source, 1, 1, "expected header '# x1 x2 <name>'");
  std::vector<std::array<double, 3>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::array<double, 3> r{};
    for (std::size_t c = 0; c < 3; ++c) {
      std::string tok;
      if (!(ls >> tok)) throw ParseError(source, lineno, 1, "expected 3 columns");
      if (!parse_number(std::string_view(tok), r[c]))
        throw ParseError(source, lineno, line.find(tok) + 1, "bad number '" + tok + "'");
    }
    rows.push_back(r);
  }
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rows.size()))));
  if (side * side != rows.size()) throw ParseError(source, lineno, 1, "node count is not a square");
  oracle::GridField f(static_cast<int>(side) + 1);
  for (std::size_t k = 0; k < rows.size(); ++k) f.values[k] = rows[k][2];
  return f;
}

std::string describe_spec(const net::NetworkSpec& s) {
  std::ostringstream os;
  os << "input_dim:" << s.input_dim << ",blocks:" << s.blocks << ",width:" << s.width
     << ",activation:" << ad::activation_name(s.activation) << ",embedding:" << net::embedding_name(s.embedding)
     << ",seed:" << s.seed;
  return os.str();
}

net::NetworkSpec parse_spec(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw IoError("bad network descriptor item '" + item + "'");
    kv[item.substr(0, colon)] = item.substr(colon + 1);
  }
  auto take = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError(std::string("network descriptor lacks '") + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto integer = [&](const char* key) {
    const std::string v = take(key);
    long long out = 0;
    if (!parse_number(std::string_view(v), out)) throw IoError(std::string("bad integer for '") + key + "'");
    return out;
  };
  net::NetworkSpec s;
  s.input_dim = static_cast<int>(integer("input_dim"));
  s.blocks = static_cast<int>(integer("blocks"));
  s.width = static_cast<int>(integer("width"));
  s.activation = ad::activation_from_name(take("activation"));
  s.embedding = net::embedding_from_name(take("embedding"));
  const std::string seed = take("seed");
  if (!parse_number(std::string_view(seed), s.seed)) throw IoError("bad network seed");
  if (!kv.empty()) throw IoError("unknown network descriptor key '" + kv.begin()->first + "'");
  s.validate();
  return s;
}

void save_checkpoint(std::ostream& os, const Checkpoint& c) {
  net::check_params(c.state_spec, c.state.size());
  net::check_params(c.control_spec, c.control.size());
  os << "obstacle-checkpoint 1 problem=" << c.problem << " stage=" << c.stage << " seed=" << c.seed
     << " iteration=" << c.iteration << " state=" << describe_spec(c.state_spec) << " control="
     << describe_spec(c.control_spec) << " state_count=" << c.state.size() << " control_count=" << c.control.size()
     << '\n';
  auto put = [&](const std::vector<double>& v) {
    for (double d : v) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      char b[8];
      std::memcpy(b, &bits, 8);
      os.write(b, 8);
    }
  };
  put(c.state);
  put(c.control);
  if (!os) throw IoError("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  auto os = open_out(path, std::ios::out | std::ios::binary);
  save_checkpoint(os, c);
}

Checkpoint load_checkpoint(std::istream& is, const std::string& source) {
  std::string header;
  if (!std::getline(is, header)) throw ParseError(source, 1, 1, "missing checkpoint header");
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "obstacle-checkpoint" || version != "1")
    throw ParseError(source, 1, 1, "not a version-1 checkpoint");
  std::map<std::string, std::string> kv;
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    const std::size_t col = header.find(tok) + 1;
    if (eq == std::string::npos) throw ParseError(source, 1, col, "expected key=value, got '" + tok + "'");
    if (!kv.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second)
      throw ParseError(source, 1, col, "duplicate header key '" + tok.substr(0, eq) + "'");
  }
  auto field = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(source, 1, header.size() + 1, std::string("header lacks '") + key + "'");
    return it->second;
  };
  auto count = [&](const char* key) {
    std::uint64_t v = 0;
    const std::string s = field(key);
    if (!parse_number(std::string_view(s), v))
      throw ParseError(source, 1, header.find(key) + 1, std::string("bad value for '") + key + "'");
    return v;
  };
  Checkpoint c;
  c.problem = field("problem");
  c.stage = field("stage");
  c.seed = count("seed");
  c.iteration = count("iteration");
  try {
    c.state_spec = parse_spec(field("state"));
    c.control_spec = parse_spec(field("control"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 1, 1, e.what());
  } catch (const IoError& e) {
    throw ParseError(source, 1, 1, e.what());
  }
  const std::uint64_t ns = count("state_count"), nc = count("control_count");
  if (ns != c.state_spec.param_count() || nc != c.control_spec.param_count())
    throw ParseError(source, 1, 1, "parameter counts do not match the network descriptors");
  auto get = [&](std::uint64_t n, std::vector<double>& out) {
    out.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      char b[8];
      if (!is.read(b, 8)) throw ParseError(source, 2, 1, "truncated payload");
      std::uint64_t bits = 0;
      std::memcpy(&bits, b, 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      out[i] = std::bit_cast<double>(bits);
    }
  };
  get(ns, c.state);
  get(nc, c.control);
  if (is.peek() != std::char_traits<char>::eof()) throw ParseError(source, 2, 1, "trailing bytes after payload");
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::in | std::ios::binary);
  return load_checkpoint(is, path.string());
}

}  // namespace obstacle::evalio
