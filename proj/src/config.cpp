#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "madi/error.hpp"
#include "madi/simulation.hpp"

namespace madi {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_unsigned(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw DomainError(std::string(key) + ": expected a nonnegative integer, got '" + std::string(value) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw DomainError(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw DomainError(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::vector<std::size_t> parse_grid(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw DomainError("grid: empty");
  std::vector<std::size_t> grid;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 2 && parts.size() != 3) throw DomainError("grid: range form is first:last[:step]");
    const auto first = parse_unsigned<std::size_t>("grid", parts[0]);
    const auto last = parse_unsigned<std::size_t>("grid", parts[1]);
    const auto step = parts.size() == 3 ? parse_unsigned<std::size_t>("grid", parts[2]) : std::size_t{1};
    if (step == 0) throw DomainError("grid: step must be positive");
    if (first > last) throw DomainError("grid: first exceeds last");
    for (std::size_t n = first; n <= last; n += step) grid.push_back(n);
  } else {
    for (auto part : split(text, ',')) grid.push_back(parse_unsigned<std::size_t>("grid", part));
  }
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] == grid[i - 1]) throw DomainError("grid: duplicate sample size " + std::to_string(grid[i]));
  return grid;
}

void apply_setting(SimulationConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "population") {
    c.population.file = std::filesystem::path(std::string(value));
  } else if (key == "synthetic_seed") {
    c.population.synthetic_seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "synthetic_n") {
    c.population.synthetic_n = parse_unsigned<std::size_t>(key, value);
  } else if (key == "synthetic_p") {
    c.population.synthetic_p = parse_unsigned<std::size_t>(key, value);
  } else if (key == "scenario") {
    try {
      c.npd.scenario = parse_scenario(value);
    } catch (const Error& e) {
      throw DomainError(std::string("scenario: ") + e.what());
    }
  } else if (key == "partition") {
    c.npd.partition_file = std::filesystem::path(std::string(value));
  } else if (key == "fraction") {
    c.npd.fraction = parse_double(key, value);
  } else if (key == "npd_seed") {
    c.npd.seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "strategies") {
    c.strategies.clear();
    if (value == "all") {
      c.strategies.assign(std::begin(kAllStrategies), std::end(kAllStrategies));
    } else {
      for (auto part : split(value, ',')) {
        try {
          c.strategies.push_back(parse_strategy(part));
        } catch (const Error& e) {
          throw DomainError(std::string("strategies: ") + e.what());
        }
      }
    }
  } else if (key == "grid") {
    c.grid = parse_grid(value);
  } else if (key == "replicates") {
    c.replicates = parse_unsigned<std::size_t>(key, value);
  } else if (key == "master_seed") {
    c.master_seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "level") {
    c.level = parse_double(key, value);
  } else if (key == "enumerate") {
    c.enumerate = parse_bool(key, value);
  } else if (key == "enumeration_cap") {
    c.enumeration_cap = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "threads") {
    c.threads = parse_unsigned<unsigned>(key, value);
  } else if (key == "forest_trees") {
    c.forest.n_trees = parse_unsigned<std::size_t>(key, value);
  } else if (key == "forest_mtry") {
    c.forest.mtry = parse_unsigned<std::size_t>(key, value);
  } else if (key == "forest_min_leaf") {
    c.forest.min_leaf = parse_unsigned<std::size_t>(key, value);
  } else if (key == "forest_max_depth") {
    c.forest.max_depth = parse_unsigned<std::size_t>(key, value);
  } else if (key == "forest_bootstrap") {
    c.forest.bootstrap = parse_bool(key, value);
  } else if (key == "forest_seed") {
    c.forest.seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "dump_replicates") {
    c.keep_replicates = parse_bool(key, value);
  } else {
    throw DomainError("unknown key '" + std::string(key) + "'");
  }
}

SimulationConfig read_config(std::istream& in) {
  SimulationConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(view.substr(0, eq));
    try {
      apply_setting(c, key, view.substr(eq + 1));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return c;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  return read_config(in);
}

void write_config(std::ostream& out, const SimulationConfig& c) {
  if (c.population.file) out << "population = " << c.population.file->string() << '\n';
  else
    out << "synthetic_seed = " << c.population.synthetic_seed << '\n'
        << "synthetic_n = " << c.population.synthetic_n << '\n'
        << "synthetic_p = " << c.population.synthetic_p << '\n';
  if (c.npd.partition_file) out << "partition = " << c.npd.partition_file->string() << '\n';
  if (c.npd.scenario) out << "scenario = " << to_string(*c.npd.scenario) << '\n';
  out << "fraction = " << format_real(c.npd.fraction) << '\n' << "npd_seed = " << c.npd.seed << '\n';
  out << "strategies = ";
  for (std::size_t i = 0; i < c.strategies.size(); ++i) out << (i ? "," : "") << to_string(c.strategies[i]);
  out << "\ngrid = ";
  for (std::size_t i = 0; i < c.grid.size(); ++i) out << (i ? "," : "") << c.grid[i];
  out << "\nreplicates = " << c.replicates << '\n'
      << "master_seed = " << c.master_seed << '\n'
      << "level = " << format_real(c.level) << '\n'
      << "enumerate = " << (c.enumerate ? "true" : "false") << '\n'
      << "enumeration_cap = " << c.enumeration_cap << '\n'
      << "threads = " << c.threads << '\n'
      << "forest_trees = " << c.forest.n_trees << '\n';
  if (c.forest.mtry) out << "forest_mtry = " << *c.forest.mtry << '\n';
  out << "forest_min_leaf = " << c.forest.min_leaf << '\n';
  if (c.forest.max_depth) out << "forest_max_depth = " << *c.forest.max_depth << '\n';
  out << "forest_bootstrap = " << (c.forest.bootstrap ? "true" : "false") << '\n'
      << "forest_seed = " << c.forest.seed << '\n'
      << "dump_replicates = " << (c.keep_replicates ? "true" : "false") << '\n';
}

}  // namespace madi
