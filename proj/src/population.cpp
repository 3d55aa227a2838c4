#include "madi/population.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "madi/error.hpp"
#include "madi/random.hpp"
#include "madi/summation.hpp"

namespace madi {

Population::Population(std::vector<Unit> units) : units_(std::move(units)) {
  if (units_.empty()) throw DomainError("population must contain at least one unit");
  const std::size_t n = units_.size();
  p_ = units_.front().x.size();
  index_by_id_.assign(n + 1, n);
  y_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Unit& u = units_[i];
    if (u.x.size() != p_)
      throw DomainError("unit id " + std::to_string(u.id) + " has " + std::to_string(u.x.size()) +
                        " auxiliary values, expected " + std::to_string(p_));
    if (u.id < 1 || static_cast<std::size_t>(u.id) > n)
      throw DomainError("unit id " + std::to_string(u.id) + " outside 1.." + std::to_string(n));
    auto& slot = index_by_id_[static_cast<std::size_t>(u.id)];
    if (slot != n) throw DomainError("duplicate unit id " + std::to_string(u.id));
    slot = i;
    y_.push_back(u.y);
  }
}

std::size_t Population::index_of(std::int64_t id) const {
  if (id < 1 || static_cast<std::size_t>(id) >= index_by_id_.size())
    throw DomainError("unknown unit id " + std::to_string(id));
  return index_by_id_[static_cast<std::size_t>(id)];
}

Partition::Partition(std::vector<bool> delta) : delta_(std::move(delta)) {
  for (std::size_t i = 0; i < delta_.size(); ++i) (delta_[i] ? a_ : b_).push_back(i);
}

double total(const Population& pop, Variable selector) {
  CompensatedSum acc;
  if (selector.is_study()) {
    for (double v : pop.y_values()) acc += v;
    return acc.value();
  }
  const std::size_t c = selector.column();
  if (c >= pop.aux_dim())
    throw DomainError("auxiliary column " + std::to_string(c + 1) + " out of range (p = " +
                      std::to_string(pop.aux_dim()) + ")");
  for (const Unit& u : pop.units()) acc += u.x[c];
  return acc.value();
}

double total_over(const Population& pop, std::span<const std::size_t> units) {
  CompensatedSum acc;
  for (std::size_t i : units) acc += pop.y(i);
  return acc.value();
}

double population_variance(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("variance needs at least two values");
  const double mean = compensated_mean(values);
  CompensatedSum ss;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss.value() / static_cast<double>(values.size() - 1);
}

namespace {

double softplus(double t) { return t > 30.0 ? t : std::log1p(std::exp(t)); }

// Generator constants. Age enters through a hump peaking at 47, gender and
// a gender-by-age interaction shift the level, dense tax columns share a
// latent earning-capacity factor with y, and every fifth tax column is sparse
// (nonzero for about 4% of units) so that small samples often see it all zero.
constexpr double kIncomeScale = 1e5;
constexpr double kAgePeak = 47.0;
constexpr double kAgeWidth = 30.0;
constexpr double kSparseShare = 0.04;
constexpr double kZeroShare = 0.05;
constexpr double kZeroWeightOld = 12.0;  // forced zeros favour age >= 72
constexpr double kOldAge = 72.0;

}  // namespace

Population generate_synthetic(std::uint64_t seed, std::size_t n_units, std::size_t p) {
  if (p < 2) throw DomainError("synthetic population needs p >= 2 (age and gender columns)");
  if (n_units < 1) throw DomainError("synthetic population needs N >= 1");

  CounterRng rng = derive_stream(seed, {0x706F70ull});
  std::vector<Unit> units(n_units);
  for (std::size_t i = 0; i < n_units; ++i) {
    Unit& u = units[i];
    u.id = static_cast<std::int64_t>(i + 1);
    u.x.assign(p, 0.0);
    const double age = 18.0 + static_cast<double>(rng.below(68));
    const double gender = rng.uniform01() < 0.5 ? 1.0 : 0.0;
    const double capacity = rng.normal();
    const double hump = 1.0 - std::pow((age - kAgePeak) / kAgeWidth, 2);
    u.x[0] = age;
    u.x[1] = gender;
    double eta = -0.3 + 2.0 * hump + 0.25 * gender + 0.5 * gender * hump;
    for (std::size_t j = 2; j < p; ++j) {
      const std::size_t k = j - 2;
      if (k % 5 == 4) {
        const bool nonzero = rng.uniform01() < kSparseShare;
        const double level = std::exp(9.0 + 0.8 * rng.normal());
        u.x[j] = nonzero ? level : 0.0;
        if (nonzero) eta += 0.6;
      } else {
        const double loading = 0.6 + 0.05 * static_cast<double>(k % 5);
        const double log_level = loading * capacity + 0.5 * rng.normal();
        u.x[j] = 1000.0 * static_cast<double>(k + 1) * std::exp(log_level);
        eta += 0.12 * log_level;
      }
    }
    eta += 0.35 * (rng.exponential() - 1.0);
    u.y = kIncomeScale * softplus(eta);
  }

  // Weighted draw without replacement (Efraimidis-Spirakis keys).
  const auto n_zero = static_cast<std::size_t>(std::llround(kZeroShare * static_cast<double>(n_units)));
  if (n_zero > 0) {
    CounterRng zrng = derive_stream(seed, {0x7A65726Full});
    std::vector<std::pair<double, std::size_t>> keys(n_units);
    for (std::size_t i = 0; i < n_units; ++i) {
      double u = zrng.uniform01();
      while (u <= 0.0) u = zrng.uniform01();
      const double w = units[i].x[0] >= kOldAge ? kZeroWeightOld : 1.0;
      keys[i] = {std::log(u) / w, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_zero), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t r = 0; r < n_zero; ++r) units[keys[r].second].y = 0.0;
  }
  return Population(std::move(units));
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view field, std::size_t line, std::string_view column) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw ParseError("non-numeric value '" + std::string(field) + "' in column " + std::string(column), line);
  return v;
}

std::int64_t parse_id(std::string_view field, std::size_t line) {
  field = trim(field);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("non-integer id '" + std::string(field) + "'", line);
  return v;
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

Population read_population_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw ParseError("empty population file", 0);
  const auto header = split_fields(line);
  if (header.size() < 2 || trim(header[0]) != "id" || trim(header[1]) != "y")
    throw ParseError("header must start with 'id,y'", line_no);
  const std::size_t p = header.size() - 2;
  for (std::size_t j = 0; j < p; ++j)
    if (trim(header[j + 2]) != "x" + std::to_string(j + 1))
      throw ParseError("expected column x" + std::to_string(j + 1) + ", found '" + std::string(header[j + 2]) + "'",
                       line_no);

  std::vector<Unit> units;
  std::vector<std::size_t> line_of_id;
  while (next_line(in, line, line_no)) {
    const auto fields = split_fields(line);
    if (fields.size() != p + 2)
      throw ParseError("expected " + std::to_string(p + 2) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    Unit u;
    u.id = parse_id(fields[0], line_no);
    u.y = parse_real(fields[1], line_no, "y");
    u.x.reserve(p);
    for (std::size_t j = 0; j < p; ++j) u.x.push_back(parse_real(fields[j + 2], line_no, "x" + std::to_string(j + 1)));
    if (u.id < 1) throw ParseError("id must be positive", line_no);
    const auto slot = static_cast<std::size_t>(u.id);
    if (slot >= line_of_id.size()) line_of_id.resize(slot + 1, 0);
    if (line_of_id[slot] != 0)
      throw ParseError("duplicate id " + std::to_string(u.id) + " (first seen on line " +
                           std::to_string(line_of_id[slot]) + ")",
                       line_no);
    line_of_id[slot] = line_no;
    units.push_back(std::move(u));
  }
  if (units.empty()) throw ParseError("population file has no rows", line_no);
  for (const Unit& u : units)
    if (static_cast<std::size_t>(u.id) > units.size())
      throw ParseError("ids must be exactly 1..N; id " + std::to_string(u.id) + " exceeds N = " +
                           std::to_string(units.size()),
                       line_of_id[static_cast<std::size_t>(u.id)]);
  return Population(std::move(units));
}

void write_population_csv(std::ostream& out, const Population& pop) {
  out << "id,y";
  for (std::size_t j = 0; j < pop.aux_dim(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (const Unit& u : pop.units()) {
    out << u.id << ',' << format_real(u.y);
    for (double v : u.x) out << ',' << format_real(v);
    out << '\n';
  }
}

Population load_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_population_csv(in);
}

void save_csv(const std::filesystem::path& path, const Population& pop) {
  auto out = open_out(path);
  write_population_csv(out, pop);
  if (!out) throw Error("write failed: " + path.string());
}

Partition read_partition_csv(std::istream& in, const Population& pop) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw ParseError("empty partition file", 0);
  const auto header = split_fields(line);
  if (header.size() != 2 || trim(header[0]) != "id" || trim(header[1]) != "delta")
    throw ParseError("partition header must be 'id,delta'", line_no);
  std::vector<bool> delta(pop.size(), false);
  std::vector<bool> seen(pop.size(), false);
  std::size_t rows = 0;
  while (next_line(in, line, line_no)) {
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw ParseError("expected 2 fields", line_no);
    const std::int64_t id = parse_id(fields[0], line_no);
    const std::string_view d = trim(fields[1]);
    if (d != "0" && d != "1") throw ParseError("delta must be 0 or 1", line_no);
    std::size_t idx = 0;
    try {
      idx = pop.index_of(id);
    } catch (const DomainError&) {
      throw ParseError("id " + std::to_string(id) + " not in population", line_no);
    }
    if (seen[idx]) throw ParseError("duplicate id " + std::to_string(id), line_no);
    seen[idx] = true;
    delta[idx] = d == "1";
    ++rows;
  }
  if (rows != pop.size())
    throw ParseError("partition covers " + std::to_string(rows) + " of " + std::to_string(pop.size()) + " units",
                     line_no);
  return Partition(std::move(delta));
}

void write_partition_csv(std::ostream& out, const Population& pop, const Partition& part) {
  out << "id,delta\n";
  for (std::size_t i = 0; i < pop.size(); ++i) out << pop.unit(i).id << ',' << (part.in_a(i) ? 1 : 0) << '\n';
}

Partition load_partition(const std::filesystem::path& path, const Population& pop) {
  auto in = open_in(path);
  return read_partition_csv(in, pop);
}

void save_partition(const std::filesystem::path& path, const Population& pop, const Partition& part) {
  auto out = open_out(path);
  write_partition_csv(out, pop, part);
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace madi
