#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace madi {

struct Unit {
  std::int64_t id = 0;
  double y = 0.0;
  std::vector<double> x;
};

/// Which column of the frame an operation reads: the study variable or one
/// auxiliary column (0-based, so x1 is `auxiliary(0)`).
class Variable {
public:
  static Variable study() { return Variable(std::nullopt); }
  static Variable auxiliary(std::size_t column) { return Variable(column); }

  bool is_study() const noexcept { return !column_; }
  std::size_t column() const { return column_.value(); }

private:
  explicit Variable(std::optional<std::size_t> c) : column_(c) {}
  std::optional<std::size_t> column_;
};

/// An ordered, immutable finite population U. Units keep frame order; ids
/// are exactly {1..N} in some order. Internally every other module refers to
/// units by their 0-based position in the frame.
class Population {
public:
  /// Throws DomainError if `units` is empty, ids are not a permutation of
  /// {1..N}, or auxiliary lengths differ.
  explicit Population(std::vector<Unit> units);

  std::size_t size() const noexcept { return units_.size(); }
  std::size_t aux_dim() const noexcept { return p_; }

  const Unit& unit(std::size_t index) const { return units_.at(index); }
  const std::vector<Unit>& units() const noexcept { return units_; }

  double y(std::size_t index) const noexcept { return units_[index].y; }
  std::span<const double> x(std::size_t index) const noexcept { return units_[index].x; }

  /// Study values in frame order.
  const std::vector<double>& y_values() const noexcept { return y_; }

  /// Frame position of the unit with the given id; throws DomainError if absent.
  std::size_t index_of(std::int64_t id) const;

private:
  std::vector<Unit> units_;
  std::vector<double> y_;
  std::vector<std::size_t> index_by_id_;
  std::size_t p_ = 0;
};

/// A/B membership over a population: delta(i) == true puts unit i in the
/// nonprobability set A, false puts it in B.
class Partition {
public:
  explicit Partition(std::vector<bool> delta);

  std::size_t size() const noexcept { return delta_.size(); }
  bool in_a(std::size_t index) const noexcept { return delta_[index]; }
  std::size_t n_a() const noexcept { return a_.size(); }
  std::size_t n_b() const noexcept { return b_.size(); }

  /// Frame positions of A and of B, each in frame order.
  const std::vector<std::size_t>& a_units() const noexcept { return a_; }
  const std::vector<std::size_t>& b_units() const noexcept { return b_; }
  const std::vector<bool>& delta() const noexcept { return delta_; }

private:
  std::vector<bool> delta_;
  std::vector<std::size_t> a_;
  std::vector<std::size_t> b_;
};

double total(const Population& pop, Variable selector);

/// Sum of y over the given frame positions.
double total_over(const Population& pop, std::span<const std::size_t> units);

/// Sample variance with divisor (n - 1). Throws DomainError when fewer than
/// two values are given.
double population_variance(std::span<const double> values);

Population generate_synthetic(std::uint64_t seed, std::size_t n_units, std::size_t p);

/// Shortest round-trip decimal form of a double.
std::string format_real(double v);

Population read_population_csv(std::istream& in);
void write_population_csv(std::ostream& out, const Population& pop);
Population load_csv(const std::filesystem::path& path);
void save_csv(const std::filesystem::path& path, const Population& pop);

/// Partition file `id,delta`. Every population id must appear exactly once.
Partition read_partition_csv(std::istream& in, const Population& pop);
void write_partition_csv(std::ostream& out, const Population& pop, const Partition& part);
Partition load_partition(const std::filesystem::path& path, const Population& pop);
void save_partition(const std::filesystem::path& path, const Population& pop, const Partition& part);

}  // namespace madi
