#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "madi/population.hpp"
#include "madi/random.hpp"

namespace madi {

enum class FrameKind { U, B };

/// The list of units a design samples from: the whole population (U) or the
/// complement of the nonprobability set (B). Cheap to copy; members are
/// shared and immutable.
class FrameRef {
public:
  static FrameRef whole(std::size_t population_size);
  static FrameRef whole(const Population& pop) { return whole(pop.size()); }
  static FrameRef complement(const Partition& part);
  /// Arbitrary frame, mostly for tests. Members must be distinct and < population_size.
  static FrameRef of_units(FrameKind kind, std::vector<std::size_t> members, std::size_t population_size);

  FrameKind kind() const noexcept { return data_->kind; }
  std::size_t size() const noexcept { return data_->members.size(); }
  std::size_t population_size() const noexcept { return data_->in_frame.size(); }
  const std::vector<std::size_t>& members() const noexcept { return data_->members; }
  bool contains(std::size_t unit) const noexcept {
    return unit < data_->in_frame.size() && data_->in_frame[unit];
  }

private:
  struct Data {
    FrameKind kind;
    std::vector<std::size_t> members;
    std::vector<bool> in_frame;
  };
  explicit FrameRef(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
  std::shared_ptr<const Data> data_;
};

/// pi_i = n / N for simple random sampling without replacement.
double srs_first_order(std::size_t frame_size, std::size_t n);
/// pi_ij = n (n - 1) / (N (N - 1)) for i != j. Requires 2 <= n <= N.
double srs_second_order(std::size_t frame_size, std::size_t n);
/// Design covariance pi_ij - pi_i pi_j.
inline double delta(double pi_i, double pi_j, double pi_ij) noexcept { return pi_ij - pi_i * pi_j; }

/// Simple random sampling of n units without replacement from a frame.
class SrsDesign {
public:
  SrsDesign(FrameRef frame, std::size_t n);

  const FrameRef& frame() const noexcept { return frame_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t frame_size() const noexcept { return frame_.size(); }
  bool is_census() const noexcept { return n_ == frame_.size(); }

  /// First-order inclusion probability of a population unit (0 outside the frame).
  double pi(std::size_t unit) const noexcept;
  /// Second-order inclusion probability; pi2(i, i) == pi(i).
  double pi2(std::size_t unit_i, std::size_t unit_j) const noexcept;

  /// The constant in-frame values, for closed-form paths.
  double pi_value() const noexcept { return pi_; }
  double pi2_value() const noexcept { return pi2_; }

private:
  FrameRef frame_;
  std::size_t n_;
  double pi_;
  double pi2_;
};

/// A drawn sample: distinct population units (ascending frame position)
/// together with the design that produced it.
class Sample {
public:
  Sample(SrsDesign design, std::vector<std::size_t> units);

  const SrsDesign& design() const noexcept { return design_; }
  const FrameRef& frame() const noexcept { return design_.frame(); }
  const std::vector<std::size_t>& units() const noexcept { return units_; }
  std::size_t n() const noexcept { return units_.size(); }
  double pi(std::size_t unit) const noexcept { return design_.pi(unit); }
  double pi2(std::size_t i, std::size_t j) const noexcept { return design_.pi2(i, j); }

  /// Study values of the sampled units, aligned with units().
  std::vector<double> y_values(const Population& pop) const;

private:
  SrsDesign design_;
  std::vector<std::size_t> units_;
};

/// Repeated SRS draws from one frame via partial Fisher-Yates on a scratch
/// permutation that is restored after each draw, so every draw costs O(n)
/// and depends only on the rng state passed in.
class SrsSampler {
public:
  explicit SrsSampler(FrameRef frame);
  Sample draw(std::size_t n, CounterRng& rng);
  const FrameRef& frame() const noexcept { return frame_; }

private:
  FrameRef frame_;
  std::vector<std::size_t> scratch_;
  std::vector<std::pair<std::size_t, std::size_t>> swaps_;
};

Sample draw_srs(const FrameRef& frame, std::size_t n, CounterRng& rng);

/// Binomial coefficient, saturating at UINT64_MAX.
std::uint64_t binomial(std::size_t n, std::size_t k) noexcept;

/// Every size-n subset of a frame in lexicographic order of frame position.
/// Throws DomainError at construction if the count exceeds `cap`.
class SampleEnumeration {
public:
  static constexpr std::uint64_t kDefaultCap = 1'000'000;

  SampleEnumeration(const FrameRef& frame, std::size_t n, std::uint64_t cap = kDefaultCap);

  std::uint64_t count() const noexcept { return count_; }
  /// Design probability of each sample, 1 / C(N, n).
  double probability() const noexcept { return 1.0 / static_cast<double>(count_); }
  std::optional<Sample> next();

private:
  SrsDesign design_;
  std::vector<std::size_t> positions_;
  std::uint64_t count_;
  bool done_ = false;
};

/// Audit export: one column `id`.
void write_sample_csv(std::ostream& out, const Population& pop, const Sample& sample);
/// Reads an `id` file and builds a sample under SRS of the given frame.
Sample read_sample_csv(std::istream& in, const Population& pop, const FrameRef& frame);

}  // namespace madi
