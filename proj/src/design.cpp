#include "madi/design.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "madi/error.hpp"

namespace madi {

FrameRef FrameRef::whole(std::size_t population_size) {
  std::vector<std::size_t> members(population_size);
  for (std::size_t i = 0; i < population_size; ++i) members[i] = i;
  return of_units(FrameKind::U, std::move(members), population_size);
}

FrameRef FrameRef::complement(const Partition& part) {
  return of_units(FrameKind::B, part.b_units(), part.size());
}

FrameRef FrameRef::of_units(FrameKind kind, std::vector<std::size_t> members, std::size_t population_size) {
  std::vector<bool> in_frame(population_size, false);
  for (std::size_t m : members) {
    if (m >= population_size) throw DomainError("frame member outside population");
    if (in_frame[m]) throw DomainError("frame members must be distinct");
    in_frame[m] = true;
  }
  return FrameRef(std::make_shared<const Data>(Data{kind, std::move(members), std::move(in_frame)}));
}

double srs_first_order(std::size_t frame_size, std::size_t n) {
  if (n < 1 || n > frame_size)
    throw DomainError("sample size " + std::to_string(n) + " outside 1.." + std::to_string(frame_size));
  return static_cast<double>(n) / static_cast<double>(frame_size);
}

double srs_second_order(std::size_t frame_size, std::size_t n) {
  if (n < 2 || n > frame_size)
    throw DomainError("second-order probabilities need 2 <= n <= N (n = " + std::to_string(n) +
                      ", N = " + std::to_string(frame_size) + ")");
  const double nn = static_cast<double>(n);
  const double bign = static_cast<double>(frame_size);
  return nn * (nn - 1.0) / (bign * (bign - 1.0));
}

SrsDesign::SrsDesign(FrameRef frame, std::size_t n) : frame_(std::move(frame)), n_(n) {
  pi_ = srs_first_order(frame_.size(), n_);
  pi2_ = n_ >= 2 ? srs_second_order(frame_.size(), n_) : 0.0;
}

double SrsDesign::pi(std::size_t unit) const noexcept { return frame_.contains(unit) ? pi_ : 0.0; }

double SrsDesign::pi2(std::size_t unit_i, std::size_t unit_j) const noexcept {
  if (!frame_.contains(unit_i) || !frame_.contains(unit_j)) return 0.0;
  return unit_i == unit_j ? pi_ : pi2_;
}

Sample::Sample(SrsDesign design, std::vector<std::size_t> units) : design_(std::move(design)), units_(std::move(units)) {
  if (units_.size() != design_.n())
    throw DomainError("sample has " + std::to_string(units_.size()) + " units, design expects " +
                      std::to_string(design_.n()));
  std::sort(units_.begin(), units_.end());
  for (std::size_t k = 0; k < units_.size(); ++k) {
    if (!design_.frame().contains(units_[k])) throw DomainError("sampled unit outside the frame");
    if (k > 0 && units_[k] == units_[k - 1]) throw DomainError("sampled units must be distinct");
  }
}

std::vector<double> Sample::y_values(const Population& pop) const {
  std::vector<double> out;
  out.reserve(units_.size());
  for (std::size_t i : units_) out.push_back(pop.y(i));
  return out;
}

SrsSampler::SrsSampler(FrameRef frame) : frame_(std::move(frame)), scratch_(frame_.members()) {}

Sample SrsSampler::draw(std::size_t n, CounterRng& rng) {
  SrsDesign design(frame_, n);
  const std::size_t size = scratch_.size();
  swaps_.clear();
  std::vector<std::size_t> units;
  units.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(size - k));
    std::swap(scratch_[k], scratch_[j]);
    swaps_.emplace_back(k, j);
    units.push_back(scratch_[k]);
  }
  for (auto it = swaps_.rbegin(); it != swaps_.rend(); ++it) std::swap(scratch_[it->first], scratch_[it->second]);
  return Sample(std::move(design), std::move(units));
}

Sample draw_srs(const FrameRef& frame, std::size_t n, CounterRng& rng) {
  SrsSampler sampler(frame);
  return sampler.draw(n, rng);
}

std::uint64_t binomial(std::size_t n, std::size_t k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

SampleEnumeration::SampleEnumeration(const FrameRef& frame, std::size_t n, std::uint64_t cap)
    : design_(frame, n), positions_(n), count_(binomial(frame.size(), n)) {
  if (count_ > cap)
    throw DomainError("enumerating C(" + std::to_string(frame.size()) + ", " + std::to_string(n) +
                      ") samples exceeds the cap of " + std::to_string(cap));
  for (std::size_t k = 0; k < n; ++k) positions_[k] = k;
}

std::optional<Sample> SampleEnumeration::next() {
  if (done_) return std::nullopt;
  const auto& members = design_.frame().members();
  std::vector<std::size_t> units;
  units.reserve(positions_.size());
  for (std::size_t pos : positions_) units.push_back(members[pos]);
  Sample out(design_, std::move(units));

  const std::size_t n = positions_.size();
  const std::size_t size = members.size();
  std::size_t k = n;
  while (k > 0 && positions_[k - 1] == size - n + k - 1) --k;
  if (k == 0) {
    done_ = true;
  } else {
    ++positions_[k - 1];
    for (std::size_t r = k; r < n; ++r) positions_[r] = positions_[r - 1] + 1;
  }
  return out;
}

void write_sample_csv(std::ostream& out, const Population& pop, const Sample& sample) {
  out << "id\n";
  for (std::size_t i : sample.units()) out << pop.unit(i).id << '\n';
}

Sample read_sample_csv(std::istream& in, const Population& pop, const FrameRef& frame) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next() || line != "id") throw ParseError("sample file must start with header 'id'", line_no);
  std::vector<std::size_t> units;
  while (next()) {
    std::size_t used = 0;
    long long id = 0;
    try {
      id = std::stoll(line, &used);
    } catch (const std::exception&) {
      throw ParseError("non-integer id '" + line + "'", line_no);
    }
    if (used != line.size()) throw ParseError("non-integer id '" + line + "'", line_no);
    std::size_t idx = 0;
    try {
      idx = pop.index_of(id);
    } catch (const DomainError&) {
      throw ParseError("id " + line + " not in population", line_no);
    }
    if (!frame.contains(idx)) throw ParseError("id " + line + " is not in the sampling frame", line_no);
    units.push_back(idx);
  }
  const std::size_t n = units.size();
  return Sample(SrsDesign(frame, n), std::move(units));
}

}  // namespace madi
