#pragma once

#include <cmath>
#include <span>

namespace madi {

/// Neumaier-compensated accumulator. All totals over U and over samples go
/// through this so that the result does not depend on how work was chunked.
class CompensatedSum {
public:
  CompensatedSum& add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
    return *this;
  }
  CompensatedSum& operator+=(double v) noexcept { return add(v); }
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc += v;
  return acc.value();
}

inline double compensated_mean(std::span<const double> values) noexcept {
  return values.empty() ? 0.0 : compensated_sum(values) / static_cast<double>(values.size());
}

}  // namespace madi
