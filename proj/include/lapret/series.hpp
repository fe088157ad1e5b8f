#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>

#include "lapret/error.hpp"

namespace lapret {

using Day = std::int32_t;

/// A contiguous run of daily values starting at `first_day`.
template <typename Scalar>
struct DaySeries {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Day first_day = 1;
  Vector values;

  DaySeries() = default;
  DaySeries(Day first, Vector v) : first_day(first), values(std::move(v)) {}

  Eigen::Index size() const { return values.size(); }
  bool empty() const { return values.size() == 0; }
  Day last_day() const { return first_day + static_cast<Day>(values.size()) - 1; }
  bool contains(Day day) const { return day >= first_day && day <= last_day(); }

  Scalar at(Day day) const {
    if (!contains(day)) throw Error(ErrorCode::invalid_argument, "day " + std::to_string(day) + " outside series");
    return values[day - first_day];
  }
  Scalar operator[](Day day) const { return values[day - first_day]; }

  /// View of the values on [from, to], both inclusive and inside the series.
  auto segment(Day from, Day to) const { return values.segment(from - first_day, to - from + 1); }

  bool operator==(const DaySeries& other) const {
    return first_day == other.first_day && values.size() == other.values.size() && values == other.values;
  }
};

using Series = DaySeries<double>;

/// Backward first difference: out[t] = in[t] - in[t-1], defined from first_day + 1.
template <typename Scalar>
DaySeries<Scalar> backward_difference(const DaySeries<Scalar>& in) {
  if (in.size() < 2) return {in.first_day + 1, typename DaySeries<Scalar>::Vector()};
  const Eigen::Index n = in.size() - 1;
  return {in.first_day + 1, in.values.tail(n) - in.values.head(n)};
}

/// Restriction of `in` to the days shared with [from, to]; empty when disjoint.
template <typename Scalar>
DaySeries<Scalar> clip(const DaySeries<Scalar>& in, Day from, Day to) {
  const Day lo = std::max(from, in.first_day);
  const Day hi = std::min(to, in.last_day());
  if (hi < lo) return {lo, typename DaySeries<Scalar>::Vector()};
  return {lo, in.segment(lo, hi)};
}

}  // namespace lapret
