#include "hierion/trend.hpp"

#include <algorithm>
#include <iterator>
#include <optional>
#include <cmath>
#include <string>

#include "hierion/error.hpp"

namespace hierion::trend {

Change change_between(double prev, double curr, double eps) {
  const double diff = curr - prev;
  if (std::abs(diff) <= eps) return Change::Flat;
  return diff > 0 ? Change::Up : Change::Down;
}

TrendClass step_estimate(TrendClass prev, double x_prev, double x_curr, double eps) {
  const Change c = change_between(x_prev, x_curr, eps);
  switch (prev) {
    case TrendClass::Constant:
      if (c == Change::Up) return TrendClass::Increasing;
      if (c == Change::Down) return TrendClass::Decreasing;
      return TrendClass::Constant;
    case TrendClass::Increasing:
      return c == Change::Down ? TrendClass::SinglePeak : TrendClass::Increasing;
    case TrendClass::Decreasing:
      return c == Change::Up ? TrendClass::SingleTrough : TrendClass::Decreasing;
    case TrendClass::SinglePeak:
      return c == Change::Up ? TrendClass::Bounded : TrendClass::SinglePeak;
    case TrendClass::SingleTrough:
      return c == Change::Down ? TrendClass::Bounded : TrendClass::SingleTrough;
    case TrendClass::Bounded:
    case TrendClass::Cyclic:
    case TrendClass::Unclassified:
      return prev;
  }
  return TrendClass::Unclassified;
}

namespace {

void check_series(const Series& series) {
  if (series.size() < 2) {
    throw Error(ErrorCode::TooShortSeries,
                "series needs at least 2 points, got " +
                    std::to_string(series.size()));
  }
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].tick <= series[i - 1].tick) {
      throw Error(ErrorCode::NonMonotoneTicks,
                  "series ticks not strictly increasing at tick " +
                      std::to_string(series[i].tick));
    }
  }
}

// Indices where a monotone run starts: the series start, every turning point
// and the series end. A turning point sits at the start of the first step in
// the new direction.
std::vector<std::size_t> pivots(const Series& s, double eps) {
  std::vector<std::size_t> out{0};
  std::optional<Change> dir;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const Change c = change_between(s[i - 1].value, s[i].value, eps);
    if (c == Change::Flat) continue;
    if (dir && c != *dir) out.push_back(i - 1);
    dir = c;
  }
  if (out.back() != s.size() - 1) out.push_back(s.size() - 1);
  return out;
}

TrendClass resolve_multi_reversal(const Series& s, double eps) {
  const auto piv = pivots(s, eps);
  std::vector<double> swings;
  for (std::size_t k = 1; k < piv.size(); ++k) {
    swings.push_back(std::abs(s[piv[k]].value - s[piv[k - 1]].value));
  }
  bool cyclic = true;
  for (std::size_t k = 1; k < swings.size() && cyclic; ++k) {
    if (swings[k - 1] <= 0.0) {
      cyclic = false;
      break;
    }
    const double ratio = swings[k] / swings[k - 1];
    cyclic = ratio >= kCyclicRatioLow && ratio <= kCyclicRatioHigh;
  }
  if (cyclic) return TrendClass::Cyclic;

  // First window: from the start through the second turning point.
  const std::size_t window_end = piv[2];
  double lo = s[0].value;
  double hi = s[0].value;
  for (std::size_t i = 0; i <= window_end; ++i) {
    lo = std::min(lo, s[i].value);
    hi = std::max(hi, s[i].value);
  }
  for (std::size_t i = window_end + 1; i < s.size(); ++i) {
    if (s[i].value < lo - eps || s[i].value > hi + eps) {
      return TrendClass::Unclassified;
    }
  }
  return TrendClass::Bounded;
}

}  // namespace

int count_reversals(const Series& series, double eps) {
  int reversals = 0;
  std::optional<Change> dir;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const Change c = change_between(series[i - 1].value, series[i].value, eps);
    if (c == Change::Flat) continue;
    if (dir && c != *dir) ++reversals;
    dir = c;
  }
  return reversals;
}

TrendEstimate classify_series(const Series& series, double eps) {
  if (eps < 0) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be non-negative");
  }
  check_series(series);
  TrendClass cls = TrendClass::Constant;
  for (std::size_t i = 1; i < series.size(); ++i) {
    cls = step_estimate(cls, series[i - 1].value, series[i].value, eps);
  }
  if (cls == TrendClass::Bounded) cls = resolve_multi_reversal(series, eps);
  return TrendEstimate{cls, {series.front().tick, series.back().tick}, series, eps};
}

std::vector<TrendEstimate> segment_series(const Series& series,
                                          const std::vector<Tick>& breakpoints,
                                          double eps) {
  check_series(series);
  const Tick first = series.front().tick;
  const Tick last = series.back().tick;
  std::vector<Tick> bounds{first};
  for (Tick b : breakpoints) {
    if (b <= bounds.back() || b >= last) {
      throw Error(ErrorCode::BreakpointOutOfRange,
                  "breakpoint " + std::to_string(b) + " outside (" +
                      std::to_string(bounds.back()) + ", " +
                      std::to_string(last) + ")");
    }
    bounds.push_back(b);
  }
  bounds.push_back(last);

  std::vector<TrendEstimate> out;
  for (std::size_t k = 1; k < bounds.size(); ++k) {
    Series slice;
    std::copy_if(series.begin(), series.end(), std::back_inserter(slice),
                 [&](const SeriesPoint& p) {
                   return p.tick >= bounds[k - 1] && p.tick <= bounds[k];
                 });
    TrendEstimate est = classify_series(slice, eps);
    est.interval = {bounds[k - 1], bounds[k]};
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace hierion::trend
