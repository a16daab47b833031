#pragma once

// Qualitative trend estimation of a single parameter series.
//
// The running estimate follows S(t) = F(S(t-1), X(t-1), X(t)) where F is a
// finite table over the previous class and the sign of the change:
//
//   prev \ change   up            flat          down
//   Constant        Increasing    Constant      Decreasing
//   Increasing      Increasing    Increasing    SinglePeak
//   Decreasing      SingleTrough  Decreasing    Decreasing
//   SinglePeak      Bounded       SinglePeak    SinglePeak
//   SingleTrough    SingleTrough  SingleTrough  Bounded
//   Bounded         Bounded       Bounded       Bounded
//   Cyclic          Cyclic        Cyclic        Cyclic
//   Unclassified    Unclassified  Unclassified  Unclassified
//
// Bounded doubles as the accumulation state reached after the second
// direction reversal; classify_series resolves it into Cyclic, Bounded or
// Unclassified from the swing amplitudes.

#include <vector>

#include "hierion/model.hpp"

namespace hierion::trend {

enum class Change { Up, Flat, Down };

// |curr - prev| <= eps is Flat.
Change change_between(double prev, double curr, double eps);

TrendClass step_estimate(TrendClass prev, double x_prev, double x_curr, double eps);

struct TrendEstimate {
  TrendClass cls = TrendClass::Unclassified;
  TimeInterval interval;
  Series support;
  double tolerance = 0.0;

  bool operator==(const TrendEstimate&) const = default;
};

// Successive swing amplitudes may differ by at most this factor for Cyclic.
inline constexpr double kCyclicRatioLow = 0.5;
inline constexpr double kCyclicRatioHigh = 2.0;

// Number of direction reversals once flat steps are dropped.
int count_reversals(const Series& series, double eps);

// Throws TooShortSeries (< 2 points) or NonMonotoneTicks.
TrendEstimate classify_series(const Series& series, double eps = 0.0);

// One estimate per sub-interval [first, b1], [b1, b2], ..., [bk, last].
// Breakpoints must be strictly increasing and strictly inside the series
// range (BreakpointOutOfRange); each slice needs two samples.
std::vector<TrendEstimate> segment_series(const Series& series,
                                          const std::vector<Tick>& breakpoints,
                                          double eps = 0.0);

}  // namespace hierion::trend
