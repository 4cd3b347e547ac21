#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tailtree/errors.hpp"

namespace tailtree {

/// Seconds since the Unix epoch; days are civil days of that epoch.
using TimePoint = std::int64_t;
using Day = std::int64_t;

/// Parses "YYYY-MM-DD" optionally followed by "THH:MM[:SS]" or " HH:MM[:SS]".
TimePoint parse_timestamp(const std::string& text);
Day day_of(TimePoint t);
std::string format_day(Day d);
/// Month of a civil day, 1..12.
int month_of_day(Day d);

/// Time-ordered observation table; NaN marks a missing cell.
struct TimeSeriesTable {
  std::vector<std::string> stations;
  std::vector<TimePoint> times;  // strictly increasing
  Eigen::MatrixXd values;
};

/// One row per declustered event.
struct EventTable {
  std::vector<std::string> stations;
  std::vector<Day> dates;                      // event centers, ascending
  std::vector<std::pair<Day, Day>> windows;    // inclusive day ranges
  Eigen::MatrixXd values;
};

TimeSeriesTable read_timeseries_csv(std::istream& in);
TimeSeriesTable read_timeseries_csv(const std::string& path);
std::string format_event_csv(const EventTable& events);
EventTable read_event_csv(std::istream& in);
EventTable read_event_csv(const std::string& path);

/// Arithmetic mean per station per civil day; a station with no reading on a
/// day stays missing, and days with no readings at all are dropped.
TimeSeriesTable daily_average(const TimeSeriesTable& raw);

/// Rank-sum declustering. Each station's daily series is ranked once
/// (average ranks, missing cells skipped) and rank sums are accumulated per
/// day. Repeatedly: take the remaining day with the largest rank sum
/// (earliest date on ties), carve the window of up to 2r+1 consecutive
/// remaining days around it (shifted inward where the contiguous run is cut
/// by a boundary, a gap, or an earlier window), record station-wise window
/// maxima as one event, and remove the window's days.
EventTable decluster(const TimeSeriesTable& daily, int r);

/// Per station, removes season offsets (spring = Mar-May, summer = Jun-Aug,
/// winter = Dec-Feb, autumn baseline) and a linear trend in the event index
/// by ordinary least squares; returns the residuals.
EventTable deseasonalize(const EventTable& events);

}  // namespace tailtree
