#include "tailtree/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tailtree/csv.hpp"
#include "tailtree/estimate.hpp"

namespace tailtree {

namespace {

bool parse_int(const std::string& s, std::size_t from, std::size_t len, int& out) {
  if (from + len > s.size()) return false;
  const char* first = s.data() + from;
  const auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc() && ptr == first + len;
}

}  // namespace

TimePoint parse_timestamp(const std::string& text) {
  using namespace std::chrono;
  int y = 0, mo = 0, da = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' ||
      !parse_int(text, 0, 4, y) || !parse_int(text, 5, 2, mo) ||
      !parse_int(text, 8, 2, da))
    throw UnparseableTimestamp("bad timestamp: " + text);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(da)}};
  if (!ymd.ok()) throw UnparseableTimestamp("bad calendar date: " + text);
  std::int64_t seconds =
      static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * 86400;

  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ')
      throw UnparseableTimestamp("bad timestamp: " + text);
    int hh = 0, mm = 0, ss = 0;
    if (text.size() < 16 || text[13] != ':' || !parse_int(text, 11, 2, hh) ||
        !parse_int(text, 14, 2, mm))
      throw UnparseableTimestamp("bad timestamp: " + text);
    if (text.size() > 16) {
      if (text.size() < 19 || text[16] != ':' || !parse_int(text, 17, 2, ss))
        throw UnparseableTimestamp("bad timestamp: " + text);
    }
    if (hh > 23 || mm > 59 || ss > 60)
      throw UnparseableTimestamp("bad time of day: " + text);
    seconds += hh * 3600 + mm * 60 + ss;
  }
  return seconds;
}

Day day_of(TimePoint t) {
  // floor division: timestamps before the epoch still map to their civil day
  return t >= 0 ? t / 86400 : (t - 86399) / 86400;
}

std::string format_day(Day d) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{d}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int month_of_day(Day d) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{d}}};
  return static_cast<int>(static_cast<unsigned>(ymd.month()));
}

TimeSeriesTable read_timeseries_csv(std::istream& in) {
  const CsvTable csv = read_csv(in);
  if (csv.header.size() < 2)
    throw ParseError("time series needs a timestamp column and a station");
  TimeSeriesTable table;
  table.stations.assign(csv.header.begin() + 1, csv.header.end());
  const std::size_t cols = table.stations.size();
  table.values.resize(static_cast<Eigen::Index>(csv.rows.size()),
                      static_cast<Eigen::Index>(cols));
  table.times.reserve(csv.rows.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    if (row.size() != cols + 1)
      throw ParseError("row " + std::to_string(i + 2) + " has " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(cols + 1));
    const TimePoint t = parse_timestamp(row[0]);
    if (!table.times.empty() && t <= table.times.back())
      throw ParseError("timestamps must be strictly increasing at row " +
                       std::to_string(i + 2));
    table.times.push_back(t);
    for (std::size_t c = 0; c < cols; ++c)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          row[c + 1].empty() ? std::numeric_limits<double>::quiet_NaN()
                             : parse_csv_double(row[c + 1]);
  }
  return table;
}

TimeSeriesTable read_timeseries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path);
  return read_timeseries_csv(in);
}

std::string format_event_csv(const EventTable& events) {
  std::ostringstream out;
  out << "event_date";
  for (const auto& s : events.stations) out << "," << s;
  out << "\n";
  for (std::size_t i = 0; i < events.dates.size(); ++i) {
    out << format_day(events.dates[i]);
    for (Eigen::Index c = 0; c < events.values.cols(); ++c) {
      out << ",";
      const double v = events.values(static_cast<Eigen::Index>(i), c);
      if (!std::isnan(v)) out << format_csv_double(v);
    }
    out << "\n";
  }
  return out.str();
}

EventTable read_event_csv(std::istream& in) {
  const CsvTable csv = read_csv(in);
  if (csv.header.empty() || csv.header[0] != "event_date")
    throw ParseError("event table must start with an event_date column");
  EventTable events;
  events.stations.assign(csv.header.begin() + 1, csv.header.end());
  events.values.resize(static_cast<Eigen::Index>(csv.rows.size()),
                       static_cast<Eigen::Index>(events.stations.size()));
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    if (row.size() != events.stations.size() + 1)
      throw ParseError("bad field count at row " + std::to_string(i + 2));
    events.dates.push_back(day_of(parse_timestamp(row[0])));
    for (std::size_t c = 0; c < events.stations.size(); ++c)
      events.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          row[c + 1].empty() ? std::numeric_limits<double>::quiet_NaN()
                             : parse_csv_double(row[c + 1]);
  }
  events.windows.assign(events.dates.size(), {0, 0});
  for (std::size_t i = 0; i < events.dates.size(); ++i)
    events.windows[i] = {events.dates[i], events.dates[i]};
  return events;
}

EventTable read_event_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path);
  return read_event_csv(in);
}

TimeSeriesTable daily_average(const TimeSeriesTable& raw) {
  const Eigen::Index cols = raw.values.cols();
  std::map<Day, std::pair<Eigen::VectorXd, Eigen::VectorXi>> acc;
  for (std::size_t i = 0; i < raw.times.size(); ++i) {
    const Day d = day_of(raw.times[i]);
    auto it = acc.find(d);
    if (it == acc.end())
      it = acc.emplace(d, std::make_pair(Eigen::VectorXd::Zero(cols),
                                         Eigen::VectorXi::Zero(cols)))
               .first;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = raw.values(static_cast<Eigen::Index>(i), c);
      if (std::isnan(v)) continue;
      it->second.first(c) += v;
      it->second.second(c) += 1;
    }
  }

  TimeSeriesTable daily;
  daily.stations = raw.stations;
  std::vector<std::pair<Day, Eigen::VectorXd>> rows;
  for (const auto& [d, sums] : acc) {
    Eigen::VectorXd row(cols);
    bool any = false;
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (sums.second(c) > 0) {
        row(c) = sums.first(c) / sums.second(c);
        any = true;
      } else {
        row(c) = std::numeric_limits<double>::quiet_NaN();
      }
    }
    if (any) rows.emplace_back(d, std::move(row));
  }
  daily.times.reserve(rows.size());
  daily.values.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    daily.times.push_back(rows[i].first * 86400);
    daily.values.row(static_cast<Eigen::Index>(i)) = rows[i].second.transpose();
  }
  return daily;
}

EventTable decluster(const TimeSeriesTable& daily, int r) {
  if (r < 0) throw DimensionMismatch("window radius must be nonnegative");
  const Eigen::Index n = daily.values.rows();
  const Eigen::Index cols = daily.values.cols();

  // per-station average ranks over the non-missing days, computed once
  Eigen::VectorXd rank_sum = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < cols; ++c) {
    std::vector<Eigen::Index> present;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isnan(daily.values(i, c))) present.push_back(i);
    std::stable_sort(present.begin(), present.end(), [&](Eigen::Index a, Eigen::Index b) {
      return daily.values(a, c) < daily.values(b, c);
    });
    std::size_t i = 0;
    while (i < present.size()) {
      std::size_t j = i;
      while (j + 1 < present.size() &&
             daily.values(present[j + 1], c) == daily.values(present[i], c))
        ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) rank_sum(present[t]) += avg;
      i = j + 1;
    }
  }

  std::map<Day, Eigen::Index> row_of;
  for (Eigen::Index i = 0; i < n; ++i) row_of.emplace(day_of(daily.times[i]), i);

  std::set<Day> remaining;
  for (const auto& [d, i] : row_of) remaining.insert(d);

  struct Event {
    Day center;
    Day lo, hi;
    Eigen::VectorXd maxima;
  };
  std::vector<Event> events;
  const int span = 2 * r + 1;

  while (!remaining.empty()) {
    // day with the largest rank sum, earliest on ties
    Day best_day = 0;
    double best_sum = -1.0;
    for (Day d : remaining) {
      const double s = rank_sum(row_of.at(d));
      if (s > best_sum) {
        best_sum = s;
        best_day = d;
      }
    }

    // contiguous run of remaining days around the center
    Day run_lo = best_day, run_hi = best_day;
    while (remaining.count(run_lo - 1)) --run_lo;
    while (remaining.count(run_hi + 1)) ++run_hi;

    Day lo, hi;
    if (run_hi - run_lo + 1 <= span) {
      lo = run_lo;
      hi = run_hi;
    } else {
      lo = std::clamp(best_day - r, run_lo, run_hi - span + 1);
      hi = lo + span - 1;
    }

    Event ev;
    ev.center = best_day;
    ev.lo = lo;
    ev.hi = hi;
    ev.maxima = Eigen::VectorXd::Constant(cols, std::numeric_limits<double>::quiet_NaN());
    for (Day d = lo; d <= hi; ++d) {
      const auto it = row_of.find(d);
      if (it == row_of.end()) continue;
      remaining.erase(d);
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double v = daily.values(it->second, c);
        if (std::isnan(v)) continue;
        if (std::isnan(ev.maxima(c)) || v > ev.maxima(c)) ev.maxima(c) = v;
      }
    }
    events.push_back(std::move(ev));
  }

  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.center < b.center; });

  EventTable out;
  out.stations = daily.stations;
  out.values.resize(static_cast<Eigen::Index>(events.size()), cols);
  for (std::size_t i = 0; i < events.size(); ++i) {
    out.dates.push_back(events[i].center);
    out.windows.emplace_back(events[i].lo, events[i].hi);
    out.values.row(static_cast<Eigen::Index>(i)) = events[i].maxima.transpose();
  }
  return out;
}

EventTable deseasonalize(const EventTable& events) {
  const Eigen::Index n = static_cast<Eigen::Index>(events.dates.size());
  const Eigen::Index cols = events.values.cols();
  EventTable out = events;

  for (Eigen::Index c = 0; c < cols; ++c) {
    std::vector<Eigen::Index> present;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isnan(events.values(i, c))) present.push_back(i);
    if (present.size() < 8)
      throw RankDeficientDesign("station " + events.stations[static_cast<std::size_t>(c)] +
                                " has fewer than 8 events");

    Eigen::MatrixXd design(static_cast<Eigen::Index>(present.size()), 5);
    Eigen::VectorXd y(static_cast<Eigen::Index>(present.size()));
    for (std::size_t i = 0; i < present.size(); ++i) {
      const int month = month_of_day(events.dates[static_cast<std::size_t>(present[i])]);
      const double spring = (month >= 3 && month <= 5) ? 1.0 : 0.0;
      const double summer = (month >= 6 && month <= 8) ? 1.0 : 0.0;
      const double winter = (month == 12 || month <= 2) ? 1.0 : 0.0;
      design(static_cast<Eigen::Index>(i), 0) = 1.0;
      design(static_cast<Eigen::Index>(i), 1) = spring;
      design(static_cast<Eigen::Index>(i), 2) = summer;
      design(static_cast<Eigen::Index>(i), 3) = winter;
      design(static_cast<Eigen::Index>(i), 4) = static_cast<double>(present[i] + 1);
      y(static_cast<Eigen::Index>(i)) = events.values(present[i], c);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 5)
      throw RankDeficientDesign("seasonal design is rank deficient for station " +
                                events.stations[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - design * beta;
    for (std::size_t i = 0; i < present.size(); ++i)
      out.values(present[i], c) = resid(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace tailtree
