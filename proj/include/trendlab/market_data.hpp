#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "trendlab/date.hpp"

namespace trendlab {

// Regular session 9:30-16:00: bar stamped m covers [m, m+1), so the session
// grid is minutes 570..959 inclusive — exactly 390 bars per full day.
inline constexpr int kSessionOpenMinute = 570;
inline constexpr int kSessionCloseMinute = 960;
inline constexpr int kSessionMinutes = kSessionCloseMinute - kSessionOpenMinute; // 390

struct MinuteBar {
    Date date;
    int minute_of_day = 0; // 0..1439
    double close = 0.0;    // > 0
};

// Raw bars of one calendar day, sorted by minute, possibly sparse or off-session.
struct DayBars {
    Date date;
    std::vector<MinuteBar> bars;
};

// Per-instrument series, days sorted ascending.
struct MinuteSeries {
    std::vector<DayBars> days;
};

// A session-filtered day: exactly kSessionMinutes bars on the session grid.
// Produced by filter_sessions; bar index i corresponds to minute 570+i.
struct TradingDay {
    Date date;
    std::vector<MinuteBar> bars;

    double close_at(int index) const { return bars[static_cast<std::size_t>(index)].close; }
};

struct SessionCalendar {
    std::set<Date> excluded_dates; // earnings periods, known partial sessions
    int session_open = kSessionOpenMinute;
    int session_close = kSessionCloseMinute;
};

struct SessionFilterResult {
    struct DroppedDay {
        Date date;
        std::string reason; // "partial session" | "calendar exclusion"
    };
    std::vector<TradingDay> days;
    std::vector<DroppedDay> dropped;
};

struct SyntheticSpec {
    enum class Regime { random_walk, sinusoid };

    Regime regime = Regime::random_walk;
    int n_days = 10;
    Date start_date{2020, 1, 6};
    double base_price = 100.0;

    // random walk (per-minute log-return drift and volatility)
    double drift_per_min = 0.0;
    double vol_per_min = 5e-4;

    // sinusoid
    double amplitude = 5.0;
    double period_minutes = 390.0;
    double phase = 0.0;
};

// CSV in: header required; columns located by name (`date,minute,close`
// minimum; OHLCV and extra columns ignored). Throws ParseError with the line
// number on malformed rows, ValidationError on non-positive prices or
// duplicate (date, minute) stamps.
MinuteSeries load_minute_series(const std::string& path);

// Writes the minimal `date,minute,close` schema, full double precision.
void write_minute_series(const std::string& path, const MinuteSeries& series);

// One excluded ISO date per line; blank lines and '#' comments skipped.
SessionCalendar load_calendar(const std::string& path);

// Keeps only complete regular sessions: off-session bars discarded, excluded
// dates dropped, days missing more than 5% of session minutes dropped,
// surviving gaps forward-filled (leading gap back-filled from the first
// present close).
SessionFilterResult filter_sessions(const MinuteSeries& series, const SessionCalendar& cal);

// Pure function of (spec, seed); emits dense session-grid days on consecutive
// weekdays. Throws ValidationError on a non-positive base price or an
// amplitude that reaches the base price.
MinuteSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

} // namespace trendlab
