#include "trendlab/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "trendlab/rng.hpp"

namespace trendlab {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (lower(header[i]) == name) return static_cast<int>(i);
    return -1;
}

double parse_price(const std::string& s, int line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad price '" + s + "'");
    }
}

int parse_minute(const std::string& s, int line_no) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad minute '" + s + "'");
    }
}

} // namespace

MinuteSeries load_minute_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "': empty file, header required");
    const auto header = split_csv(line);
    const int c_date = find_column(header, "date");
    const int c_minute = find_column(header, "minute");
    const int c_close = find_column(header, "close");
    if (c_date < 0 || c_minute < 0 || c_close < 0)
        throw ParseError("'" + path + "': header must name date, minute and close columns");
    const std::size_t min_cols =
        static_cast<std::size_t>(std::max({c_date, c_minute, c_close})) + 1;

    std::map<Date, std::vector<MinuteBar>> by_date;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cols = split_csv(line);
        if (cols.size() < min_cols)
            throw ParseError("line " + std::to_string(line_no) + ": expected at least " +
                             std::to_string(min_cols) + " columns, got " +
                             std::to_string(cols.size()));
        Date date;
        try {
            date = Date::parse(cols[static_cast<std::size_t>(c_date)]);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const int minute = parse_minute(cols[static_cast<std::size_t>(c_minute)], line_no);
        const double close = parse_price(cols[static_cast<std::size_t>(c_close)], line_no);
        if (minute < 0 || minute > 1439)
            throw ValidationError("line " + std::to_string(line_no) + ": minute " +
                                  std::to_string(minute) + " outside 0..1439");
        if (!(close > 0.0) || !std::isfinite(close))
            throw ValidationError("line " + std::to_string(line_no) + ": non-positive close " +
                                  cols[static_cast<std::size_t>(c_close)]);
        by_date[date].push_back(MinuteBar{date, minute, close});
    }

    MinuteSeries series;
    for (auto& [date, bars] : by_date) {
        std::stable_sort(bars.begin(), bars.end(),
                         [](const MinuteBar& a, const MinuteBar& b) {
                             return a.minute_of_day < b.minute_of_day;
                         });
        for (std::size_t i = 1; i < bars.size(); ++i)
            if (bars[i].minute_of_day == bars[i - 1].minute_of_day)
                throw ValidationError("duplicate timestamp " + date.to_string() + " minute " +
                                      std::to_string(bars[i].minute_of_day));
        series.days.push_back(DayBars{date, std::move(bars)});
    }
    return series;
}

void write_minute_series(const std::string& path, const MinuteSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "date,minute,close\n";
    char buf[64];
    for (const auto& day : series.days)
        for (const auto& bar : day.bars) {
            std::snprintf(buf, sizeof(buf), "%.17g", bar.close);
            out << day.date.to_string() << ',' << bar.minute_of_day << ',' << buf << '\n';
        }
}

SessionCalendar load_calendar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open calendar '" + path + "'");
    SessionCalendar cal;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        cal.excluded_dates.insert(Date::parse(line));
    }
    return cal;
}

SessionFilterResult filter_sessions(const MinuteSeries& series, const SessionCalendar& cal) {
    SessionFilterResult result;
    const int open = cal.session_open;
    const int close = cal.session_close;
    const int session_len = close - open;
    const int max_missing = session_len / 20; // 5% cap

    for (const auto& day : series.days) {
        if (cal.excluded_dates.count(day.date)) {
            result.dropped.push_back({day.date, "calendar exclusion"});
            continue;
        }

        // Session-grid slots; off-hours bars are ignored.
        std::vector<const MinuteBar*> slot(static_cast<std::size_t>(session_len), nullptr);
        int present = 0;
        for (const auto& bar : day.bars) {
            if (bar.minute_of_day < open || bar.minute_of_day >= close) continue;
            auto& s = slot[static_cast<std::size_t>(bar.minute_of_day - open)];
            if (!s) ++present;
            s = &bar;
        }
        if (session_len - present > max_missing) {
            result.dropped.push_back({day.date, "partial session"});
            continue;
        }

        TradingDay td;
        td.date = day.date;
        td.bars.reserve(static_cast<std::size_t>(session_len));
        double last_close = 0.0;
        for (const auto* s : slot)
            if (s) {
                last_close = s->close; // first present close back-fills a leading gap
                break;
            }
        for (int i = 0; i < session_len; ++i) {
            const auto* s = slot[static_cast<std::size_t>(i)];
            if (s) last_close = s->close;
            td.bars.push_back(MinuteBar{day.date, open + i, last_close});
        }
        result.days.push_back(std::move(td));
    }
    return result;
}

MinuteSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (!(spec.base_price > 0.0))
        throw ValidationError("synthetic base price must be positive");
    if (spec.n_days < 1) throw ValidationError("synthetic day count must be >= 1");
    if (spec.regime == SyntheticSpec::Regime::sinusoid) {
        if (spec.amplitude < 0.0) throw ValidationError("sinusoid amplitude must be >= 0");
        if (spec.amplitude >= spec.base_price)
            throw ValidationError("sinusoid amplitude must stay below the base price");
        if (!(spec.period_minutes > 0.0))
            throw ValidationError("sinusoid period must be positive");
    } else {
        if (spec.vol_per_min < 0.0) throw ValidationError("random-walk volatility must be >= 0");
    }

    Rng rng(seed);
    MinuteSeries series;
    Date date = spec.start_date;
    if (weekday(date) >= 5) date = next_weekday(date);

    double log_price = std::log(spec.base_price);
    std::int64_t global_minute = 0; // continuous phase across days
    constexpr double two_pi = 6.283185307179586476925286766559;

    for (int d = 0; d < spec.n_days; ++d) {
        DayBars day;
        day.date = date;
        day.bars.reserve(kSessionMinutes);
        for (int i = 0; i < kSessionMinutes; ++i, ++global_minute) {
            double px;
            if (spec.regime == SyntheticSpec::Regime::sinusoid) {
                px = spec.base_price +
                     spec.amplitude * std::sin(two_pi * static_cast<double>(global_minute) /
                                                   spec.period_minutes +
                                               spec.phase);
            } else {
                if (global_minute > 0)
                    log_price += spec.drift_per_min + spec.vol_per_min * rng.normal();
                px = std::exp(log_price);
            }
            day.bars.push_back(MinuteBar{date, kSessionOpenMinute + i, px});
        }
        series.days.push_back(std::move(day));
        date = next_weekday(date);
    }
    return series;
}

} // namespace trendlab
