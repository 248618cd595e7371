#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "trendlab/errors.hpp"
#include "trendlab/market_data.hpp"

using namespace trendlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "trendlab_md_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_SUITE("market_data") {

TEST_CASE("load: two-row file echoes input") {
    const auto p = temp_file("two_rows.csv");
    write_text(p, "date,minute,close\n2015-01-05,570,100.0\n2015-01-05,571,100.5\n");
    const MinuteSeries s = load_minute_series(p.string());
    REQUIRE(s.days.size() == 1);
    REQUIRE(s.days[0].bars.size() == 2);
    CHECK(s.days[0].date == Date{2015, 1, 5});
    CHECK(s.days[0].bars[0].minute_of_day == 570);
    CHECK(s.days[0].bars[0].close == 100.0);
    CHECK(s.days[0].bars[1].close == 100.5);
}

TEST_CASE("load: non-positive close is a validation error") {
    const auto p = temp_file("neg_close.csv");
    write_text(p, "date,minute,close\n2015-01-05,570,-1.0\n");
    CHECK_THROWS_AS(load_minute_series(p.string()), ValidationError);
}

TEST_CASE("load: malformed row reports its line number") {
    const auto p = temp_file("malformed.csv");
    write_text(p, "date,minute,close\n2015-01-05,570,100.0\n2015-01-05,notaminute,100.0\n");
    try {
        load_minute_series(p.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("load: duplicate (date, minute) rejected") {
    const auto p = temp_file("dup.csv");
    write_text(p, "date,minute,close\n2015-01-05,571,100.0\n2015-01-05,570,99.0\n"
                  "2015-01-05,571,101.0\n");
    CHECK_THROWS_AS(load_minute_series(p.string()), ValidationError);
}

TEST_CASE("load: extended OHLCV schema accepted, extras ignored") {
    const auto p = temp_file("ohlcv.csv");
    write_text(p, "date,minute,open,high,low,close,volume\n"
                  "2015-01-05,570,99.0,101.0,98.5,100.25,12345\n");
    const MinuteSeries s = load_minute_series(p.string());
    REQUIRE(s.days.size() == 1);
    CHECK(s.days[0].bars[0].close == 100.25);
}

TEST_CASE("load: missing header column is a parse error") {
    const auto p = temp_file("no_close.csv");
    write_text(p, "date,minute,price\n2015-01-05,570,100.0\n");
    CHECK_THROWS_AS(load_minute_series(p.string()), ParseError);
}

TEST_CASE("round-trip: write then load is identity") {
    SyntheticSpec spec;
    spec.n_days = 3;
    const MinuteSeries original = generate_synthetic(spec, 42);
    const auto p = temp_file("roundtrip.csv");
    write_minute_series(p.string(), original);
    const MinuteSeries loaded = load_minute_series(p.string());
    REQUIRE(loaded.days.size() == original.days.size());
    for (std::size_t d = 0; d < original.days.size(); ++d) {
        REQUIRE(loaded.days[d].bars.size() == original.days[d].bars.size());
        CHECK(loaded.days[d].date == original.days[d].date);
        for (std::size_t i = 0; i < original.days[d].bars.size(); ++i) {
            CHECK(loaded.days[d].bars[i].minute_of_day ==
                  original.days[d].bars[i].minute_of_day);
            CHECK(loaded.days[d].bars[i].close == original.days[d].bars[i].close);
        }
    }
}

TEST_CASE("filter: half session dropped as partial") {
    MinuteSeries s;
    DayBars day;
    day.date = Date{2020, 1, 6};
    for (int i = 0; i < 200; ++i)
        day.bars.push_back(MinuteBar{day.date, kSessionOpenMinute + i, 100.0});
    s.days.push_back(day);
    const auto result = filter_sessions(s, SessionCalendar{});
    CHECK(result.days.empty());
    REQUIRE(result.dropped.size() == 1);
    CHECK(result.dropped[0].reason == "partial session");
}

TEST_CASE("filter: full day retained unchanged") {
    SyntheticSpec spec;
    spec.n_days = 1;
    const MinuteSeries s = generate_synthetic(spec, 9);
    const auto result = filter_sessions(s, SessionCalendar{});
    REQUIRE(result.days.size() == 1);
    REQUIRE(result.days[0].bars.size() == kSessionMinutes);
    for (int i = 0; i < kSessionMinutes; ++i) {
        CHECK(result.days[0].bars[std::size_t(i)].minute_of_day == kSessionOpenMinute + i);
        CHECK(result.days[0].bars[std::size_t(i)].close == s.days[0].bars[std::size_t(i)].close);
    }
}

TEST_CASE("filter: three missing interior minutes forward-filled to 390") {
    SyntheticSpec spec;
    spec.n_days = 1;
    MinuteSeries s = generate_synthetic(spec, 10);
    auto& bars = s.days[0].bars;
    // drop minutes at indices 100, 101, 250 (not adjacent to the open)
    const double fill_a = bars[99].close;
    const double fill_b = bars[249].close;
    bars.erase(bars.begin() + 250);
    bars.erase(bars.begin() + 101);
    bars.erase(bars.begin() + 100);
    REQUIRE(bars.size() == kSessionMinutes - 3);

    const auto result = filter_sessions(s, SessionCalendar{});
    REQUIRE(result.days.size() == 1);
    REQUIRE(result.days[0].bars.size() == kSessionMinutes);
    CHECK(result.days[0].bars[100].close == fill_a);
    CHECK(result.days[0].bars[101].close == fill_a);
    CHECK(result.days[0].bars[250].close == fill_b);
}

TEST_CASE("filter: missing-minute cap at 5%") {
    SyntheticSpec spec;
    spec.n_days = 1;
    MinuteSeries s = generate_synthetic(spec, 11);
    // 20 missing minutes (> 19.5 = 5% of 390) drops the day
    s.days[0].bars.erase(s.days[0].bars.begin() + 50, s.days[0].bars.begin() + 70);
    auto dropped = filter_sessions(s, SessionCalendar{});
    CHECK(dropped.days.empty());

    MinuteSeries s2 = generate_synthetic(spec, 11);
    // 19 missing minutes is still within the cap
    s2.days[0].bars.erase(s2.days[0].bars.begin() + 50, s2.days[0].bars.begin() + 69);
    auto kept = filter_sessions(s2, SessionCalendar{});
    REQUIRE(kept.days.size() == 1);
    CHECK(kept.days[0].bars.size() == kSessionMinutes);
}

TEST_CASE("filter: calendar exclusion") {
    SyntheticSpec spec;
    spec.n_days = 2;
    const MinuteSeries s = generate_synthetic(spec, 12);
    SessionCalendar cal;
    cal.excluded_dates.insert(s.days[0].date);
    const auto result = filter_sessions(s, cal);
    REQUIRE(result.days.size() == 1);
    CHECK(result.days[0].date == s.days[1].date);
    REQUIRE(result.dropped.size() == 1);
    CHECK(result.dropped[0].reason == "calendar exclusion");
}

TEST_CASE("filter: off-session bars are ignored") {
    SyntheticSpec spec;
    spec.n_days = 1;
    MinuteSeries s = generate_synthetic(spec, 13);
    s.days[0].bars.insert(s.days[0].bars.begin(),
                          MinuteBar{s.days[0].date, 300, 55.0}); // pre-market
    s.days[0].bars.push_back(MinuteBar{s.days[0].date, 1000, 55.0}); // post-market
    const auto result = filter_sessions(s, SessionCalendar{});
    REQUIRE(result.days.size() == 1);
    REQUIRE(result.days[0].bars.size() == kSessionMinutes);
    for (const auto& bar : result.days[0].bars) CHECK(bar.close != 55.0);
}

TEST_CASE("synthetic: 3-day series filters to 3 full trading days") {
    SyntheticSpec spec;
    spec.n_days = 3;
    const MinuteSeries s = generate_synthetic(spec, 21);
    const auto result = filter_sessions(s, SessionCalendar{});
    REQUIRE(result.days.size() == 3);
    for (const auto& day : result.days) CHECK(day.bars.size() == kSessionMinutes);
}

TEST_CASE("synthetic: zero amplitude sinusoid is constant") {
    SyntheticSpec spec;
    spec.regime = SyntheticSpec::Regime::sinusoid;
    spec.amplitude = 0.0;
    spec.n_days = 2;
    spec.base_price = 123.0;
    const MinuteSeries s = generate_synthetic(spec, 1);
    for (const auto& day : s.days)
        for (const auto& bar : day.bars) CHECK(bar.close == 123.0);
}

TEST_CASE("synthetic: same seed is bit-identical, different seed differs") {
    SyntheticSpec spec;
    spec.n_days = 2;
    const MinuteSeries a = generate_synthetic(spec, 77);
    const MinuteSeries b = generate_synthetic(spec, 77);
    const MinuteSeries c = generate_synthetic(spec, 78);
    REQUIRE(a.days.size() == b.days.size());
    bool identical = true, differs = false;
    for (std::size_t d = 0; d < a.days.size(); ++d)
        for (std::size_t i = 0; i < a.days[d].bars.size(); ++i) {
            identical &= a.days[d].bars[i].close == b.days[d].bars[i].close;
            differs |= a.days[d].bars[i].close != c.days[d].bars[i].close;
        }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("synthetic: random-walk log-return std near the configured vol") {
    SyntheticSpec spec;
    spec.n_days = 10;
    spec.drift_per_min = 0.0;
    spec.vol_per_min = 0.0005;
    const MinuteSeries s = generate_synthetic(spec, 5);
    // oracle: sample std over all consecutive log returns
    double sum = 0.0, ss = 0.0;
    int n = 0;
    double prev = 0.0;
    bool have_prev = false;
    for (const auto& day : s.days)
        for (const auto& bar : day.bars) {
            const double lp = std::log(bar.close);
            if (have_prev) {
                const double r = lp - prev;
                sum += r;
                ss += r * r;
                ++n;
            }
            prev = lp;
            have_prev = true;
        }
    const double mean = sum / n;
    const double sd = std::sqrt((ss - n * mean * mean) / (n - 1));
    CHECK(sd == doctest::Approx(0.0005).epsilon(0.20));
}

TEST_CASE("synthetic: invalid specs rejected") {
    SyntheticSpec bad_base;
    bad_base.base_price = 0.0;
    CHECK_THROWS_AS(generate_synthetic(bad_base, 1), ValidationError);

    SyntheticSpec amp_too_big;
    amp_too_big.regime = SyntheticSpec::Regime::sinusoid;
    amp_too_big.base_price = 100.0;
    amp_too_big.amplitude = 100.0;
    CHECK_THROWS_AS(generate_synthetic(amp_too_big, 1), ValidationError);
}

TEST_CASE("synthetic: weekday dates, strictly increasing") {
    SyntheticSpec spec;
    spec.n_days = 8;
    spec.start_date = Date{2020, 1, 3}; // a Friday
    const MinuteSeries s = generate_synthetic(spec, 3);
    for (std::size_t d = 0; d < s.days.size(); ++d) {
        CHECK(weekday(s.days[d].date) < 5);
        if (d > 0) CHECK(s.days[d - 1].date < s.days[d].date);
    }
}

TEST_CASE("calendar file: one date per line with comments") {
    const auto p = temp_file("calendar.txt");
    write_text(p, "# earnings\n2020-01-07\n\n2020-01-09\n");
    const SessionCalendar cal = load_calendar(p.string());
    CHECK(cal.excluded_dates.size() == 2);
    CHECK(cal.excluded_dates.count(Date{2020, 1, 7}) == 1);
    CHECK(cal.excluded_dates.count(Date{2020, 1, 9}) == 1);
}

} // TEST_SUITE
