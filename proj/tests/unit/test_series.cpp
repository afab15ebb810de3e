#include "doctest.h"

#include "asicval/series.hpp"

using namespace asicval;
using namespace std::chrono;

TEST_SUITE("series") {

TEST_CASE("ISO dates") {
    const auto d = parse_iso_date("2017-06-01");
    REQUIRE(d.has_value());
    CHECK(*d == Date{year{2017} / 6 / 1});
    CHECK(format_date(*d) == "2017-06-01");
    CHECK(parse_iso_date("2020-02-29").has_value());
    CHECK_FALSE(parse_iso_date("2019-02-29").has_value());
    CHECK_FALSE(parse_iso_date("2019-13-01").has_value());
    CHECK_FALSE(parse_iso_date("2019-1-01").has_value());
    CHECK_FALSE(parse_iso_date("2019-01-01T00").has_value());
    CHECK_FALSE(parse_iso_date("+019-01-01").has_value());
    CHECK_FALSE(parse_iso_date("").has_value());
}

TEST_CASE("windows and lookups") {
    DatedSeries s;
    for (int i = 0; i < 10; ++i) {
        s.dates.push_back(Date{year{2018} / 1 / 1} + days{i});
        s.values.push_back(i);
    }
    const auto w = s.window(Date{year{2018} / 1 / 3}, Date{year{2018} / 1 / 5});
    CHECK(w.size() == 3);
    CHECK(w.values.front() == 2.0);
    CHECK(s.window(std::nullopt, std::nullopt).size() == 10);
    CHECK(s.at(Date{year{2018} / 1 / 4}) == 3.0);
    CHECK_FALSE(s.at(Date{year{2019} / 1 / 4}).has_value());
}

TEST_CASE("aligned history keeps dates present in both series") {
    MarketHistory h;
    for (int i = 0; i < 6; ++i) {
        h.prices.dates.push_back(Date{year{2018} / 1 / 1} + days{i});
        h.prices.values.push_back(100 + i);
    }
    for (int i : {1, 2, 4, 5, 7}) {
        h.hash_rates.dates.push_back(Date{year{2018} / 1 / 1} + days{i});
        h.hash_rates.values.push_back(1000 + i);
    }
    const auto a = h.aligned();
    CHECK(a.size() == 4);
    CHECK(a.prices == std::vector<double>{101, 102, 104, 105});
    CHECK(a.hash_rates == std::vector<double>{1001, 1002, 1004, 1005});
    CHECK(h.aligned(Date{year{2018} / 1 / 3}, std::nullopt).size() == 3);
}

}
