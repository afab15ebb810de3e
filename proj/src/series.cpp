#include "asicval/series.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace asicval {

namespace {

bool parse_int(std::string_view s, int& out) {
    if (s.empty())
        return false;
    for (char c : s)
        if (c < '0' || c > '9')
            return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        return std::nullopt;
    int y = 0;
    int m = 0;
    int d = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d))
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        return std::nullopt;
    return Date{ymd};
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

DatedSeries DatedSeries::window(std::optional<Date> start, std::optional<Date> end) const {
    DatedSeries out;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (start && dates[i] < *start)
            continue;
        if (end && dates[i] > *end)
            continue;
        out.dates.push_back(dates[i]);
        out.values.push_back(values[i]);
    }
    return out;
}

std::optional<double> DatedSeries::at(Date date) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), date);
    if (it == dates.end() || *it != date)
        return std::nullopt;
    return values[static_cast<std::size_t>(it - dates.begin())];
}

AlignedHistory MarketHistory::aligned(std::optional<Date> start, std::optional<Date> end) const {
    AlignedHistory out;
    std::size_t j = 0;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        const Date d = prices.dates[i];
        if ((start && d < *start) || (end && d > *end))
            continue;
        while (j < hash_rates.size() && hash_rates.dates[j] < d)
            ++j;
        if (j < hash_rates.size() && hash_rates.dates[j] == d) {
            out.dates.push_back(d);
            out.prices.push_back(prices.values[i]);
            out.hash_rates.push_back(hash_rates.values[j]);
        }
    }
    return out;
}

}  // namespace asicval
