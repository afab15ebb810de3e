#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asicval {

// UTC calendar date.
using Date = std::chrono::sys_days;

inline constexpr double kDaysPerYear = 365.0;

// Parses YYYY-MM-DD. Returns nullopt on anything else.
std::optional<Date> parse_iso_date(std::string_view text);
std::string format_date(Date date);

// Dated observations with strictly increasing dates.
struct DatedSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const { return dates.size(); }
    bool empty() const { return dates.empty(); }

    // Observations with start <= date <= end.
    DatedSeries window(std::optional<Date> start, std::optional<Date> end) const;

    // Value on the given date, if observed.
    std::optional<double> at(Date date) const;
};

// Price and hash-rate observations restricted to dates present in both.
struct AlignedHistory {
    std::vector<Date> dates;
    std::vector<double> prices;
    std::vector<double> hash_rates;

    std::size_t size() const { return dates.size(); }
};

struct MarketHistory {
    DatedSeries prices;      // USD per coin
    DatedSeries hash_rates;  // hashes/second

    AlignedHistory aligned(std::optional<Date> start = {}, std::optional<Date> end = {}) const;
};

}  // namespace asicval
