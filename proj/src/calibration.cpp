#include "asicval/calibration.hpp"

#include "asicval/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace asicval {

double CalibrationContext::gross_rate_per_turn() const {
    return std::pow(1.0 + annual_interest, turn_length_years);
}

double CalibrationContext::gross_rate_per_step() const {
    return std::pow(1.0 + annual_interest, step_length_years());
}

void check_context(const CalibrationContext& context) {
    if (!(context.annual_volatility >= 0.0) || !std::isfinite(context.annual_volatility))
        throw ValidationError("annual volatility must be >= 0");
    if (context.lattice_steps < 1)
        throw ValidationError("lattice steps must be >= 1");
    if (!(context.calendar_horizon_years > 0.0))
        throw ValidationError("calendar horizon must be positive");
    if (!(context.turn_length_years > 0.0))
        throw ValidationError("turn length must be positive");
    if (!(context.annual_interest > -1.0))
        throw ValidationError("annual interest must exceed -100%");
}

double annualized_volatility(const DatedSeries& prices) {
    const std::size_t n = prices.size();
    if (n < 3)
        throw DataError("volatility needs at least 3 observations");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(prices.values[i] > 0.0))
            throw DataError("volatility input has a non-positive price on " + format_date(prices.dates[i]));
        if (i > 0 && prices.dates[i] <= prices.dates[i - 1])
            throw DataError("volatility input dates are not strictly increasing at " + format_date(prices.dates[i]));
    }

    std::vector<double> returns(n - 1);
    double mean = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        returns[i - 1] = std::log(prices.values[i] / prices.values[i - 1]);
        mean += returns[i - 1];
    }
    mean /= static_cast<double>(returns.size());
    double ss = 0.0;
    for (double x : returns)
        ss += (x - mean) * (x - mean);
    const double stdev = std::sqrt(ss / static_cast<double>(returns.size() - 1));

    const double span_days = static_cast<double>((prices.dates.back() - prices.dates.front()).count());
    const double mean_spacing_days = span_days / static_cast<double>(n - 1);
    return stdev * std::sqrt(kDaysPerYear / mean_spacing_days);
}

CrrFactors crr_factors(double sigma, double years, Turn steps) {
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw CalibrationError("volatility must be finite and non-negative");
    if (sigma == 0.0)
        throw CalibrationError("zero volatility gives Δ = δ = 1, which violates the model's no-arbitrage ordering");
    if (!(years > 0.0))
        throw CalibrationError("calendar horizon must be positive");
    if (steps < 1)
        throw CalibrationError("lattice needs at least one step");
    double up = std::exp(sigma * std::sqrt(years / static_cast<double>(steps)));
    // Step up by ulps until up * (1 / up) rounds to exactly 1.
    for (int i = 0; i < 64 && up * (1.0 / up) != 1.0; ++i)
        up = std::nextafter(up, std::numeric_limits<double>::infinity());
    return {up, 1.0 / up};
}

RandomWalkParams calibrated_walk(const CalibrationContext& context) {
    check_context(context);
    const auto f = crr_factors(context.annual_volatility, context.calendar_horizon_years, context.lattice_steps);
    return {f.up, f.down, context.gross_rate_per_step(), std::nullopt};
}

GrowthFit exp_growth_fit(std::span<const double> turns, std::span<const double> hash_rates) {
    if (turns.size() != hash_rates.size())
        throw DataError("growth fit: turn and hash-rate counts differ");
    const std::size_t n = turns.size();
    if (n < 2)
        throw DataError("growth fit needs at least 2 observations");

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(hash_rates[i] > 0.0) || !std::isfinite(hash_rates[i])) {
            std::ostringstream os;
            os << "growth fit: non-positive hash-rate at observation " << i;
            throw DataError(os.str());
        }
        mean_x += turns[i];
        mean_y += std::log(hash_rates[i]);
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = turns[i] - mean_x;
        sxx += dx * dx;
        sxy += dx * (std::log(hash_rates[i]) - mean_y);
    }
    if (sxx == 0.0)
        throw DataError("growth fit: all observations share one turn");
    const double slope = sxy / sxx;
    return {std::exp(mean_y - slope * mean_x), slope};
}

GrowthFit exp_growth_fit(const DatedSeries& hash_rates, Date origin, double turns_per_day) {
    std::vector<double> turns;
    turns.reserve(hash_rates.size());
    for (Date d : hash_rates.dates)
        turns.push_back(static_cast<double>((d - origin).count()) * turns_per_day);
    return exp_growth_fit(turns, hash_rates.values);
}

Turn TurnGrid::turn_of(Date origin, Date date) const {
    return static_cast<Turn>(std::llround(static_cast<double>((date - origin).count()) * turns_per_day));
}

TurnGrid turn_grid(Date start, Date end, double turns_per_day, double annual_interest, double sigma,
                   Turn steps_per_opportunity) {
    const auto days = (end - start).count();
    if (days <= 0)
        throw DataError("turn grid: calendar window must have positive length");
    if (!(turns_per_day > 0.0))
        throw ValidationError("turns per day must be positive");
    if (steps_per_opportunity < 1)
        throw ValidationError("steps per opportunity must be >= 1");

    TurnGrid grid;
    grid.turns_per_day = turns_per_day;
    grid.turns = static_cast<Turn>(std::llround(static_cast<double>(days) * turns_per_day));
    if (grid.turns < 1)
        throw DataError("turn grid: window shorter than one turn");
    grid.context.annual_volatility = sigma;
    grid.context.calendar_horizon_years = static_cast<double>(days) / kDaysPerYear;
    grid.context.lattice_steps = grid.turns;
    grid.context.annual_interest = annual_interest;
    grid.context.turn_length_years = 1.0 / (kDaysPerYear * turns_per_day);
    check_context(grid.context);
    grid.rebalance_turns = rebalance_schedule(0, grid.turns, steps_per_opportunity);
    return grid;
}

std::vector<Turn> rebalance_schedule(Turn start, Turn expiry, Turn steps) {
    if (expiry < start)
        throw DomainError("rebalance schedule: expiry before start");
    if (steps < 1)
        throw DomainError("rebalance schedule: steps must be >= 1");
    const Turn span = expiry - start;
    const Turn m = std::min(steps, span);
    std::vector<Turn> out;
    out.reserve(static_cast<std::size_t>(m));
    for (Turn j = 0; j < m; ++j)
        out.push_back(start + (j * span) / m);
    return out;
}

}  // namespace asicval
