#pragma once

#include "asicval/core_model.hpp"
#include "asicval/series.hpp"

#include <span>
#include <vector>

namespace asicval {

// Calendar conventions behind a lattice: sigma per sqrt(year), a calendar
// horizon split into lattice_steps steps, annual interest and the length of
// one turn in years.
struct CalibrationContext {
    double annual_volatility = 0.0;
    double calendar_horizon_years = 0.0;
    Turn lattice_steps = 1;
    double annual_interest = 0.0;
    double turn_length_years = 1.0 / kDaysPerYear;

    double step_length_years() const { return calendar_horizon_years / static_cast<double>(lattice_steps); }
    // (1 + eta)^turn_length
    double gross_rate_per_turn() const;
    // (1 + eta)^(horizon / steps)
    double gross_rate_per_step() const;
};

// Throws ValidationError on sigma < 0, steps < 1, horizon <= 0 or a
// non-positive turn length.
void check_context(const CalibrationContext& context);

inline constexpr int kDefaultVolatilityStartYear = 2013;

// Sample standard deviation of log-returns, annualized by the mean spacing
// between observations (365-day year). Gaps are not imputed.
double annualized_volatility(const DatedSeries& prices);

struct CrrFactors {
    double up = 0.0;
    double down = 0.0;
};

// up = exp(sigma * sqrt(years / steps)), down = 1 / up.
CrrFactors crr_factors(double sigma, double years, Turn steps);

// Factors from the context plus the per-step gross rate.
RandomWalkParams calibrated_walk(const CalibrationContext& context);

struct GrowthFit {
    double initial = 0.0;          // fitted H at turn 0
    double growth_per_turn = 0.0;  // slope of ln H
};

// Least-squares line through (turn, ln H).
GrowthFit exp_growth_fit(std::span<const double> turns, std::span<const double> hash_rates);

// Same fit with turns measured from origin at turns_per_day per calendar day.
GrowthFit exp_growth_fit(const DatedSeries& hash_rates, Date origin, double turns_per_day);

struct TurnGrid {
    CalibrationContext context;
    Turn turns = 0;
    double turns_per_day = 1.0;
    // Rebalance turns for an opportunity expiring at the end of the window.
    std::vector<Turn> rebalance_turns;

    Turn turn_of(Date origin, Date date) const;
};

TurnGrid turn_grid(Date start, Date end, double turns_per_day, double annual_interest, double sigma,
                   Turn steps_per_opportunity);

// min(steps, expiry - start) turns equally spaced in lattice steps,
// beginning at start and strictly before expiry.
std::vector<Turn> rebalance_schedule(Turn start, Turn expiry, Turn steps);

}  // namespace asicval
