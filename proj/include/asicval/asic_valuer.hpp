#pragma once

#include "asicval/calibration.hpp"
#include "asicval/core_model.hpp"
#include "asicval/lattice_pricer.hpp"

#include <string>
#include <vector>

namespace asicval {

// Survival weights below this are treated as the end of the hardware's life.
inline constexpr double kMortalityCutoff = 1e-9;

struct OpportunityContribution {
    Turn turn = 0;
    double weight = 0.0;  // M(turn - s)
    double value = 0.0;   // V(turn, t, P_t)
};

struct AsicQuote {
    Turn valuation_turn = 0;
    Turn reception_turn = 0;
    double spot = 0.0;
    double value = 0.0;
    std::vector<OpportunityContribution> breakdown;
};

struct SweepPoint {
    double axis = 0.0;
    double value = 0.0;
    double percent_change = 0.0;
};

struct SweepResult {
    std::string axis_label;  // "volatility" | "delay" | "date"
    std::vector<SweepPoint> points;
    SweepPoint baseline;
};

// Sum over u in [s, s + lifetime) of M(u - s) * V(u, t, P_t), stopping early
// once M drops below kMortalityCutoff. Each V comes from the closed form,
// falling back to backward induction if the closed form is not finite.
AsicQuote asic_value(Turn s, Turn t, double spot, const AsicSpec& asic, const MarketModel& market,
                     const RandomWalkParams& walk);

// A(s_delayed, t, P_t) - A(s, t, P_t). Negative numbers are losses.
double reception_delay_loss(Turn s, Turn s_delayed, Turn t, double spot, const AsicSpec& asic,
                            const MarketModel& market, const RandomWalkParams& walk);

// Deterministic baseline: the spot is assumed to drift by growth_rate per
// turn and each turn's drifted payoff is discounted at gross_rate. The only
// optionality kept is the per-turn shutdown.
double naive_expected_value(Turn s, Turn t, double spot, double growth_rate, double gross_rate, const AsicSpec& asic,
                            const MarketModel& market);

// (q * v_up + (1 - q) * v_down) / r
double naive_branch_average(double v_up, double v_down, double q, double gross_rate);

// Recalibrates the walk for each sigma and revalues the ASIC at turn 0 from
// the market spot. Percent changes are relative to the first grid point.
SweepResult volatility_sweep(const std::vector<double>& sigma_grid, const CalibrationContext& context,
                             const AsicSpec& asic, const MarketModel& market);

// Percent change of A(s + d, t, P_t) against A(s, t, P_t) for each delay d.
SweepResult delay_sweep(const std::vector<Turn>& delay_grid, Turn s, Turn t, double spot, const AsicSpec& asic,
                        const MarketModel& market, const RandomWalkParams& walk);

}  // namespace asicval
