#pragma once

#include "asicval/core_model.hpp"
#include "asicval/series.hpp"

#include <optional>
#include <vector>

namespace asicval {

// Coins and bonds (USD face at the current turn) of an imitating portfolio.
struct ImitatingWeights {
    double coins = 0.0;
    double bonds = 0.0;
};

// Holdings that match the opportunity in both successor states:
// coins = (V_up - V_down) / (P (up - down)),
// bonds = (up V_down - down V_up) / (r (up - down)).
ImitatingWeights imitating_weights(double price, double v_up, double v_down, const RandomWalkParams& walk);

// bonds + coins * price
double imitating_value(const ImitatingWeights& weights, double price);

// One lattice state of an opportunity with the portfolio held from it.
// Terminal states hold nothing: the portfolio is sold at expiry.
struct ImitationNode {
    Turn turn = 0;
    Turn up_moves = 0;
    double price = 0.0;
    double value = 0.0;
    ImitatingWeights weights;
};

// Every state of opportunity t from turn k onward, level by level.
std::vector<ImitationNode> imitation_table(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                                           const RandomWalkParams& walk);

struct PortfolioState {
    Turn turn = 0;
    double coins = 0.0;
    double bonds = 0.0;
    double mark_value = 0.0;  // bonds + coins * P at turn
};

struct TradeRecord {
    Turn turn = 0;
    double coin_delta = 0.0;
    double bond_delta = 0.0;
    double coin_fee = 0.0;  // USD
    double bond_fee = 0.0;  // USD
    // Cash paid into the portfolio to reach the target after fees; negative
    // when the trade releases cash.
    double cash_injection = 0.0;
};

using TradeLog = std::vector<TradeRecord>;

struct TradingFees {
    double coin = 0.0;  // fraction of |coin delta| * P
    double bond = 0.0;  // fraction of |bond delta|
};

struct RebalanceResult {
    PortfolioState state;
    TradeRecord trade;
};

// Accrues current bonds by bond_growth, marks the book at price and trades
// to target, charging proportional fees on traded notional.
RebalanceResult rebalance(const PortfolioState& current, const ImitatingWeights& target, Turn turn, double price,
                          double bond_growth, const TradingFees& fees);

struct ReplicationSetup {
    Turn steps_per_opportunity = 25;
    TradingFees fees;
    double annual_interest = 0.02;
    double turn_length_years = 1.0 / kDaysPerYear;
    // When set every re-rooted lattice uses this volatility; otherwise the
    // volatility is re-estimated from volatility_history up to each date.
    std::optional<double> fixed_sigma;
    DatedSeries volatility_history;
    std::optional<Date> volatility_start;
    bool allow_short = false;
};

struct OpportunityReplication {
    Turn turn = 0;
    double weight = 0.0;
    double initial_cost = 0.0;     // purchase plus fees
    double injections = 0.0;       // cash added after the purchase, fees included
    double max_abs_injection = 0.0;  // largest single |injection| after the purchase
    double liquidation = 0.0;      // proceeds at expiry, net of fees
    double realized_payoff = 0.0;  // weighted ASIC payoff at the realized price and hash-rate
};

// Cumulative realized revenue per date for the hardware and its imitating
// portfolio, both net of running costs.
struct BacktestReport {
    std::vector<Date> dates;
    std::vector<double> asic_revenue;
    std::vector<double> portfolio_revenue;
    double asic_initial_cost = 0.0;
    double portfolio_initial_cost = 0.0;
    double total_fees = 0.0;
    double tracking_error = 0.0;  // sum over opportunities of |liquidation - realized payoff|
    TradeLog trades;
    std::vector<OpportunityReplication> opportunities;

    double asic_total() const { return asic_revenue.empty() ? 0.0 : asic_revenue.back(); }
    double portfolio_total() const { return portfolio_revenue.empty() ? 0.0 : portfolio_revenue.back(); }
};

// Replicates every opportunity of the ASIC from the first history row.
// Row i of the slice is turn i. Each opportunity gets up to
// steps_per_opportunity rebalances equally spaced in lattice steps; at each
// one the lattice is re-rooted at the realized spot with the remaining steps.
// Only the portfolio leg of the report is filled.
BacktestReport simulate_replication(const AlignedHistory& history, const AsicSpec& asic, const MarketModel& market,
                                    const ReplicationSetup& setup);

// Realized mining revenue with per-turn shutdown, weighted by mortality.
// Only the ASIC leg of the report is filled.
BacktestReport asic_realized_revenue(const AlignedHistory& history, const AsicSpec& asic, const MarketModel& market,
                                     std::optional<double> initial_cost = {});

// ASIC leg from the first report, portfolio leg from the second.
BacktestReport merge_legs(const BacktestReport& asic_leg, const BacktestReport& portfolio_leg);

}  // namespace asicval
