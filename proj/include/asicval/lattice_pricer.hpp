#pragma once

#include "asicval/core_model.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace asicval {

enum class PricingMethod { induction, closed_form, oracle };

std::string_view to_string(PricingMethod method);

// Opportunity values over every recombining state between turns k and t.
// levels[i] holds the i+1 values at turn k + i; entry j is the state reached
// with j up moves.
struct ValueLattice {
    Turn valuation_turn = 0;
    Turn opportunity_turn = 0;
    double root_price = 0.0;
    std::vector<std::vector<double>> levels;

    double at(Turn turn, Turn up_moves) const;
};

struct OpportunityQuote {
    Turn opportunity_turn = 0;
    Turn valuation_turn = 0;
    double spot = 0.0;
    double value = 0.0;
    PricingMethod method = PricingMethod::induction;
    std::optional<ValueLattice> lattice;
};

// One-step risk-neutral discount weights: V = up * V_up + down * V_down.
// up = kappa_up = kappa_down + 1/r and down = -kappa_down with
// kappa_down = (1 - up_factor/r) / (up_factor - down_factor).
struct RiskNeutralWeights {
    double up = 0.0;
    double down = 0.0;

    double kappa_down() const { return -down; }
    double kappa_up() const { return up; }
};

RiskNeutralWeights risk_neutral_weights(const RandomWalkParams& walk);

// Coins earned by activating at turn t: h / (H(t) + h) * B'(t).
double reward_coins(Turn t, const AsicSpec& asic, const MarketModel& market);

// Strike of opportunity t in USD: h * phi * e(t).
double activation_cost(Turn t, const AsicSpec& asic, const MarketModel& market);

// Value of the t-th opportunity at its own turn given the realized price.
double immediate_value(Turn t, double price, const AsicSpec& asic, const MarketModel& market);

// Coins to short at price P so that opportunity-minus-coins is riskless over
// one step whose successor values are v_up and v_down.
double short_amount(double price, double v_up, double v_down, const RandomWalkParams& walk);

// Arbitrage-free value one step before states worth v_up and v_down.
double one_step_value(double v_up, double v_down, const RandomWalkParams& walk);

// Backward induction over the recombining tree. O((t-k)^2) time, O(t-k)
// memory unless keep_lattice is set.
OpportunityQuote opportunity_value(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                                   const RandomWalkParams& walk, bool keep_lattice = false);

// Closed-form sum over terminal states from the first in-the-money state
// upward, evaluated in log space. O(t-k).
OpportunityQuote closed_form_value(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                                   const RandomWalkParams& walk);

// Number of up moves of the first terminal state with positive value,
// clamped to [0, t-k]; t-k+1 when no terminal state has value.
Turn closed_form_cutoff(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                        const RandomWalkParams& walk);

inline constexpr Turn kOracleDepthLimit = 25;

// Enumerates all 2^(t-k) price paths under the risk-neutral probability.
// Refuses depths above kOracleDepthLimit.
double path_oracle_value(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                         const RandomWalkParams& walk);

// ---------------------------------------------------------------------------
// Payoff-generic building blocks, shared with the replication engine.

using TerminalPayoff = std::function<double(double price)>;

ValueLattice induction_lattice(Turn depth, double root_price, const RandomWalkParams& walk,
                               const TerminalPayoff& payoff, bool keep_levels);

// sum_{j=first..depth} C(depth, j) up^j down^(depth-j) payoff(P * u^j d^(depth-j)),
// binomials and weights accumulated in log space with sign tracking.
double risk_neutral_sum(Turn depth, double root_price, const RandomWalkParams& walk, const TerminalPayoff& payoff,
                        Turn first = 0);

}  // namespace asicval
