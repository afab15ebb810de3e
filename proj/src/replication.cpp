#include "asicval/replication.hpp"

#include "asicval/asic_valuer.hpp"
#include "asicval/calibration.hpp"
#include "asicval/errors.hpp"
#include "asicval/lattice_pricer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace asicval {

ImitatingWeights imitating_weights(double price, double v_up, double v_down, const RandomWalkParams& walk) {
    if (!(price > 0.0))
        throw DomainError("price must be positive");
    const double spread = walk.up_factor - walk.down_factor;
    if (spread == 0.0)
        throw DegenerateLatticeError("degenerate lattice: Δ == δ");
    if (walk.gross_rate == 0.0)
        throw DomainError("gross rate of zero makes bond holdings undefined");
    return {(v_up - v_down) / (price * spread),
            (walk.up_factor * v_down - walk.down_factor * v_up) / (walk.gross_rate * spread)};
}

double imitating_value(const ImitatingWeights& weights, double price) {
    return weights.bonds + weights.coins * price;
}

std::vector<ImitationNode> imitation_table(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                                           const RandomWalkParams& walk) {
    const auto quote = opportunity_value(t, k, spot, asic, market, walk, true);
    const auto& lattice = *quote.lattice;
    std::vector<ImitationNode> nodes;
    for (Turn tau = k; tau <= t; ++tau) {
        for (Turn j = 0; j <= tau - k; ++j) {
            ImitationNode node;
            node.turn = tau;
            node.up_moves = j;
            node.price = LatticeState{k, tau, j, spot}.price(walk);
            node.value = lattice.at(tau, j);
            if (tau < t)
                node.weights = imitating_weights(node.price, lattice.at(tau + 1, j + 1), lattice.at(tau + 1, j), walk);
            nodes.push_back(node);
        }
    }
    return nodes;
}

RebalanceResult rebalance(const PortfolioState& current, const ImitatingWeights& target, Turn turn, double price,
                          double bond_growth, const TradingFees& fees) {
    if (!(fees.coin >= 0.0 && fees.coin < 1.0) || !(fees.bond >= 0.0 && fees.bond < 1.0))
        throw ValidationError("trading fees must lie in [0, 1)");
    const double accrued_bonds = current.bonds * bond_growth;
    const double value_before = accrued_bonds + current.coins * price;

    TradeRecord trade;
    trade.turn = turn;
    trade.coin_delta = target.coins - current.coins;
    trade.bond_delta = target.bonds - accrued_bonds;
    trade.coin_fee = fees.coin * std::fabs(trade.coin_delta) * price;
    trade.bond_fee = fees.bond * std::fabs(trade.bond_delta);

    const double value_after = imitating_value(target, price);
    trade.cash_injection = value_after + trade.coin_fee + trade.bond_fee - value_before;
    return {{turn, target.coins, target.bonds, value_after}, trade};
}

namespace {

class VolatilityEstimator {
public:
    explicit VolatilityEstimator(const ReplicationSetup& setup) : setup_(setup) {}

    double at(Date date) {
        if (setup_.fixed_sigma)
            return *setup_.fixed_sigma;
        if (auto it = cache_.find(date); it != cache_.end())
            return it->second;
        const auto window = setup_.volatility_history.window(setup_.volatility_start, date);
        const double sigma = annualized_volatility(window);
        cache_.emplace(date, sigma);
        return sigma;
    }

private:
    const ReplicationSetup& setup_;
    std::map<Date, double> cache_;
};

Turn effective_lifetime(const AsicSpec& asic) {
    Turn n = 0;
    while (n < asic.lifetime_horizon() && mortality_weight(asic.mortality(), n) >= kMortalityCutoff)
        ++n;
    return n;
}

double realized_payoff(Turn u, const AlignedHistory& history, const AsicSpec& asic, const MarketModel& market) {
    const auto row = static_cast<std::size_t>(u);
    const double h = asic.hash_rate();
    const double coins = h / (history.hash_rates[row] + h) * net_block_reward_at(market, u);
    const double v = coins * history.prices[row] - activation_cost(u, asic, market);
    return v > 0.0 ? v : 0.0;
}

void require_coverage(const AlignedHistory& history, const AsicSpec& asic) {
    const Turn lifetime = effective_lifetime(asic);
    const Turn last = asic.reception_turn() + (lifetime > 0 ? lifetime - 1 : 0);
    if (history.size() == 0 || static_cast<Turn>(history.size()) <= last) {
        std::ostringstream os;
        os << "history has " << history.size() << " aligned rows but the ASIC needs turns 0.." << last;
        throw DataError(os.str());
    }
}

std::vector<double> cumulative(std::vector<double> deltas) {
    double running = 0.0;
    for (double& d : deltas) {
        running += d;
        d = running;
    }
    return deltas;
}

}  // namespace

BacktestReport simulate_replication(const AlignedHistory& history, const AsicSpec& asic, const MarketModel& market,
                                    const ReplicationSetup& setup) {
    if (setup.steps_per_opportunity < 1)
        throw ValidationError("steps per opportunity must be >= 1");
    require_coverage(history, asic);

    const std::size_t rows = history.size();
    BacktestReport report;
    report.dates = history.dates;
    report.asic_revenue.assign(rows, 0.0);
    std::vector<double> revenue(rows, 0.0);
    VolatilityEstimator volatility(setup);

    const Turn s = asic.reception_turn();
    const Turn lifetime = effective_lifetime(asic);
    for (Turn offset = 0; offset < lifetime; ++offset) {
        const Turn u = s + offset;
        const double weight = mortality_weight(asic.mortality(), offset);
        const double coins_at_u = reward_coins(u, asic, market);
        const double cost_at_u = activation_cost(u, asic, market);
        const TerminalPayoff payoff = [coins_at_u, cost_at_u](double p) {
            const double v = coins_at_u * p - cost_at_u;
            return v > 0.0 ? v : 0.0;
        };

        OpportunityReplication opp;
        opp.turn = u;
        opp.weight = weight;
        opp.realized_payoff = weight * realized_payoff(u, history, asic, market);

        if (u == 0) {
            const double v = weight * payoff(history.prices[0]);
            opp.initial_cost = v;
            opp.liquidation = v;
            revenue[0] += v;
        } else {
            const auto schedule = rebalance_schedule(0, u, setup.steps_per_opportunity);
            const auto steps = static_cast<Turn>(schedule.size());
            PortfolioState state;
            Turn previous = 0;
            for (Turn j = 0; j < steps; ++j) {
                const Turn tau = schedule[static_cast<std::size_t>(j)];
                const auto row = static_cast<std::size_t>(tau);
                const double price = history.prices[row];
                const Turn remaining = steps - j;
                const double step_years =
                    static_cast<double>(u - tau) / static_cast<double>(remaining) * setup.turn_length_years;
                const auto factors = crr_factors(volatility.at(history.dates[row]), step_years, 1);
                const RandomWalkParams walk{factors.up, factors.down, std::pow(1.0 + setup.annual_interest, step_years),
                                            std::nullopt};

                const double v_up = risk_neutral_sum(remaining - 1, walk.up_factor * price, walk, payoff);
                const double v_down = risk_neutral_sum(remaining - 1, walk.down_factor * price, walk, payoff);
                auto target = imitating_weights(price, v_up, v_down, walk);
                target.coins *= weight;
                target.bonds *= weight;
                if (target.coins < 0.0 && !setup.allow_short) {
                    std::ostringstream os;
                    os << "imitating portfolio for opportunity " << u << " needs a short coin position at turn " << tau;
                    throw DomainError(os.str());
                }

                const double growth =
                    std::pow(1.0 + setup.annual_interest, static_cast<double>(tau - previous) * setup.turn_length_years);
                auto [next, trade] = rebalance(state, target, tau, price, growth, setup.fees);
                if (j == 0) {
                    opp.initial_cost = trade.cash_injection;
                } else {
                    opp.injections += trade.cash_injection;
                    opp.max_abs_injection = std::max(opp.max_abs_injection, std::fabs(trade.cash_injection));
                    revenue[row] -= trade.cash_injection;
                }
                report.total_fees += trade.coin_fee + trade.bond_fee;
                report.trades.push_back(trade);
                state = next;
                previous = tau;
            }

            const auto row = static_cast<std::size_t>(u);
            const double growth =
                std::pow(1.0 + setup.annual_interest, static_cast<double>(u - previous) * setup.turn_length_years);
            auto [closed, trade] = rebalance(state, ImitatingWeights{}, u, history.prices[row], growth, setup.fees);
            opp.liquidation = -trade.cash_injection;
            revenue[row] -= trade.cash_injection;
            report.total_fees += trade.coin_fee + trade.bond_fee;
            report.trades.push_back(trade);
        }

        report.portfolio_initial_cost += opp.initial_cost;
        report.tracking_error += std::fabs(opp.liquidation - opp.realized_payoff);
        report.opportunities.push_back(opp);
    }

    report.portfolio_revenue = cumulative(std::move(revenue));
    return report;
}

BacktestReport asic_realized_revenue(const AlignedHistory& history, const AsicSpec& asic, const MarketModel& market,
                                     std::optional<double> initial_cost) {
    require_coverage(history, asic);
    const std::size_t rows = history.size();
    BacktestReport report;
    report.dates = history.dates;
    report.portfolio_revenue.assign(rows, 0.0);
    std::vector<double> revenue(rows, 0.0);

    const Turn s = asic.reception_turn();
    const Turn lifetime = effective_lifetime(asic);
    for (Turn offset = 0; offset < lifetime; ++offset) {
        const Turn u = s + offset;
        revenue[static_cast<std::size_t>(u)] +=
            mortality_weight(asic.mortality(), offset) * realized_payoff(u, history, asic, market);
    }
    report.asic_revenue = cumulative(std::move(revenue));
    report.asic_initial_cost = initial_cost.value_or(0.0);
    return report;
}

BacktestReport merge_legs(const BacktestReport& asic_leg, const BacktestReport& portfolio_leg) {
    if (asic_leg.dates != portfolio_leg.dates)
        throw DataError("backtest legs cover different dates");
    BacktestReport out = portfolio_leg;
    out.asic_revenue = asic_leg.asic_revenue;
    out.asic_initial_cost = asic_leg.asic_initial_cost;
    return out;
}

}  // namespace asicval
